#ifndef FAIRMESH_IO_HPP
#define FAIRMESH_IO_HPP

// ASCII OBJ / PLY meshes, normal-field text files, key=value reports and CSV
// histograms. Every writer goes through a temporary file that is renamed on
// success, so a failed write never leaves a partial output behind.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fairmesh/mesh.hpp"
#include "fairmesh/metrics.hpp"

namespace fairmesh::io {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MeshData {
    Mesh mesh;
    /// Present when the file carried per-vertex normals (PLY nx/ny/nz).
    std::optional<NormalField> vertex_normals;
};

namespace detail {

inline std::string lower_ext(const std::filesystem::path &p) {
    std::string e = p.extension().string();
    for (char &c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e;
}

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string fmt_vec(const Vec3 &v) { return fmt_double(v.x()) + " " + fmt_double(v.y()) + " " + fmt_double(v.z()); }

inline double parse_double(const std::string &tok, const std::string &where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception &) {
        throw IoError(where + ": expected a number, got '" + tok + "'");
    }
}

inline long long parse_int(const std::string &tok, const std::string &where) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception &) {
        throw IoError(where + ": expected an integer, got '" + tok + "'");
    }
}

inline std::vector<std::string> split(const std::string &line) {
    std::istringstream is(line);
    std::vector<std::string> out;
    for (std::string t; is >> t;) out.push_back(std::move(t));
    return out;
}

inline std::ifstream open_in(const std::filesystem::path &p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
    return in;
}

}  // namespace detail

/// Writes `content` to `path` atomically (temp file + rename).
inline void write_text_atomic(const std::filesystem::path &path, const std::string &content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw IoError("failed writing '" + path.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot move output into place at '" + path.string() + "': " + ec.message());
    }
}

// ---------------------------------------------------------------------------
// OBJ

inline MeshData parse_obj(std::istream &in, const std::string &name = "<obj>") {
    std::vector<Vec3> vs;
    std::vector<Face> fs;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const auto tok = detail::split(line);
        if (tok.empty()) continue;
        const std::string where = name + ":" + std::to_string(lineno);
        if (tok[0] == "v") {
            if (tok.size() < 4) throw IoError(where + ": vertex line needs three coordinates");
            vs.emplace_back(detail::parse_double(tok[1], where), detail::parse_double(tok[2], where),
                            detail::parse_double(tok[3], where));
        } else if (tok[0] == "f") {
            if (tok.size() != 4)
                throw IoError(where + ": face has " + std::to_string(tok.size() - 1) +
                              " vertices; only triangles are supported");
            Face f{};
            for (std::size_t k = 0; k < 3; ++k) {
                const std::string idx = tok[k + 1].substr(0, tok[k + 1].find('/'));
                long long i = detail::parse_int(idx, where);
                if (i < 0) i += static_cast<long long>(vs.size()) + 1;
                if (i < 1) throw IoError(where + ": invalid vertex index " + idx);
                f[k] = static_cast<std::size_t>(i - 1);
            }
            fs.push_back(f);
        }
        // vn, vt, o, g, s, usemtl, mtllib: ignored
    }
    try {
        return {build_mesh(std::move(vs), std::move(fs)), std::nullopt};
    } catch (const MeshError &e) {
        throw IoError(name + ": " + e.what());
    }
}

inline std::string format_obj(const Mesh &m) {
    std::string out;
    out.reserve(m.num_vertices() * 64 + m.num_faces() * 24);
    for (const Vec3 &v : m.vertices()) out += "v " + detail::fmt_vec(v) + "\n";
    for (const Face &f : m.faces())
        out += "f " + std::to_string(f[0] + 1) + " " + std::to_string(f[1] + 1) + " " + std::to_string(f[2] + 1) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// ASCII PLY

inline MeshData parse_ply(std::istream &in, const std::string &name = "<ply>") {
    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<std::string> props;  // scalar property names; "list:<name>" for lists
    };
    std::vector<Element> elements;
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&](std::string &l) {
        if (!std::getline(in, l)) return false;
        ++lineno;
        if (!l.empty() && l.back() == '\r') l.pop_back();
        return true;
    };
    auto where = [&] { return name + ":" + std::to_string(lineno); };

    if (!next_line(line) || line != "ply") throw IoError(name + ": missing 'ply' magic");
    bool ascii = false;
    while (true) {
        if (!next_line(line)) throw IoError(name + ": unterminated header");
        const auto tok = detail::split(line);
        if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "end_header") break;
        if (tok[0] == "format") {
            if (tok.size() < 2 || tok[1] != "ascii") throw IoError(where() + ": only ASCII PLY is supported");
            ascii = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw IoError(where() + ": malformed element line");
            elements.push_back({tok[1], static_cast<std::size_t>(detail::parse_int(tok[2], where())), {}});
        } else if (tok[0] == "property") {
            if (elements.empty()) throw IoError(where() + ": property before any element");
            if (tok.size() >= 5 && tok[1] == "list") elements.back().props.push_back("list:" + tok[4]);
            else if (tok.size() == 3) elements.back().props.push_back(tok[2]);
            else throw IoError(where() + ": malformed property line");
        } else {
            throw IoError(where() + ": unknown header keyword '" + tok[0] + "'");
        }
    }
    if (!ascii) throw IoError(name + ": missing format line");

    std::vector<Vec3> vs, ns;
    std::vector<Face> fs;
    bool have_normals = false;
    for (const Element &el : elements) {
        auto prop_index = [&](const std::string &p) -> int {
            for (std::size_t i = 0; i < el.props.size(); ++i)
                if (el.props[i] == p) return static_cast<int>(i);
            return -1;
        };
        if (el.name == "vertex") {
            const int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
            const int inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
            if (ix < 0 || iy < 0 || iz < 0) throw IoError(name + ": vertex element lacks x/y/z");
            have_normals = inx >= 0 && iny >= 0 && inz >= 0;
            for (std::size_t i = 0; i < el.count; ++i) {
                if (!next_line(line)) throw IoError(name + ": unexpected end of file in vertex data");
                const auto tok = detail::split(line);
                if (tok.size() < el.props.size()) throw IoError(where() + ": too few vertex properties");
                vs.emplace_back(detail::parse_double(tok[ix], where()), detail::parse_double(tok[iy], where()),
                                detail::parse_double(tok[iz], where()));
                if (have_normals)
                    ns.emplace_back(detail::parse_double(tok[inx], where()), detail::parse_double(tok[iny], where()),
                                    detail::parse_double(tok[inz], where()));
            }
        } else if (el.name == "face") {
            if (el.props.empty() || el.props[0].rfind("list:", 0) != 0)
                throw IoError(name + ": face element must start with a vertex index list");
            for (std::size_t i = 0; i < el.count; ++i) {
                if (!next_line(line)) throw IoError(name + ": unexpected end of file in face data");
                const auto tok = detail::split(line);
                if (tok.empty()) throw IoError(where() + ": empty face line");
                const long long n = detail::parse_int(tok[0], where());
                if (n != 3) throw IoError(where() + ": face has " + std::to_string(n) + " vertices; only triangles are supported");
                if (tok.size() < 4) throw IoError(where() + ": truncated face line");
                Face f{};
                for (std::size_t k = 0; k < 3; ++k) {
                    const long long idx = detail::parse_int(tok[k + 1], where());
                    if (idx < 0) throw IoError(where() + ": negative vertex index");
                    f[k] = static_cast<std::size_t>(idx);
                }
                fs.push_back(f);
            }
        } else {
            for (std::size_t i = 0; i < el.count; ++i)
                if (!next_line(line)) throw IoError(name + ": unexpected end of file in element '" + el.name + "'");
        }
    }
    MeshData out;
    try {
        out.mesh = build_mesh(std::move(vs), std::move(fs));
    } catch (const MeshError &e) {
        throw IoError(name + ": " + e.what());
    }
    if (have_normals) out.vertex_normals = NormalField::from_values(NormalField::Domain::Vertex, std::move(ns));
    return out;
}

inline std::string format_ply(const Mesh &m, const NormalField *vertex_normals = nullptr) {
    const bool with_n = vertex_normals && vertex_normals->size() == m.num_vertices();
    std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(m.num_vertices()) +
                      "\nproperty double x\nproperty double y\nproperty double z\n";
    if (with_n) out += "property double nx\nproperty double ny\nproperty double nz\n";
    out += "element face " + std::to_string(m.num_faces()) + "\nproperty list uchar int vertex_indices\nend_header\n";
    for (std::size_t i = 0; i < m.num_vertices(); ++i) {
        out += detail::fmt_vec(m.vertex(i));
        if (with_n) out += " " + detail::fmt_vec((*vertex_normals)[i]);
        out += "\n";
    }
    for (const Face &f : m.faces())
        out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
    return out;
}

inline MeshData read_mesh_data(const std::filesystem::path &path) {
    const std::string ext = detail::lower_ext(path);
    auto in = detail::open_in(path);
    if (ext == ".obj") return parse_obj(in, path.string());
    if (ext == ".ply") return parse_ply(in, path.string());
    throw IoError("unsupported mesh format '" + ext + "' (expected .obj or .ply)");
}

inline Mesh read_mesh(const std::filesystem::path &path) { return read_mesh_data(path).mesh; }

inline bool is_mesh_path(const std::filesystem::path &path) {
    const std::string ext = detail::lower_ext(path);
    return ext == ".obj" || ext == ".ply";
}

inline void write_mesh(const Mesh &m, const std::filesystem::path &path) {
    const std::string ext = detail::lower_ext(path);
    if (ext == ".obj") return write_text_atomic(path, format_obj(m));
    if (ext == ".ply") return write_text_atomic(path, format_ply(m));
    throw IoError("unsupported mesh format '" + ext + "' (expected .obj or .ply)");
}

// ---------------------------------------------------------------------------
// Normal fields: one "nx ny nz" per line; blank lines and '#' comments skipped.

inline NormalField parse_normal_field(std::istream &in, std::size_t expected_len, const std::string &name = "<normals>",
                                      NormalField::Domain domain = NormalField::Domain::Vertex) {
    std::vector<Vec3> vs;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const auto tok = detail::split(line);
        if (tok.empty()) continue;
        const std::string where = name + ":" + std::to_string(lineno);
        if (tok.size() != 3) throw IoError(where + ": expected 3 components, got " + std::to_string(tok.size()));
        Vec3 n(detail::parse_double(tok[0], where), detail::parse_double(tok[1], where), detail::parse_double(tok[2], where));
        if (!n.allFinite()) throw IoError(where + ": non-finite normal");
        if (n.norm() < 1e-12) throw IoError(where + ": zero-length normal");
        vs.push_back(n.normalized());
    }
    if (vs.size() != expected_len)
        throw IoError(name + ": expected " + std::to_string(expected_len) + " normals, found " + std::to_string(vs.size()));
    NormalField nf;
    nf.domain = domain;
    nf.values = std::move(vs);
    nf.valid.assign(nf.values.size(), 1);
    return nf;
}

inline NormalField read_normal_field(const std::filesystem::path &path, std::size_t expected_len) {
    auto in = detail::open_in(path);
    return parse_normal_field(in, expected_len, path.string());
}

inline std::string format_normal_field(const NormalField &nf) {
    std::string out;
    for (const Vec3 &n : nf.values) out += detail::fmt_vec(n) + "\n";
    return out;
}

inline void write_normal_field(const NormalField &nf, const std::filesystem::path &path) {
    write_text_atomic(path, format_normal_field(nf));
}

// ---------------------------------------------------------------------------
// key=value records

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline std::string format_key_values(const KeyValues &kv) {
    std::string out;
    for (const auto &[k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

/// Parses key=value lines; blank lines and '#' comments are skipped, whitespace around keys and values trimmed.
inline std::map<std::string, std::string> parse_key_values(std::istream &in, const std::string &name = "<config>") {
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    std::map<std::string, std::string> out;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            throw IoError(name + ":" + std::to_string(lineno) + ": expected key=value");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

inline std::map<std::string, std::string> read_key_values(const std::filesystem::path &path) {
    auto in = detail::open_in(path);
    return parse_key_values(in, path.string());
}

inline KeyValues report_key_values(const MetricsReport &r) {
    return {{"mean_NE_deg", detail::fmt_double(r.mean_NE_deg)},
            {"median_NE_deg", detail::fmt_double(r.median_NE_deg)},
            {"mean_VPE", detail::fmt_double(r.mean_VPE)},
            {"median_VPE", detail::fmt_double(r.median_VPE)},
            {"flipped_face_count", std::to_string(r.flipped_face_count)}};
}

inline std::string format_histogram_csv(const Histogram &h) {
    std::string out = "lower_edge_deg,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        out += detail::fmt_double(h.lower_edge(b)) + "," + std::to_string(h.counts[b]) + "\n";
    return out;
}

inline Histogram parse_histogram_csv(std::istream &in, const std::string &name = "<csv>") {
    Histogram h;
    std::string line;
    std::vector<double> edges;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || lineno == 1) continue;
        const auto comma = line.find(',');
        const std::string where = name + ":" + std::to_string(lineno);
        if (comma == std::string::npos) throw IoError(where + ": expected lower_edge_deg,count");
        edges.push_back(detail::parse_double(line.substr(0, comma), where));
        h.counts.push_back(static_cast<std::size_t>(detail::parse_int(line.substr(comma + 1), where)));
    }
    if (edges.size() >= 2) h.bin_width_deg = edges[1] - edges[0];
    return h;
}

}  // namespace fairmesh::io

#endif  // FAIRMESH_IO_HPP
