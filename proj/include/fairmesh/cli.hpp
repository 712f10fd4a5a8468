#ifndef FAIRMESH_CLI_HPP
#define FAIRMESH_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairmesh/fixtures.hpp"
#include "fairmesh/io.hpp"
#include "fairmesh/metrics.hpp"
#include "fairmesh/pipelines.hpp"

namespace fairmesh::cli {

struct RunConfig {
    std::string command;
    std::string in, out, gt, normals, report, config;
    std::string kind = "cube";
    std::string method = "direct";
    DenoiseConfig denoise;
    std::optional<int> rounds;
    double sigma_rel = 0.0;
    std::uint64_t seed = 0;
    double bin_width = 5.0;
    int n = 0;
    double fraction = 0.05;
    bool verbose = false;
};

class CliError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline const std::set<std::string> &commands() {
    static const std::set<std::string> c = {"denoise", "fuse", "addnoise", "eval", "hist", "fixture"};
    return c;
}

template <typename T>
T parse_value(const std::string &key, const std::string &text) {
    T v{};
    if (!CLI::detail::lexical_cast(text, v)) throw CliError("config key '" + key + "': cannot parse '" + text + "'");
    return v;
}

/// Applies config-file entries on top of the flag values.
inline void apply_config(RunConfig &c, const std::map<std::string, std::string> &kv) {
    SolverParams &sp = c.denoise.solver;
    MollifyParams &mp = c.denoise.mollify;
    const std::map<std::string, std::function<void(const std::string &, const std::string &)>> setters = {
        {"in", [&](auto &, auto &v) { c.in = v; }},
        {"out", [&](auto &, auto &v) { c.out = v; }},
        {"gt", [&](auto &, auto &v) { c.gt = v; }},
        {"normals", [&](auto &, auto &v) { c.normals = v; }},
        {"report", [&](auto &, auto &v) { c.report = v; }},
        {"kind", [&](auto &, auto &v) { c.kind = v; }},
        {"method", [&](auto &, auto &v) { c.method = v; }},
        {"lambda-v", [&](auto &k, auto &v) { sp.lambda_v = parse_value<double>(k, v); }},
        {"eta", [&](auto &k, auto &v) { sp.eta = parse_value<double>(k, v); }},
        {"sigma1", [&](auto &k, auto &v) { sp.sigma1 = parse_value<double>(k, v); }},
        {"sigma2", [&](auto &k, auto &v) { sp.sigma2 = parse_value<double>(k, v); }},
        {"delta", [&](auto &k, auto &v) { sp.delta = parse_value<double>(k, v); }},
        {"max-iters", [&](auto &k, auto &v) { sp.max_iters = parse_value<int>(k, v); }},
        {"grad-tol", [&](auto &k, auto &v) { sp.grad_tol = parse_value<double>(k, v); }},
        {"lambda-n", [&](auto &k, auto &v) { mp.lambda_n = parse_value<double>(k, v); }},
        {"mollify-sigma1", [&](auto &k, auto &v) { mp.sigma1 = parse_value<double>(k, v); }},
        {"mollify-sigma2", [&](auto &k, auto &v) { mp.sigma2 = parse_value<double>(k, v); }},
        {"mollify-iters", [&](auto &k, auto &v) { mp.max_iters = parse_value<int>(k, v); }},
        {"rounds", [&](auto &k, auto &v) { c.rounds = parse_value<int>(k, v); }},
        {"sigma-rel", [&](auto &k, auto &v) { c.sigma_rel = parse_value<double>(k, v); }},
        {"seed", [&](auto &k, auto &v) { c.seed = parse_value<std::uint64_t>(k, v); }},
        {"bin-width", [&](auto &k, auto &v) { c.bin_width = parse_value<double>(k, v); }},
        {"n", [&](auto &k, auto &v) { c.n = parse_value<int>(k, v); }},
        {"fraction", [&](auto &k, auto &v) { c.fraction = parse_value<double>(k, v); }},
    };
    for (const auto &[k, v] : kv) {
        auto it = setters.find(k);
        if (it == setters.end()) throw CliError("unknown config key '" + k + "'");
        it->second(k, v);
    }
}

inline void require(const std::string &value, const char *flag, const std::string &cmd) {
    if (value.empty()) throw CliError(cmd + " requires " + flag);
}

inline void require_exists(const std::string &path) {
    if (!std::filesystem::exists(path)) throw CliError("input file '" + path + "' does not exist");
}

/// Fails early, before any work, if an output could not be written later.
inline void check_output(const std::string &path, bool mesh) {
    if (path.empty()) return;
    if (mesh && !io::is_mesh_path(path)) throw CliError("output '" + path + "' must end in .obj or .ply");
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent))
        throw CliError("output directory '" + parent.string() + "' does not exist");
}

inline io::KeyValues diagnostics_kv(const std::vector<RoundDiagnostics> &rounds) {
    io::KeyValues kv;
    kv.emplace_back("rounds", std::to_string(rounds.size()));
    for (const auto &d : rounds) {
        const std::string p = "round" + std::to_string(d.round) + "_";
        kv.emplace_back(p + "cost", io::detail::fmt_double(d.cost));
        kv.emplace_back(p + "grad_inf", io::detail::fmt_double(d.grad_inf));
        kv.emplace_back(p + "flipped_faces", std::to_string(d.flipped_faces));
    }
    return kv;
}

inline void log_rounds(std::ostream &err, const std::vector<RoundDiagnostics> &rounds) {
    for (const auto &d : rounds)
        err << "round " << d.round << ": cost=" << d.cost << " grad_inf=" << d.grad_inf
            << " flipped=" << d.flipped_faces << " elapsed_ms=" << d.elapsed_ms << "\n";
}

inline Mesh make_fixture(const RunConfig &c, NormalField *normals_out) {
    if (c.kind == "cube") return fixtures::make_cube(c.n > 0 ? c.n : 16);
    if (c.kind == "sphere") return c.n > 0 ? fixtures::make_icosphere(c.n, 0.5) : fixtures::benchmark_sphere();
    if (c.kind == "uv-sphere") return fixtures::make_uv_sphere(30, 32, 0.5);
    if (c.kind == "grid") return fixtures::make_grid_mesh(c.n > 0 ? c.n : 36);
    if (c.kind == "collapsed-grid") return fixtures::collapse_edges(fixtures::make_grid_mesh(c.n > 0 ? c.n : 36), c.fraction, c.seed);
    if (c.kind == "tetrahedron") return fixtures::tetrahedron();
    if (c.kind == "bump") {
        auto fx = fixtures::make_bump_fixture(c.n > 0 ? c.n : 32);
        if (normals_out) *normals_out = NormalField::from_values(NormalField::Domain::Vertex, fx.vertex_normals);
        return fx.smooth;
    }
    throw CliError("unknown fixture kind '" + c.kind + "'");
}

inline int run(RunConfig &c, std::ostream &out, std::ostream &err) {
    SolverParams &sp = c.denoise.solver;
    if (c.method == "direct") sp.method = SolveMethod::Direct;
    else if (c.method == "gd") sp.method = SolveMethod::Iterative, sp.step = StepPolicy::Backtracking;
    else if (c.method == "cg") sp.method = SolveMethod::Iterative, sp.step = StepPolicy::ConjugateGradient;
    else throw CliError("unknown --method '" + c.method + "' (direct, gd, cg)");

    const std::string &cmd = c.command;
    check_output(c.out, cmd != "hist");
    check_output(c.report, false);
    if (cmd == "fixture") check_output(c.normals, false);
    if (cmd == "fixture") {
        require(c.out, "--out", cmd);
        NormalField normals;
        const Mesh m = make_fixture(c, &normals);
        if (c.kind == "bump") {
            require(c.normals, "--normals", cmd);
            io::write_normal_field(normals, c.normals);
        }
        io::write_mesh(m, c.out);
        return 0;
    }

    require(c.in, "--in", cmd);
    require_exists(c.in);

    if (cmd == "addnoise") {
        require(c.out, "--out", cmd);
        const Mesh noisy = add_gaussian_noise(io::read_mesh(c.in), c.sigma_rel, c.seed);
        io::write_mesh(noisy, c.out);
        return 0;
    }
    if (cmd == "eval") {
        require(c.gt, "--gt", cmd);
        require_exists(c.gt);
        const MetricsReport r = evaluate(io::read_mesh(c.in), io::read_mesh(c.gt), c.bin_width);
        const std::string text = io::format_key_values(io::report_key_values(r));
        if (c.report.empty()) out << text;
        else io::write_text_atomic(c.report, text);
        return 0;
    }
    if (cmd == "hist") {
        require(c.out, "--out", cmd);
        const Histogram h = corner_angle_histogram(io::read_mesh(c.in), c.bin_width);
        io::write_text_atomic(c.out, io::format_histogram_csv(h));
        return 0;
    }

    require(c.out, "--out", cmd);
    const Mesh input = io::read_mesh(c.in);
    PipelineResult result;
    if (cmd == "denoise") {
        c.denoise.outer_rounds = c.rounds.value_or(2);
        result = denoise(input, c.denoise);
    } else {  // fuse
        require(c.normals, "--normals", cmd);
        require_exists(c.normals);
        FusionInput fin{input, io::read_normal_field(c.normals, input.num_vertices())};
        result = fuse_normals_detailed(fin, sp, c.rounds.value_or(1));
    }
    if (c.verbose) log_rounds(err, result.rounds);

    io::KeyValues kv;
    if (!c.gt.empty()) {
        require_exists(c.gt);
        const auto metrics = io::report_key_values(evaluate(result.mesh, io::read_mesh(c.gt), c.bin_width));
        kv.insert(kv.end(), metrics.begin(), metrics.end());
    }
    const auto diag = diagnostics_kv(result.rounds);
    kv.insert(kv.end(), diag.begin(), diag.end());

    io::write_mesh(result.mesh, c.out);
    if (!c.report.empty()) io::write_text_atomic(c.report, io::format_key_values(kv));
    return 0;
}

}  // namespace detail

/**
 * Entry point of the `fairmesh` tool. `args` excludes the program name.
 * Returns 0 on success; on failure prints one diagnostic line to `err`.
 */
inline int cli_main(const std::vector<std::string> &args, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    RunConfig c;
    SolverParams &sp = c.denoise.solver;
    MollifyParams &mp = c.denoise.mollify;

    CLI::App app{"Face-fairness mesh denoising and normal fusion", "fairmesh"};
    app.add_option("command", c.command, "denoise | fuse | addnoise | eval | hist | fixture")
        ->required()
        ->check(CLI::IsMember(detail::commands()));
    app.add_option("--in", c.in, "input mesh (.obj/.ply)");
    app.add_option("--out", c.out, "output mesh, or CSV for hist");
    app.add_option("--gt", c.gt, "ground-truth mesh for metrics");
    app.add_option("--normals", c.normals, "per-vertex normal field (one 'nx ny nz' per line)");
    app.add_option("--report", c.report, "key=value report path");
    app.add_option("--config", c.config, "key=value file; its entries override flags");
    app.add_option("--lambda-v", sp.lambda_v, "Laplacian weight")->capture_default_str();
    app.add_option("--eta", sp.eta, "face-fairness weight")->capture_default_str();
    app.add_option("--lambda-n", mp.lambda_n, "normal mollification weight")->capture_default_str();
    app.add_option("--sigma1", sp.sigma1, "Laplacian normal-offset bandwidth (x local scale)")->capture_default_str();
    app.add_option("--sigma2", sp.sigma2, "Laplacian spatial bandwidth (x local scale)")->capture_default_str();
    app.add_option("--mollify-sigma1", mp.sigma1, "mollifier normal bandwidth")->capture_default_str();
    app.add_option("--mollify-sigma2", mp.sigma2, "mollifier spatial bandwidth (x mean edge)")->capture_default_str();
    app.add_option("--mollify-iters", mp.max_iters, "mollifier iterations")->capture_default_str();
    app.add_option("--delta", sp.delta, "fairness flatness offset")->capture_default_str();
    app.add_option("--max-iters", sp.max_iters, "iterative solver iteration cap")->capture_default_str();
    app.add_option("--grad-tol", sp.grad_tol, "iterative solver gradient tolerance")->capture_default_str();
    app.add_option("--method", c.method, "vertex solve: direct | gd | cg")->capture_default_str();
    app.add_option("--rounds", c.rounds, "outer rounds (denoise default 2, fuse default 1)");
    app.add_option("--sigma-rel", c.sigma_rel, "noise std as a fraction of the mean edge length");
    app.add_option("--seed", c.seed, "random seed")->capture_default_str();
    app.add_option("--kind", c.kind, "fixture: cube | sphere | uv-sphere | grid | collapsed-grid | bump | tetrahedron");
    app.add_option("--n", c.n, "fixture resolution");
    app.add_option("--fraction", c.fraction, "collapsed-grid edge fraction")->capture_default_str();
    app.add_option("--bin-width", c.bin_width, "histogram bin width in degrees")->capture_default_str();
    app.add_flag("-v,--verbose", c.verbose, "log per-round diagnostics to stderr");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError &e) {
        err << "fairmesh: error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (!c.config.empty()) {
            detail::require_exists(c.config);
            detail::apply_config(c, io::read_key_values(c.config));
        }
        return detail::run(c, out, err);
    } catch (const std::exception &e) {
        err << "fairmesh: error: " << e.what() << "\n";
        return 1;
    }
}

inline int cli_main(int argc, const char *const *argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args);
}

}  // namespace fairmesh::cli

#endif  // FAIRMESH_CLI_HPP
