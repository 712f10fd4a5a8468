#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fairmesh/cli.hpp"
#include "fairmesh/fixtures.hpp"
#include "fairmesh/io.hpp"

using namespace fairmesh;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("fairmesh_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string p(const std::string &name) const { return (dir_ / name).string(); }

    int run(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return cli::cli_main(args, out_, err_);
    }

    std::map<std::string, std::string> report(const std::string &name) const {
        return io::read_key_values(dir_ / name);
    }

    std::size_t file_count() const {
        return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir_), fs::directory_iterator{}));
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

}  // namespace

TEST_F(Cli, AddNoiseDenoiseReport) {
    ASSERT_EQ(run({"fixture", "--kind", "sphere", "--n", "5", "--out", p("sphere.obj")}), 0) << err_.str();
    ASSERT_EQ(run({"addnoise", "--in", p("sphere.obj"), "--sigma-rel", "0.35", "--seed", "7", "--out", p("noisy.obj")}), 0)
        << err_.str();
    ASSERT_EQ(run({"denoise", "--in", p("noisy.obj"), "--gt", p("sphere.obj"), "--lambda-v", "1000", "--eta", "30",
                   "--lambda-n", "100", "--out", p("clean.obj"), "--report", p("r.txt")}),
              0)
        << err_.str();
    const auto r = report("r.txt");
    ASSERT_TRUE(r.count("mean_NE_deg"));
    ASSERT_TRUE(r.count("mean_VPE"));
    EXPECT_EQ(r.at("rounds"), "2");
    EXPECT_TRUE(r.count("round2_cost"));

    ASSERT_EQ(run({"eval", "--in", p("noisy.obj"), "--gt", p("sphere.obj"), "--report", p("noisy.txt")}), 0);
    EXPECT_LT(std::stod(r.at("mean_NE_deg")), std::stod(report("noisy.txt").at("mean_NE_deg")));
}

TEST_F(Cli, EvalOfIdenticalMeshIsZero) {
    ASSERT_EQ(run({"fixture", "--kind", "cube", "--n", "4", "--out", p("a.obj")}), 0);
    ASSERT_EQ(run({"eval", "--in", p("a.obj"), "--gt", p("a.obj")}), 0);
    std::istringstream in(out_.str());
    const auto kv = io::parse_key_values(in);
    for (const char *k : {"mean_NE_deg", "median_NE_deg", "mean_VPE", "median_VPE", "flipped_face_count"})
        EXPECT_EQ(std::stod(kv.at(k)), 0.0) << k;
}

TEST_F(Cli, FixtureCubeMatchesBenchmarkCounts) {
    ASSERT_EQ(run({"fixture", "--kind", "cube", "--out", p("cube.ply")}), 0);
    const Mesh m = io::read_mesh(p("cube.ply"));
    EXPECT_EQ(m.num_vertices(), 1538u);
    EXPECT_EQ(m.num_faces(), 3072u);
}

TEST_F(Cli, RerunsAreByteIdentical) {
    ASSERT_EQ(run({"fixture", "--kind", "cube", "--n", "6", "--out", p("c.obj")}), 0);
    for (const char *tag : {"1", "2"}) {
        const std::string t = tag;
        ASSERT_EQ(run({"addnoise", "--in", p("c.obj"), "--sigma-rel", "0.15", "--seed", "42", "--out", p("n" + t + ".obj")}), 0);
        ASSERT_EQ(run({"denoise", "--in", p("n" + t + ".obj"), "--gt", p("c.obj"), "--out", p("d" + t + ".obj"), "--report",
                       p("r" + t + ".txt"), "--method", "cg"}),
                  0)
            << err_.str();
        ASSERT_EQ(run({"hist", "--in", p("d" + t + ".obj"), "--out", p("h" + t + ".csv")}), 0);
    }
    EXPECT_EQ(slurp(p("n1.obj")), slurp(p("n2.obj")));
    EXPECT_EQ(slurp(p("d1.obj")), slurp(p("d2.obj")));
    EXPECT_EQ(slurp(p("r1.txt")), slurp(p("r2.txt")));
    EXPECT_EQ(slurp(p("h1.csv")), slurp(p("h2.csv")));
    EXPECT_EQ(slurp(p("h1.csv")).substr(0, 20), "lower_edge_deg,count");
}

TEST_F(Cli, FuseWithBumpFixture) {
    ASSERT_EQ(run({"fixture", "--kind", "bump", "--n", "16", "--out", p("flat.obj"), "--normals", p("n.txt")}), 0)
        << err_.str();
    ASSERT_EQ(run({"fuse", "--in", p("flat.obj"), "--normals", p("n.txt"), "--lambda-v", "10000", "--eta", "10", "--out",
                   p("fused.obj"), "--report", p("r.txt")}),
              0)
        << err_.str();
    const Mesh fused = io::read_mesh(p("fused.obj"));
    double zmax = 0.0;
    for (const Vec3 &v : fused.vertices()) zmax = std::max(zmax, std::abs(v.z()));
    EXPECT_GT(zmax, 0.005);
    EXPECT_EQ(report("r.txt").at("rounds"), "1");
}

TEST_F(Cli, ConfigOverridesFlags) {
    ASSERT_EQ(run({"fixture", "--kind", "cube", "--n", "4", "--out", p("c.obj")}), 0);
    std::ofstream(p("cfg.txt")) << "# zero regularisation\nlambda-v = 0\neta = 0\nlambda-n=0\nrounds=1\n";
    ASSERT_EQ(run({"denoise", "--in", p("c.obj"), "--lambda-v", "50", "--config", p("cfg.txt"), "--out", p("o.obj"),
                   "--report", p("r.txt")}),
              0)
        << err_.str();
    EXPECT_EQ(io::read_mesh(p("o.obj")).vertices(), io::read_mesh(p("c.obj")).vertices());
    EXPECT_EQ(report("r.txt").at("rounds"), "1");

    std::ofstream(p("bad.txt")) << "lambda_v=3\n";
    EXPECT_EQ(run({"denoise", "--in", p("c.obj"), "--config", p("bad.txt"), "--out", p("o2.obj")}), 1);
    EXPECT_NE(err_.str().find("unknown config key"), std::string::npos);
    EXPECT_FALSE(fs::exists(p("o2.obj")));
}

TEST_F(Cli, ErrorsAreOneLineAndLeaveNoOutputs) {
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"smooth"}), 2);
    EXPECT_EQ(run({"denoise", "--bogus", "1"}), 2);
    EXPECT_EQ(run({"denoise", "--lambda-v", "abc"}), 2);
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_NE(out_.str().find("--lambda-v"), std::string::npos);

    const std::size_t before = file_count();
    EXPECT_EQ(run({"denoise", "--in", p("missing.obj"), "--out", p("x.obj")}), 1);
    const std::string msg = err_.str();
    EXPECT_EQ(std::count(msg.begin(), msg.end(), '\n'), 1);
    EXPECT_EQ(msg.rfind("fairmesh: error:", 0), 0u);

    ASSERT_EQ(run({"fixture", "--kind", "cube", "--n", "3", "--out", p("c.obj")}), 0);
    ASSERT_EQ(run({"fixture", "--kind", "cube", "--n", "4", "--out", p("other.obj")}), 0);
    // Ground truth with different topology: fails after the solve, before writing anything.
    EXPECT_EQ(run({"denoise", "--in", p("c.obj"), "--gt", p("other.obj"), "--out", p("x.obj"), "--report", p("r.txt")}), 1);
    EXPECT_EQ(run({"denoise", "--in", p("c.obj"), "--out", p("x.stl")}), 1);
    EXPECT_EQ(run({"denoise", "--in", p("c.obj"), "--out", p("x.obj"), "--report", p("nodir/r.txt")}), 1);
    EXPECT_EQ(run({"denoise", "--in", p("c.obj"), "--out", p("x.obj"), "--delta", "2"}), 1);
    EXPECT_EQ(run({"fixture", "--kind", "torus", "--out", p("t.obj")}), 1);
    EXPECT_EQ(run({"fixture", "--kind", "bump", "--out", p("b.obj")}), 1);
    EXPECT_EQ(run({"fuse", "--in", p("c.obj"), "--out", p("x.obj")}), 1);
    EXPECT_EQ(run({"denoise", "--in", p("c.obj"), "--out", p("x.obj"), "--method", "newton"}), 1);
    EXPECT_EQ(file_count(), before + 2);
    for (const auto &e : fs::directory_iterator(dir_)) EXPECT_NE(e.path().extension(), ".tmp");
}
