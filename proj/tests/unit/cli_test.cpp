#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "ptl/distort.hpp"
#include "ptl/image_tensor.hpp"
#include "ptl/pt_layer.hpp"

namespace ptl {
namespace {

namespace fs = std::filesystem;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

// Relative path -> bytes for every regular file below `root`.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    if (!fs::exists(root)) return files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return files;
}

void write_corpus(const fs::path& dir, std::size_t count, std::size_t size) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < count; ++i) {
        ImageTensor img = testing::blob_image(size);
        for (double& v : img.data()) v *= 1.0 - 0.1 * static_cast<double>(i);
        save_image(img, dir / ("img" + std::to_string(i) + ".pgm"), 255);
    }
}

TEST(Cli, UnknownSubcommandIsUsageError) {
    const Outcome r = run_cli({"frobnicate"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("frobnicate"), std::string::npos);
    EXPECT_NE(r.err.find("warp"), std::string::npos);
    EXPECT_EQ(run_cli({}).code, 1);
    EXPECT_EQ(run_cli({"warp", "--bogus"}).code, 1);
}

TEST(Cli, HelpExitsCleanly) {
    const Outcome r = run_cli({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("rectify"), std::string::npos);
}

TEST(Cli, IdentityWarpIsByteIdentical) {
    testing::TempDir dir;
    Rng rng(4);
    const ImageTensor img = testing::random_image(rng, Shape{1, 9, 11, 3});
    save_image(img, dir / "in.ppm", 255);
    save_image(read_netpbm(dir / "in.ppm").image, dir / "resaved.ppm", 255);
    write_text(dir / "id.txt", "1 0 0\n0 1 0\n0 0 1\n");

    EXPECT_EQ(run_cli({"warp", "--in", (dir / "in.ppm").string(), "--out", (dir / "out.ppm").string(), "--tm",
                       (dir / "id.txt").string()})
                  .code,
              0);
    EXPECT_EQ(slurp(dir / "out.ppm"), slurp(dir / "resaved.ppm"));

    EXPECT_EQ(run_cli({"warp", "--in", (dir / "in.ppm").string(), "--out", (dir / "out2.ppm").string(), "--params",
                       "1", "0", "0", "0", "1", "0", "0", "0", "--kernel", "bicubic"})
                  .code,
              0);
    EXPECT_EQ(slurp(dir / "out2.ppm"), slurp(dir / "resaved.ppm"));
}

TEST(Cli, WarpMatchesLibrary) {
    testing::TempDir dir;
    save_image(testing::blob_image(16), dir / "in.pgm", 65535);
    const Outcome r = run_cli({"warp", "--in", (dir / "in.pgm").string(), "--out", (dir / "out.pgm").string(),
                               "--params", "1.02", "0.01", "0.7", "-0.01", "0.98", "-0.4", "0.001", "0.0005"});
    ASSERT_EQ(r.code, 0) << r.err;
    const HomographyParams p{1.02, 0.01, 0.7, -0.01, 0.98, -0.4, 0.001, 0.0005};
    const ImageTensor expected =
        PTLayer({Homography::from_params(p)}, KernelSpec::bilinear()).forward(read_netpbm(dir / "in.pgm").image).output;
    EXPECT_EQ(slurp(dir / "out.pgm"), encode_netpbm(expected, 65535));
}

TEST(Cli, ErrorsMapToExitCodesAndWriteNothing) {
    testing::TempDir dir;
    save_image(testing::blob_image(8), dir / "in.pgm", 255);
    const auto before = snapshot(dir.path());

    // Missing input file.
    EXPECT_EQ(run_cli({"warp", "--in", (dir / "nope.pgm").string(), "--out", (dir / "o.pgm").string(), "--params", "1",
                       "0", "0", "0", "1", "0", "0", "0"})
                  .code,
              2);
    // Singular parameters.
    EXPECT_EQ(run_cli({"warp", "--in", (dir / "in.pgm").string(), "--out", (dir / "o.pgm").string(), "--params", "0",
                       "0", "0", "0", "0", "0", "0", "0"})
                  .code,
              3);
    // Malformed homography file.
    write_text(dir / "bad.txt", "1 0 0\n0 1\n");
    EXPECT_EQ(run_cli({"warp", "--in", (dir / "in.pgm").string(), "--out", (dir / "o.pgm").string(), "--tm",
                       (dir / "bad.txt").string()})
                  .code,
              2);
    fs::remove(dir / "bad.txt");
    // Both or neither of --tm and --params.
    EXPECT_EQ(run_cli({"warp", "--in", (dir / "in.pgm").string(), "--out", (dir / "o.pgm").string()}).code, 1);
    EXPECT_EQ(run_cli({"warp", "--in", (dir / "in.pgm").string(), "--out", (dir / "o.pgm").string(), "--kernel",
                       "lanczos", "--params", "1", "0", "0", "0", "1", "0", "0", "0"})
                  .code,
              1);
    // Bad distort arguments and an empty corpus.
    EXPECT_EQ(run_cli({"distort", "--in", dir.path().string(), "--out", (dir / "d").string(), "--rho", "0.7"}).code, 1);
    fs::create_directories(dir / "empty");
    EXPECT_EQ(run_cli({"distort", "--in", (dir / "empty").string(), "--out", (dir / "d").string()}).code, 2);
    fs::remove(dir / "empty");
    // Missing manifest.
    EXPECT_EQ(run_cli({"rectify", "--pairs", (dir / "manifest.csv").string(), "--save-tms", (dir / "t").string()}).code,
              2);
    EXPECT_EQ(snapshot(dir.path()), before);
    EXPECT_FALSE(fs::exists(dir / "d"));
    EXPECT_FALSE(fs::exists(dir / "t"));
}

TEST(Cli, DistortRectifyPipelineIsDeterministic) {
    testing::TempDir dir;
    write_corpus(dir / "corpus", 2, 16);

    auto pipeline = [&](const std::string& tag) {
        const fs::path out = dir / ("d_" + tag);
        const Outcome d = run_cli({"distort", "--in", (dir / "corpus").string(), "--out", out.string(), "--rho", "0.1",
                                   "--keep", "0.5", "--seed", "9"});
        EXPECT_EQ(d.code, 0) << d.err;
        const Outcome r = run_cli({"rectify", "--pairs", (out / "manifest.csv").string(), "--epochs", "30", "--lr",
                                   "5e-3", "--seed", "2", "--report", (out / "trace.csv").string(), "--save-tms",
                                   (out / "tms").string()});
        EXPECT_EQ(r.code, 0) << r.err;
        return std::make_pair(snapshot(out), d.out + r.out);
    };
    const auto [files_a, text_a] = pipeline("a");
    const auto [files_b, text_b] = pipeline("b");
    EXPECT_EQ(files_a, files_b);
    EXPECT_NE(text_a.find("composite"), std::string::npos);

    for (const char* name : {"manifest.csv", "original_00000.pgm", "distorted_00001.pgm", "trace.csv",
                             "tms/layer_0.txt", "tms/layer_1.txt", "tms/composite.txt", "tms/rectified_00000.pgm"}) {
        EXPECT_TRUE(files_a.count(name)) << name;
    }
    const auto manifest = parse_manifest_csv(files_a.at("manifest.csv"));
    ASSERT_EQ(manifest.size(), 2u);
    EXPECT_NE(manifest[0].transformed, manifest[1].transformed);
    EXPECT_EQ(std::count(files_a.at("trace.csv").begin(), files_a.at("trace.csv").end(), '\n'), 31);
}

TEST(Cli, GradcheckAndInspect) {
    testing::TempDir dir;
    const Outcome g = run_cli({"gradcheck", "--seed", "1", "--configs", "10", "--csv", (dir / "g.csv").string()});
    EXPECT_EQ(g.code, 0) << g.out << g.err;
    EXPECT_NE(g.out.find("bicubic"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "g.csv"));
    EXPECT_EQ(run_cli({"gradcheck", "--seed", "1", "--configs", "10"}).out, g.out);

    write_text(dir / "h.txt", "1 0 2\n0 1 3\n0 0 1\n");
    const Outcome i = run_cli({"inspect", "--tm", (dir / "h.txt").string()});
    EXPECT_EQ(i.code, 0);
    EXPECT_NE(i.out.find("determinant 1"), std::string::npos);
    EXPECT_NE(i.out.find("-2"), std::string::npos);
    EXPECT_NE(i.out.find("(3, 4)"), std::string::npos);
}

}  // namespace
}  // namespace ptl
