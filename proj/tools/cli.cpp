#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "ptl/distort.hpp"
#include "ptl/error.hpp"
#include "ptl/gradcheck.hpp"
#include "ptl/homography.hpp"
#include "ptl/image_tensor.hpp"
#include "ptl/optim.hpp"
#include "ptl/pt_layer.hpp"
#include "ptl/sampling.hpp"
#include "staged_output.hpp"

namespace ptl::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

KernelSpec kernel_flag(const std::string& text) {
    try {
        return parse_kernel(text);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::string image_extension(const ImageTensor& t) { return t.channels() == 1 ? ".pgm" : ".ppm"; }

std::string indexed_name(const std::string& stem, std::size_t index, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%05zu", index);
    return stem + buf + ext;
}

bool is_netpbm(const fs::path& p) {
    const std::string ext = p.extension().string();
    return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

// Distorted/original files written by `distort` for one manifest entry.
fs::path find_indexed(const fs::path& dir, const std::string& stem, std::size_t index) {
    for (const char* ext : {".pgm", ".ppm"}) {
        fs::path p = dir / indexed_name(stem, index, ext);
        if (fs::exists(p)) return p;
    }
    throw DataError("missing " + (dir / indexed_name(stem, index, ".pgm|.ppm")).string());
}

// ---- warp ----------------------------------------------------------------

struct WarpArgs {
    std::string in, out, tm, kernel = "bilinear";
    std::vector<double> params;
    int maxval = 0;
};

int run_warp(const WarpArgs& a, std::ostream& out) {
    if (a.tm.empty() == a.params.empty()) throw UsageError("warp: give exactly one of --tm or --params");
    const KernelSpec kernel = kernel_flag(a.kernel);
    const Homography h = a.tm.empty() ? Homography::from_params(std::span<const double, 8>(a.params.data(), 8))
                                      : parse_homography(read_file(a.tm));
    const NetpbmImage input = read_netpbm(a.in);
    const int maxval = a.maxval > 0 ? a.maxval : input.maxval;
    const ImageTensor warped = warp_image(input.image, h, kernel);

    StagedOutput staged;
    staged.add(a.out, encode_netpbm(warped, maxval));
    staged.commit();
    out << "warped " << a.in << " -> " << a.out << " (" << to_string(kernel) << ")\n";
    return kOk;
}

// ---- distort -------------------------------------------------------------

struct DistortArgs {
    std::string in, out;
    double rho = 0.15;
    double keep = 0.0;
    std::uint64_t seed = 0;
};

int run_distort(const DistortArgs& a, std::ostream& out) {
    if (!(a.rho >= 0.0 && a.rho < 0.5)) throw UsageError("--rho must lie in [0, 0.5)");
    if (!(a.keep >= 0.0 && a.keep <= 1.0)) throw UsageError("--keep must lie in [0, 1]");
    if (!fs::is_directory(a.in)) throw DataError("input directory '" + a.in + "' does not exist");

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.in)) {
        if (entry.is_regular_file() && is_netpbm(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .pgm/.ppm/.pnm images in '" + a.in + "'");

    std::vector<NetpbmImage> loaded;
    std::vector<ImageTensor> images;
    for (const auto& f : files) {
        loaded.push_back(read_netpbm(f));
        images.push_back(loaded.back().image);
    }
    const DistortedCorpus corpus = distort_corpus(images, DistortConfig{a.rho, a.keep, a.seed});

    const fs::path dir(a.out);
    StagedOutput staged;
    staged.add_directory(dir);
    std::size_t transformed = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string ext = image_extension(images[i]);
        staged.add(dir / indexed_name("original", i, ext), encode_netpbm(images[i], loaded[i].maxval));
        staged.add(dir / indexed_name("distorted", i, ext), encode_netpbm(corpus.images[i], loaded[i].maxval));
        transformed += corpus.manifest[i].transformed ? 1 : 0;
    }
    staged.add(dir / "manifest.csv", manifest_csv(corpus.manifest));
    staged.commit();
    out << "distorted " << transformed << " of " << images.size() << " images (rho " << a.rho << ", seed " << a.seed
        << ") -> " << (dir / "manifest.csv").string() << "\n";
    return kOk;
}

// ---- rectify -------------------------------------------------------------

struct RectifyArgs {
    std::string pairs, report, save_tms, kernel = "bilinear";
    std::size_t layers = 2;
    std::size_t epochs = 500;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

int run_rectify(const RectifyArgs& a, std::ostream& out) {
    if (a.layers == 0) throw UsageError("--layers must be >= 1");
    if (a.epochs == 0) throw UsageError("--epochs must be >= 1");
    if (!(a.lr > 0.0)) throw UsageError("--lr must be positive");
    const KernelSpec kernel = kernel_flag(a.kernel);

    const fs::path manifest_path(a.pairs);
    const std::vector<ManifestEntry> manifest = parse_manifest_csv(read_file(manifest_path));
    if (manifest.empty()) throw DataError("manifest '" + a.pairs + "' lists no images");
    const fs::path dir = manifest_path.parent_path().empty() ? fs::path(".") : manifest_path.parent_path();

    std::vector<ImagePair> pairs;
    int maxval = 255;
    std::set<HomographyParams> distortions;
    for (const auto& e : manifest) {
        const NetpbmImage distorted = read_netpbm(find_indexed(dir, "distorted", e.index));
        const NetpbmImage original = read_netpbm(find_indexed(dir, "original", e.index));
        maxval = original.maxval;
        pairs.push_back({distorted.image, original.image});
        if (e.transformed) distortions.insert(e.homography.params());
    }

    TrainConfig config;
    config.epochs = a.epochs;
    config.lr = a.lr;
    config.kernel = kernel;
    config.layer_count = a.layers;
    config.seed = a.seed;
    // A single distortion shared by every transformed image has a well-defined inverse.
    if (distortions.size() == 1) config.true_distortion = Homography::from_params(*distortions.begin());

    auto [model, report] = train_rectifier(pairs, config);
    for (double v : report.loss_trace) {
        if (!std::isfinite(v)) throw NumericalError("rectify: loss diverged");
    }

    StagedOutput staged;
    if (!a.report.empty()) staged.add(a.report, loss_trace_csv(report.loss_trace));
    if (!a.save_tms.empty()) {
        const fs::path tms(a.save_tms);
        staged.add_directory(tms);
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            staged.add(tms / ("layer_" + std::to_string(l) + ".txt"), format_homography(model.layers[l].tm(0)));
        }
        staged.add(tms / "composite.txt", format_homography(report.composite));
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const ImageTensor rectified = model.apply(pairs[i].distorted);
            staged.add(tms / indexed_name("rectified", manifest[i].index, image_extension(rectified)),
                       encode_netpbm(rectified, maxval));
        }
    }
    staged.commit();

    out << std::setprecision(6) << "pairs " << pairs.size() << ", layers " << a.layers << ", epochs " << a.epochs
        << "\ninitial mse " << report.loss_trace.front() << "\nfinal mse   " << report.final_loss << "\n";
    if (report.corner_error) out << "corner error " << *report.corner_error << " px\n";
    out << "composite\n" << format_homography(report.composite);
    return kOk;
}

// ---- gradcheck -----------------------------------------------------------

struct GradcheckArgs {
    std::uint64_t seed = 1;
    std::size_t configs = 100;
    double step = 1e-5;
    std::string csv;
};

int run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
    if (a.configs == 0) throw UsageError("--configs must be >= 1");
    if (!(a.step > 0.0)) throw UsageError("--step must be positive");
    std::vector<SuiteResult> results;
    for (KernelSpec k : {KernelSpec::bilinear(), KernelSpec::bicubic()}) {
        results.push_back(run_gradcheck_suite(a.seed, a.configs, k, a.step));
    }
    out << format_report_table(results);
    const bool passed = std::all_of(results.begin(), results.end(), [](const SuiteResult& r) { return r.passed(); });
    if (!passed) throw NumericalError("gradcheck: tolerance exceeded");
    if (!a.csv.empty()) {
        StagedOutput staged;
        staged.add(a.csv, report_csv(results));
        staged.commit();
    }
    return kOk;
}

// ---- inspect -------------------------------------------------------------

int run_inspect(const std::string& tm, std::ostream& out) {
    const Homography h = parse_homography(read_file(tm));
    out << "homography\n" << format_homography(h);
    out << "determinant " << format_double(h.determinant()) << "\n";
    out << "inverse\n" << format_homography(invert(h));
    out << "unit frame corners\n";
    for (Point2 c : {Point2{0, 0}, Point2{1, 0}, Point2{1, 1}, Point2{0, 1}}) {
        out << "  (" << c.x << ", " << c.y << ") -> ";
        try {
            const Point2 p = h.apply(c);
            out << "(" << format_double(p.x) << ", " << format_double(p.y) << ")\n";
        } catch (const HorizonError&) {
            out << "at infinity\n";
        }
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Differentiable perspective-transformation layer tools", "ptl"};
    app.require_subcommand(1);

    WarpArgs warp;
    auto* warp_cmd = app.add_subcommand("warp", "Warp one image by a homography (gather convention)");
    warp_cmd->add_option("--in", warp.in, "Input .pgm/.ppm")->required();
    warp_cmd->add_option("--out", warp.out, "Output image (binary P5/P6)")->required();
    auto* tm_opt = warp_cmd->add_option("--tm", warp.tm, "Homography text file (3x3)");
    auto* params_opt = warp_cmd->add_option("--params", warp.params, "Eight free parameters t11..t32")->expected(8);
    tm_opt->excludes(params_opt);
    warp_cmd->add_option("--kernel", warp.kernel, "bilinear | bicubic[:alpha]");
    warp_cmd->add_option("--maxval", warp.maxval, "Output maxval (default: input's)")->check(CLI::Range(1, 65535));

    DistortArgs distort;
    auto* distort_cmd = app.add_subcommand("distort", "Apply random perspective distortions to a directory of images");
    distort_cmd->add_option("--in", distort.in, "Directory of .pgm/.ppm images")->required();
    distort_cmd->add_option("--out", distort.out, "Output directory")->required();
    distort_cmd->add_option("--rho", distort.rho, "Max corner displacement as a fraction of min(H, W)");
    distort_cmd->add_option("--keep", distort.keep, "Fraction of images left unmodified");
    distort_cmd->add_option("--seed", distort.seed, "Random seed");

    RectifyArgs rectify;
    auto* rectify_cmd = app.add_subcommand("rectify", "Train a stack of PT layers to undo the distortions");
    rectify_cmd->add_option("--pairs", rectify.pairs, "manifest.csv written by distort")->required();
    rectify_cmd->add_option("--layers", rectify.layers, "Number of stacked single-TM layers");
    rectify_cmd->add_option("--epochs", rectify.epochs, "Full-batch epochs");
    rectify_cmd->add_option("--lr", rectify.lr, "Adam learning rate");
    rectify_cmd->add_option("--kernel", rectify.kernel, "bilinear | bicubic[:alpha]");
    rectify_cmd->add_option("--seed", rectify.seed, "Seed for the identity-jitter initialisation");
    rectify_cmd->add_option("--report", rectify.report, "Loss trace CSV (epoch,mse)");
    rectify_cmd->add_option("--save-tms", rectify.save_tms, "Directory for learned TMs and rectified images");

    GradcheckArgs gradcheck;
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
    gradcheck_cmd->add_option("--seed", gradcheck.seed, "Random seed");
    gradcheck_cmd->add_option("--configs", gradcheck.configs, "Randomized configurations per kernel");
    gradcheck_cmd->add_option("--step", gradcheck.step, "Finite-difference step");
    gradcheck_cmd->add_option("--csv", gradcheck.csv, "Also write the report as CSV");

    std::string inspect_tm;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print a homography, its inverse and determinant");
    inspect_cmd->add_option("--tm", inspect_tm, "Homography text file")->required();

    std::vector<std::string> argv_storage{"ptl"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_storage) argv.push_back(s.data());

    if (!args.empty() && !args.front().empty() && args.front().front() != '-' &&
        app.get_subcommands([&](CLI::App* sub) { return sub->get_name() == args.front(); }).empty()) {
        err << "unknown subcommand '" << args.front() << "'\n" << app.help();
        return kUsage;
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        err << app.help();
        return kUsage;
    }

    try {
        if (*warp_cmd) return run_warp(warp, out);
        if (*distort_cmd) return run_distort(distort, out);
        if (*rectify_cmd) return run_rectify(rectify, out);
        if (*gradcheck_cmd) return run_gradcheck(gradcheck, out);
        if (*inspect_cmd) return run_inspect(inspect_tm, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kData;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    }
    err << app.help();
    return kUsage;
}

}  // namespace ptl::cli
