#include "ptl/distort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ptl/error.hpp"
#include "ptl/pt_layer.hpp"

namespace ptl {

Homography random_homography(const DistortConfig& cfg, std::size_t width, std::size_t height, Rng& rng) {
    if (!(cfg.rho >= 0.0 && cfg.rho < 0.5)) throw std::invalid_argument("rho must lie in [0, 0.5)");
    if (width < 2 || height < 2) throw std::invalid_argument("random_homography: image must be at least 2x2");
    if (cfg.rho == 0.0) return Homography::identity();

    const double w = static_cast<double>(width - 1);
    const double h = static_cast<double>(height - 1);
    const std::array<Point2, 4> corners{Point2{0, 0}, Point2{w, 0}, Point2{w, h}, Point2{0, h}};
    const double reach = cfg.rho * static_cast<double>(std::min(width, height));

    for (int attempt = 0; attempt < kMaxDistortAttempts; ++attempt) {
        std::array<Point2, 4> moved{};
        for (std::size_t i = 0; i < 4; ++i) {
            const double dx = rng.symmetric(reach);
            const double dy = rng.symmetric(reach);
            moved[i] = {corners[i].x + dx, corners[i].y + dy};
        }
        try {
            Homography hom = Homography::from_point_pairs(corners, moved);
            // omega is affine in (x, y), so its sign on the rectangle is fixed by the corners.
            bool ok = true;
            for (const auto& c : corners) ok = ok && hom.omega(c) >= kHorizonGuard;
            if (ok) return hom;
        } catch (const NumericalError&) {
        }
    }
    throw std::invalid_argument("random_homography: no valid sample after 100 attempts (rho too large)");
}

ImageTensor warp_image(const ImageTensor& input, const Homography& h, KernelSpec kernel) {
    return PTLayer({h}, kernel).forward(input).output;
}

std::size_t unmodified_count(double keep_fraction, std::size_t n) {
    if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) {
        throw std::invalid_argument("keep_fraction must lie in [0, 1]");
    }
    const double raw = std::ceil(keep_fraction * static_cast<double>(n) - 1e-9);
    return std::min(n, static_cast<std::size_t>(std::max(0.0, raw)));
}

DistortedCorpus distort_corpus(std::span<const ImageTensor> images, const DistortConfig& cfg) {
    if (images.empty()) throw DataError("distort_corpus: no images");
    const std::size_t n = images.size();
    const std::size_t keep = unmodified_count(cfg.keep_fraction, n);

    // Fisher-Yates on its own stream; the first `keep` shuffled indices stay unmodified.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(cfg.seed);
    for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[shuffle_rng.index(i + 1)]);
    std::vector<bool> unmodified(n, false);
    for (std::size_t i = 0; i < keep; ++i) unmodified[order[i]] = true;

    DistortedCorpus corpus;
    corpus.images.reserve(n);
    corpus.manifest.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (unmodified[i]) {
            corpus.images.push_back(images[i]);
            corpus.manifest.push_back({i, false, Homography::identity()});
            continue;
        }
        Rng rng(cfg.seed, i);
        Homography h = random_homography(cfg, images[i].width(), images[i].height(), rng);
        corpus.images.push_back(warp_image(images[i], h));
        corpus.manifest.push_back({i, true, h});
    }
    return corpus;
}

std::string manifest_csv(std::span<const ManifestEntry> manifest) {
    std::string out = "index,transformed,t11,t12,t13,t21,t22,t23,t31,t32\n";
    for (const auto& e : manifest) {
        out += std::to_string(e.index);
        out += e.transformed ? ",1" : ",0";
        for (double v : e.homography.params()) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

std::vector<ManifestEntry> parse_manifest_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<ManifestEntry> entries;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("index", 0) == 0) continue;

        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 10) {
            throw DataError("manifest line " + std::to_string(line_no) + ": expected 10 columns, got " +
                            std::to_string(fields.size()));
        }
        auto number = [&](const std::string& s, double& v) {
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || ptr != s.data() + s.size()) {
                throw DataError("manifest line " + std::to_string(line_no) + ": bad number '" + s + "'");
            }
        };
        ManifestEntry e;
        double index = 0.0;
        number(fields[0], index);
        if (index < 0 || index != std::floor(index)) throw DataError("manifest: bad index '" + fields[0] + "'");
        e.index = static_cast<std::size_t>(index);
        if (fields[1] != "0" && fields[1] != "1") throw DataError("manifest: transformed flag must be 0 or 1");
        e.transformed = fields[1] == "1";
        HomographyParams p{};
        for (std::size_t k = 0; k < 8; ++k) number(fields[2 + k], p[k]);
        e.homography = Homography::from_params(p);
        entries.push_back(e);
    }
    return entries;
}

}  // namespace ptl
