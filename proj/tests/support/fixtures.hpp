#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "ptl/homography.hpp"
#include "ptl/image_tensor.hpp"
#include "ptl/random.hpp"
#include "ptl/sampling.hpp"

namespace ptl::testing {

// Four Gaussian blobs on a dark background, evaluated at a real position.
inline double blob_value(double x, double y, std::size_t size, std::size_t channel) {
    struct Blob {
        double x, y, sigma, amplitude;
    };
    const double s = static_cast<double>(size) / 32.0;
    const Blob blobs[] = {{12, 11, 3.6, 0.8}, {21, 19, 4.0, 0.6}, {11, 21, 2.8, 0.5}, {21, 10, 2.8, 0.4}};
    double v = 0.0;
    for (const auto& b : blobs) {
        const double dx = x - b.x * s;
        const double dy = y - b.y * s;
        const double sig = b.sigma * s;
        v += b.amplitude * (1.0 - 0.2 * static_cast<double>(channel)) * std::exp(-(dx * dx + dy * dy) / (2.0 * sig * sig));
    }
    return std::min(v, 1.0);
}

// Blob pattern seen through a sampling map: pixel p holds the continuous
// pattern at h(p). Values near the border are ~3e-5.
inline ImageTensor blob_image(std::size_t size = 32, std::size_t channels = 1,
                              const Homography& h = Homography::identity()) {
    ImageTensor t(Shape{1, size, size, channels});
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const Point2 q = h.apply({static_cast<double>(x), static_cast<double>(y)});
            for (std::size_t c = 0; c < channels; ++c) t(0, y, x, c) = blob_value(q.x, q.y, size, c);
        }
    }
    return t;
}

// Low-frequency smooth pattern filling the whole frame.
inline ImageTensor smooth_image(std::size_t height, std::size_t width, std::size_t channels = 1) {
    ImageTensor t(Shape{1, height, width, channels});
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t c = 0; c < channels; ++c)
                t(0, y, x, c) = 0.5 + 0.3 * std::sin(0.45 * x + 0.2 * c) * std::cos(0.35 * y - 0.1 * c);
    return t;
}

inline ImageTensor random_image(Rng& rng, Shape shape) {
    ImageTensor t(shape);
    for (double& v : t.data()) v = rng.uniform();
    return t;
}

// Valid homography near the identity: mild affine part, small projective row.
inline Homography random_near_identity(Rng& rng, double translation = 1.5, double projective = 0.02) {
    const HomographyParams p{1.0 + rng.symmetric(0.2), rng.symmetric(0.2), rng.symmetric(translation),
                             rng.symmetric(0.2),       1.0 + rng.symmetric(0.2), rng.symmetric(translation),
                             rng.symmetric(projective), rng.symmetric(projective)};
    return Homography::from_params(p);
}

/// Naive gather warp: for every output pixel, sums every input pixel times
/// weight(x'' - x, y'' - y), rows outer and columns inner. Written
/// independently of PTLayer; shares only the kernel functions.
inline ImageTensor reference_warp(const ImageTensor& in, const Homography& h, const KernelSpec& kernel) {
    const Matrix3& t = h.matrix();
    ImageTensor out(in.shape());
    for (std::size_t n = 0; n < in.batch(); ++n) {
        for (std::size_t yo = 0; yo < in.height(); ++yo) {
            for (std::size_t xo = 0; xo < in.width(); ++xo) {
                const double x = static_cast<double>(xo);
                const double y = static_cast<double>(yo);
                const double w = t[6] * x + t[7] * y + 1.0;
                if (!(std::abs(w) >= kHorizonGuard)) continue;
                const double xs = (t[0] * x + t[1] * y + t[2]) / w;
                const double ys = (t[3] * x + t[4] * y + t[5]) / w;
                for (std::size_t c = 0; c < in.channels(); ++c) {
                    double acc = 0.0;
                    for (std::size_t yi = 0; yi < in.height(); ++yi) {
                        for (std::size_t xi = 0; xi < in.width(); ++xi) {
                            const double wgt = weight(kernel, xs - static_cast<double>(xi), ys - static_cast<double>(yi));
                            if (wgt != 0.0) acc += in(n, yi, xi, c) * wgt;
                        }
                    }
                    out(n, yo, xo, c) = acc;
                }
            }
        }
    }
    return out;
}

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("ptl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace ptl::testing
