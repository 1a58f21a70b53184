#include "ptl/pt_layer.hpp"

#include <cmath>
#include <stdexcept>

#include "ptl/error.hpp"
#include "ptl/random.hpp"

namespace ptl {

namespace {

constexpr int kMaxTaps = 4;

// Integer taps covering the kernel support around a sampling coordinate,
// clipped to [0, extent). Returns the number of in-range taps.
int gather_taps(double s, int radius, std::size_t extent, long long* taps) {
    const double lo = -static_cast<double>(radius);
    const double hi = static_cast<double>(extent - 1) + radius;
    if (!(s > lo && s < hi)) return 0;
    const long long base = static_cast<long long>(std::floor(s)) - (radius - 1);
    int count = 0;
    for (long long t = base; t < base + 2 * radius; ++t) {
        if (t >= 0 && t < static_cast<long long>(extent)) taps[count++] = t;
    }
    return count;
}

}  // namespace

PTLayer::PTLayer(std::vector<Homography> tms, KernelSpec kernel, GradReduction reduction)
    : tms_(std::move(tms)), kernel_(kernel), reduction_(reduction) {
    if (tms_.empty()) throw std::invalid_argument("PT layer needs at least one transformation matrix");
    if (kernel_.kind == KernelKind::bicubic && !std::isfinite(kernel_.alpha)) {
        throw std::invalid_argument("bicubic alpha must be finite");
    }
}

PTLayer make_layer(std::size_t m_count, KernelSpec kernel, LayerInit init, GradReduction reduction) {
    if (m_count == 0) throw std::invalid_argument("PT layer needs at least one transformation matrix");
    std::vector<Homography> tms;
    tms.reserve(m_count);
    if (std::holds_alternative<ExactIdentity>(init)) {
        tms.assign(m_count, Homography::identity());
    } else {
        Rng rng(std::get<IdentityJitter>(init).seed);
        const HomographyParams base = Homography::identity().params();
        for (std::size_t m = 0; m < m_count; ++m) {
            HomographyParams p{};
            for (std::size_t i = 0; i < 8; ++i) {
                p[i] = base[i] + rng.symmetric(i < 6 ? kJitterAffine : kJitterProjective);
            }
            tms.push_back(Homography::from_params(p));
        }
    }
    return PTLayer(std::move(tms), kernel, reduction);
}

std::vector<double> PTLayer::params() const {
    std::vector<double> flat;
    flat.reserve(tms_.size() * 8);
    for (const auto& h : tms_) {
        const auto p = h.params();
        flat.insert(flat.end(), p.begin(), p.end());
    }
    return flat;
}

void PTLayer::set_params(std::span<const double> flat) {
    if (flat.size() != tms_.size() * 8) {
        throw std::invalid_argument("set_params: expected " + std::to_string(tms_.size() * 8) + " values");
    }
    for (std::size_t m = 0; m < tms_.size(); ++m) {
        tms_[m] = Homography::from_params(flat.subspan(m * 8).first<8>());
    }
}

ForwardResult PTLayer::forward(const ImageTensor& input) const {
    const std::size_t n_batch = input.batch();
    const std::size_t height = input.height();
    const std::size_t width = input.width();
    const std::size_t channels = input.channels();
    const std::size_t m_count = tms_.size();
    const int radius = support_radius(kernel_);

    ForwardResult result{ImageTensor(Shape{n_batch, height, width, channels * m_count}),
                         ForwardCache{input, {}, kernel_, {}}};
    ForwardCache& cache = result.cache;
    cache.tm_params.reserve(m_count);
    cache.samples.resize(m_count * height * width);

    for (std::size_t m = 0; m < m_count; ++m) {
        const Matrix3& t = tms_[m].matrix();
        cache.tm_params.push_back(tms_[m].params());
        for (std::size_t yo = 0; yo < height; ++yo) {
            for (std::size_t xo = 0; xo < width; ++xo) {
                const double x = static_cast<double>(xo);
                const double y = static_cast<double>(yo);
                SamplePoint& sp = cache.samples[(m * height + yo) * width + xo];
                sp.omega = t[6] * x + t[7] * y + 1.0;
                if (!(std::abs(sp.omega) >= kHorizonGuard)) continue;
                sp.x = (t[0] * x + t[1] * y + t[2]) / sp.omega;
                sp.y = (t[3] * x + t[4] * y + t[5]) / sp.omega;
                sp.valid = std::isfinite(sp.x) && std::isfinite(sp.y);
            }
        }
    }

    ImageTensor& out = result.output;
    long long xt[kMaxTaps], yt[kMaxTaps];
    double wx[kMaxTaps], wy[kMaxTaps];
    for (std::size_t m = 0; m < m_count; ++m) {
        for (std::size_t yo = 0; yo < height; ++yo) {
            for (std::size_t xo = 0; xo < width; ++xo) {
                const SamplePoint& sp = cache.sample(m, yo, xo);
                if (!sp.valid) continue;
                const int nx = gather_taps(sp.x, radius, width, xt);
                const int ny = gather_taps(sp.y, radius, height, yt);
                if (nx == 0 || ny == 0) continue;
                for (int j = 0; j < nx; ++j) wx[j] = k1(kernel_, sp.x - static_cast<double>(xt[j]));
                for (int i = 0; i < ny; ++i) wy[i] = k1(kernel_, sp.y - static_cast<double>(yt[i]));
                for (std::size_t n = 0; n < n_batch; ++n) {
                    for (std::size_t c = 0; c < channels; ++c) {
                        double acc = 0.0;
                        for (int i = 0; i < ny; ++i) {
                            for (int j = 0; j < nx; ++j) {
                                acc += input(n, static_cast<std::size_t>(yt[i]), static_cast<std::size_t>(xt[j]), c) *
                                       (wx[j] * wy[i]);
                            }
                        }
                        out(n, yo, xo, m * channels + c) = acc;
                    }
                }
            }
        }
    }
    return result;
}

BackwardResult PTLayer::backward(const ForwardCache& cache, const ImageTensor& d_output,
                                 detail::BackwardFault fault) const {
    using detail::BackwardFault;
    const ImageTensor& input = cache.input;
    const std::size_t n_batch = input.batch();
    const std::size_t height = input.height();
    const std::size_t width = input.width();
    const std::size_t channels = input.channels();
    const std::size_t m_count = tms_.size();

    if (cache.tm_params.size() != m_count || cache.kernel != kernel_ ||
        cache.samples.size() != m_count * height * width) {
        throw DataError("backward: forward cache does not belong to this layer");
    }
    for (std::size_t m = 0; m < m_count; ++m) {
        if (cache.tm_params[m] != tms_[m].params()) {
            throw DataError("backward: layer parameters changed since the forward pass");
        }
    }
    const Shape expected{n_batch, height, width, channels * m_count};
    if (d_output.shape() != expected) {
        throw DataError("backward: d_output shape " + to_string(d_output.shape()) + " does not match " +
                        to_string(expected));
    }

    const int radius = support_radius(kernel_);
    const bool swap_axes = fault == BackwardFault::swap_kernel_axes;
    BackwardResult result{ImageTensor(input.shape()), std::vector<HomographyParams>(m_count, HomographyParams{})};

    long long xt[kMaxTaps], yt[kMaxTaps];
    double wx[kMaxTaps], wy[kMaxTaps], dwx[kMaxTaps], dwy[kMaxTaps];
    for (std::size_t m = 0; m < m_count; ++m) {
        HomographyParams& grad = result.d_tms[m];
        for (std::size_t yo = 0; yo < height; ++yo) {
            for (std::size_t xo = 0; xo < width; ++xo) {
                const SamplePoint& sp = cache.sample(m, yo, xo);
                if (!sp.valid) continue;
                const int nx = gather_taps(sp.x, radius, width, xt);
                const int ny = gather_taps(sp.y, radius, height, yt);
                if (nx == 0 || ny == 0) continue;
                for (int j = 0; j < nx; ++j) {
                    const double u = sp.x - static_cast<double>(xt[j]);
                    wx[j] = k1(kernel_, u);
                    dwx[j] = k1_prime(kernel_, u);
                }
                for (int i = 0; i < ny; ++i) {
                    const double v = sp.y - static_cast<double>(yt[i]);
                    wy[i] = k1(kernel_, v);
                    dwy[i] = k1_prime(kernel_, v);
                }

                // dL/dx'' and dL/dy'' for this output pixel, summed over batch and channels.
                double dl_dx = 0.0;
                double dl_dy = 0.0;
                for (std::size_t n = 0; n < n_batch; ++n) {
                    for (std::size_t c = 0; c < channels; ++c) {
                        const double g = d_output(n, yo, xo, m * channels + c);
                        double gx = 0.0;
                        double gy = 0.0;
                        for (int i = 0; i < ny; ++i) {
                            const auto yi = static_cast<std::size_t>(yt[i]);
                            for (int j = 0; j < nx; ++j) {
                                const auto xj = static_cast<std::size_t>(xt[j]);
                                double kx = wx[j], dkx = dwx[j], ky = wy[i], dky = dwy[i];
                                if (swap_axes) {
                                    kx = k1(kernel_, sp.x - static_cast<double>(yt[i]));
                                    dkx = k1_prime(kernel_, sp.x - static_cast<double>(yt[i]));
                                    ky = k1(kernel_, sp.y - static_cast<double>(xt[j]));
                                    dky = k1_prime(kernel_, sp.y - static_cast<double>(xt[j]));
                                }
                                const double value = input(n, yi, xj, c);
                                result.d_input(n, yi, xj, c) += g * (kx * ky);
                                gx += value * (dkx * ky);
                                gy += value * (kx * dky);
                            }
                        }
                        dl_dx += g * gx;
                        dl_dy += g * gy;
                    }
                }

                // Chain through the perspective divide:
                //   x'' = (t11 x + t12 y + t13) / w,  y'' = (t21 x + t22 y + t23) / w,
                //   w = t31 x + t32 y + 1.
                const double x = static_cast<double>(xo);
                const double y = static_cast<double>(yo);
                const double inv_w = 1.0 / sp.omega;
                const double ax = dl_dx * inv_w;
                const double ay = dl_dy * inv_w;
                grad[0] += ax * x;
                grad[1] += ax * y;
                grad[2] += ax;
                grad[3] += ay * x;
                grad[4] += ay * y;
                grad[5] += ay;
                if (fault != BackwardFault::drop_quotient_term) {
                    const double aw = -(ax * sp.x + ay * sp.y);
                    grad[6] += aw * x;
                    grad[7] += aw * y;
                }
            }
        }
    }

    bool average = reduction_ == GradReduction::mean;
    if (fault == BackwardFault::reduction_mismatch) average = !average;
    if (average) {
        const double count = static_cast<double>(reduction_count(input.shape()));
        for (auto& grad : result.d_tms) {
            for (double& v : grad) v /= count;
        }
    }
    return result;
}

}  // namespace ptl
