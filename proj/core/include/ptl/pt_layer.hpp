#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "ptl/homography.hpp"
#include "ptl/image_tensor.hpp"
#include "ptl/sampling.hpp"

namespace ptl {

enum class GradReduction { mean, sum };

struct ExactIdentity {};
struct IdentityJitter {
    std::uint64_t seed = 0;
};
using LayerInit = std::variant<ExactIdentity, IdentityJitter>;

inline constexpr double kJitterAffine = 1e-2;
inline constexpr double kJitterProjective = 1e-3;

// Where one output pixel samples the input for one transformation matrix.
struct SamplePoint {
    double x = 0.0;
    double y = 0.0;
    double omega = 1.0;
    bool valid = false;  // false when |omega| < kHorizonGuard or the point is not finite
};

struct ForwardCache {
    ImageTensor input;
    std::vector<HomographyParams> tm_params;
    KernelSpec kernel;
    std::vector<SamplePoint> samples;  // indexed (m, y, x) over the H x W grid

    const SamplePoint& sample(std::size_t m, std::size_t y, std::size_t x) const {
        return samples[(m * input.height() + y) * input.width() + x];
    }
};

struct ForwardResult {
    ImageTensor output;
    ForwardCache cache;
};

struct BackwardResult {
    ImageTensor d_input;
    std::vector<HomographyParams> d_tms;  // one row of 8 per transformation matrix
};

namespace detail {
// Deliberate gradient defects used to validate the finite-difference harness.
enum class BackwardFault {
    none,
    drop_quotient_term,   // d/dt31, d/dt32 from the numerator only
    swap_kernel_axes,     // kernel arguments (x'' - y, y'' - x)
    reduction_mismatch,   // reduce with the opposite rule to the layer's setting
};
}  // namespace detail

/// Perspective-transformation layer holding M learnable homographies.
///
/// Each transformation matrix maps integer output coordinates (x = column,
/// y = row) to input sampling coordinates; the output has Ch x M channels,
/// with block m (channels m*Ch .. m*Ch+Ch-1) holding the input warped by
/// matrix m. Taps outside the input are zero; pixels at the horizon are zero.
class PTLayer {
public:
    PTLayer(std::vector<Homography> tms, KernelSpec kernel, GradReduction reduction = GradReduction::mean);

    std::size_t tm_count() const { return tms_.size(); }
    const std::vector<Homography>& tms() const { return tms_; }
    const Homography& tm(std::size_t m) const { return tms_.at(m); }
    void set_tm(std::size_t m, const Homography& h) { tms_.at(m) = h; }
    const KernelSpec& kernel() const { return kernel_; }
    GradReduction reduction() const { return reduction_; }
    void set_reduction(GradReduction r) { reduction_ = r; }

    // TM-major, row-major: 8 * tm_count values.
    std::vector<double> params() const;
    void set_params(std::span<const double> flat);

    ForwardResult forward(const ImageTensor& input) const;
    BackwardResult backward(const ForwardCache& cache, const ImageTensor& d_output,
                            detail::BackwardFault fault = detail::BackwardFault::none) const;

private:
    std::vector<Homography> tms_;
    KernelSpec kernel_;
    GradReduction reduction_;
};

PTLayer make_layer(std::size_t m_count, KernelSpec kernel, LayerInit init,
                   GradReduction reduction = GradReduction::mean);

// Number of per-position terms averaged into each TM gradient under mean reduction.
inline std::size_t reduction_count(const Shape& input) {
    return input.batch * input.height * input.width * input.channels;
}

}  // namespace ptl
