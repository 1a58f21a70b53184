#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ptl/image_tensor.hpp"
#include "ptl/pt_layer.hpp"
#include "ptl/random.hpp"
#include "ptl/sampling.hpp"

namespace ptl {

struct GradCheckReport {
    double max_rel_error_input = 0.0;
    double max_rel_error_tms = 0.0;
    std::string worst_parameter;  // e.g. "tm1.t31" or "input[0,2,3,1]"
    std::size_t configurations_tested = 0;

    double max_rel_error() const { return std::max(max_rel_error_input, max_rel_error_tms); }
};

// Minimum distance of any sampling coordinate's fractional part from an
// integer, and minimum |omega|, for a configuration to be checkable.
inline constexpr double kBreakpointMargin = 1e-3;
inline constexpr double kOmegaMargin = 1e-3;

// |a - fd| / max(|a|, |fd|, 1e-8)
double relative_error(double analytic, double numeric);

// Throws std::invalid_argument with a diagnostic when any sampling point lies
// within kBreakpointMargin of a kernel breakpoint or |omega| < kOmegaMargin.
// With step > 0 the margin also covers how far the +-2*step stencil can move
// each sampling point.
void check_sampling_configuration(const PTLayer& layer, const Shape& input_shape, double step = 0.0);

/// Fourth-order central-difference check (stencil -2h, -h, +h, +2h) of every TM parameter and every input value of
/// L = mse(forward(layer, input), target) against the layer's backward pass.
/// Under mean reduction the analytic TM gradient is rescaled by the number of
/// averaged positions before comparison, so the harness checks the reduction
/// rule as well as the derivative.
GradCheckReport finite_diff_check(const PTLayer& layer, const ImageTensor& input, const ImageTensor& target,
                                  double step = 1e-5,
                                  detail::BackwardFault fault = detail::BackwardFault::none);

// Worst-of combination; configuration counts add.
GradCheckReport merge(const GradCheckReport& a, const GradCheckReport& b);

struct GradCheckCase {
    PTLayer layer;
    ImageTensor input;
    ImageTensor target;
};

// Random small configuration (4..8 px sides, 1..2 channels, 1..3 TMs, batch
// 1..2) whose sampling points clear the breakpoint and omega margins.
GradCheckCase random_case(Rng& rng, KernelSpec kernel, GradReduction reduction = GradReduction::mean,
                          double step = 1e-5);

// Tolerance used for acceptance: 1e-5 bilinear, 1e-4 bicubic.
double gradcheck_tolerance(const KernelSpec& kernel);

struct SuiteResult {
    KernelSpec kernel;
    GradCheckReport report;
    double tolerance = 0.0;
    bool passed() const { return report.max_rel_error() < tolerance; }
};

SuiteResult run_gradcheck_suite(std::uint64_t seed, std::size_t configs, KernelSpec kernel, double step = 1e-5,
                                detail::BackwardFault fault = detail::BackwardFault::none);

std::string format_report_table(std::span<const SuiteResult> results);
std::string report_csv(std::span<const SuiteResult> results);

}  // namespace ptl
