#include "ptl/gradcheck.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ptl {

namespace {

const char* const kParamNames[8] = {"t11", "t12", "t13", "t21", "t22", "t23", "t31", "t32"};

// Difference L(a) - L(b) of the MSE loss, accumulated per element as
// (a - b)(a + b - 2t) so the large common part of the two losses cancels exactly.
double loss_difference(const ImageTensor& a, const ImageTensor& b, const ImageTensor& target) {
    const auto pa = a.data();
    const auto pb = b.data();
    const auto pt = target.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) sum += (pa[i] - pb[i]) * (pa[i] + pb[i] - 2.0 * pt[i]);
    return sum / static_cast<double>(pa.size());
}

// Fourth-order central difference from outputs at -2h, -h, +h, +2h:
// (8 [L(h) - L(-h)] - [L(2h) - L(-2h)]) / 12h.
double central_difference(const std::array<ImageTensor, 4>& out, const ImageTensor& target, double step) {
    const double inner = loss_difference(out[2], out[1], target);
    const double outer = loss_difference(out[3], out[0], target);
    return (8.0 * inner - outer) / (12.0 * step);
}

constexpr std::array<double, 4> kStencil{-2.0, -1.0, 1.0, 2.0};

double distance_to_integer(double v) { return std::abs(v - std::round(v)); }

void note(double err, const std::string& name, double& slot, GradCheckReport& report, double& worst) {
    if (err > slot) slot = err;
    if (err > worst) {
        worst = err;
        report.worst_parameter = name;
    }
}

}  // namespace

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

void check_sampling_configuration(const PTLayer& layer, const Shape& input_shape, double step) {
    const double r = support_radius(layer.kernel());
    const double x_hi = static_cast<double>(input_shape.width - 1) + r + kBreakpointMargin;
    const double y_hi = static_cast<double>(input_shape.height - 1) + r + kBreakpointMargin;
    const double lo = -r - kBreakpointMargin;
    for (std::size_t m = 0; m < layer.tm_count(); ++m) {
        const Homography& h = layer.tm(m);
        for (std::size_t yo = 0; yo < input_shape.height; ++yo) {
            for (std::size_t xo = 0; xo < input_shape.width; ++xo) {
                const Point2 p{static_cast<double>(xo), static_cast<double>(yo)};
                if (std::abs(h.omega(p)) < kOmegaMargin) {
                    throw std::invalid_argument("gradcheck: tm" + std::to_string(m) + " output pixel (" +
                                                std::to_string(xo) + "," + std::to_string(yo) +
                                                ") is too close to the horizon");
                }
                const Point2 s = h.apply(p);
                if (s.x < lo || s.x > x_hi || s.y < lo || s.y > y_hi) continue;
                // Largest move of (x'', y'') under a +-2*step change of any single parameter.
                const double reach = 2.0 * step * std::max({std::abs(p.x), std::abs(p.y), 1.0}) *
                                     std::max({std::abs(s.x), std::abs(s.y), 1.0}) / std::abs(h.omega(p));
                const double margin = std::max(kBreakpointMargin, 1.5 * reach);
                if (distance_to_integer(s.x) < margin || distance_to_integer(s.y) < margin) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "gradcheck: tm" << m << " output pixel (" << xo << "," << yo << ") samples (" << s.x << ","
                       << s.y << "), within " << margin << " of a kernel breakpoint";
                    throw std::invalid_argument(os.str());
                }
            }
        }
    }
}

GradCheckReport finite_diff_check(const PTLayer& layer, const ImageTensor& input, const ImageTensor& target,
                                  double step, detail::BackwardFault fault) {
    if (!(step > 0.0)) throw std::invalid_argument("gradcheck: step must be positive");
    check_sampling_configuration(layer, input.shape(), step);

    ForwardResult fwd = layer.forward(input);
    MseResult loss = mse(fwd.output, target);
    BackwardResult analytic = layer.backward(fwd.cache, loss.grad, fault);

    // Loss-gradient units: undo the averaging the layer claims to apply.
    const double tm_scale =
        layer.reduction() == GradReduction::mean ? static_cast<double>(reduction_count(input.shape())) : 1.0;

    GradCheckReport report;
    report.configurations_tested = 1;
    double worst = -1.0;

    if (fwd.output.shape() != target.shape()) throw std::invalid_argument("gradcheck: target shape mismatch");

    const std::vector<double> base = layer.params();
    for (std::size_t m = 0; m < layer.tm_count(); ++m) {
        for (std::size_t i = 0; i < 8; ++i) {
            std::array<ImageTensor, 4> out;
            for (std::size_t s = 0; s < 4; ++s) {
                PTLayer probe = layer;
                std::vector<double> p = base;
                p[m * 8 + i] = base[m * 8 + i] + kStencil[s] * step;
                probe.set_params(p);
                out[s] = probe.forward(input).output;
            }
            const double fd = central_difference(out, target, step);
            const double err = relative_error(analytic.d_tms[m][i] * tm_scale, fd);
            note(err, "tm" + std::to_string(m) + "." + kParamNames[i], report.max_rel_error_tms, report, worst);
        }
    }

    ImageTensor probe = input;
    for (std::size_t n = 0; n < input.batch(); ++n) {
        for (std::size_t y = 0; y < input.height(); ++y) {
            for (std::size_t x = 0; x < input.width(); ++x) {
                for (std::size_t c = 0; c < input.channels(); ++c) {
                    const double original = input(n, y, x, c);
                    std::array<ImageTensor, 4> out;
                    for (std::size_t s = 0; s < 4; ++s) {
                        probe(n, y, x, c) = original + kStencil[s] * step;
                        out[s] = layer.forward(probe).output;
                    }
                    probe(n, y, x, c) = original;
                    const double fd = central_difference(out, target, step);
                    const double err = relative_error(analytic.d_input(n, y, x, c), fd);
                    note(err,
                         "input[" + std::to_string(n) + "," + std::to_string(y) + "," + std::to_string(x) + "," +
                             std::to_string(c) + "]",
                         report.max_rel_error_input, report, worst);
                }
            }
        }
    }
    return report;
}

GradCheckReport merge(const GradCheckReport& a, const GradCheckReport& b) {
    GradCheckReport out;
    out.max_rel_error_input = std::max(a.max_rel_error_input, b.max_rel_error_input);
    out.max_rel_error_tms = std::max(a.max_rel_error_tms, b.max_rel_error_tms);
    out.worst_parameter = b.max_rel_error() > a.max_rel_error() ? b.worst_parameter : a.worst_parameter;
    out.configurations_tested = a.configurations_tested + b.configurations_tested;
    return out;
}

GradCheckCase random_case(Rng& rng, KernelSpec kernel, GradReduction reduction, double step) {
    const Shape shape{1 + rng.index(2), 4 + rng.index(5), 4 + rng.index(5), 1 + rng.index(2)};
    const std::size_t m_count = 1 + rng.index(3);

    ImageTensor input(shape);
    for (double& v : input.data()) v = rng.uniform();
    ImageTensor target(Shape{shape.batch, shape.height, shape.width, shape.channels * m_count});
    for (double& v : target.data()) v = rng.uniform();

    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<Homography> tms;
        for (std::size_t m = 0; m < m_count; ++m) {
            const HomographyParams p{1.0 + rng.symmetric(0.15), rng.symmetric(0.15), rng.symmetric(1.5),
                                     rng.symmetric(0.15),       1.0 + rng.symmetric(0.15), rng.symmetric(1.5),
                                     rng.symmetric(0.02),       rng.symmetric(0.02)};
            tms.push_back(Homography::from_params(p));
        }
        PTLayer layer(std::move(tms), kernel, reduction);
        try {
            check_sampling_configuration(layer, shape, step);
        } catch (const std::invalid_argument&) {
            continue;
        }
        return GradCheckCase{std::move(layer), std::move(input), std::move(target)};
    }
    throw std::runtime_error("gradcheck: could not draw a configuration clear of kernel breakpoints");
}

double gradcheck_tolerance(const KernelSpec& kernel) { return kernel.kind == KernelKind::bilinear ? 1e-5 : 1e-4; }

SuiteResult run_gradcheck_suite(std::uint64_t seed, std::size_t configs, KernelSpec kernel, double step,
                                detail::BackwardFault fault) {
    if (configs == 0) throw std::invalid_argument("gradcheck: need at least one configuration");
    Rng rng(seed, kernel.kind == KernelKind::bilinear ? 0 : 1);
    SuiteResult result{kernel, {}, gradcheck_tolerance(kernel)};
    for (std::size_t k = 0; k < configs; ++k) {
        GradCheckCase c = random_case(rng, kernel, GradReduction::mean, step);
        result.report = merge(result.report, finite_diff_check(c.layer, c.input, c.target, step, fault));
    }
    return result;
}

std::string format_report_table(std::span<const SuiteResult> results) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %8s %14s %14s %-20s %10s %6s\n", "kernel", "configs", "max_rel_input",
                  "max_rel_tms", "worst", "tolerance", "status");
    out += line;
    for (const auto& r : results) {
        std::snprintf(line, sizeof line, "%-16s %8zu %14.3e %14.3e %-20s %10.1e %6s\n", to_string(r.kernel).c_str(),
                      r.report.configurations_tested, r.report.max_rel_error_input, r.report.max_rel_error_tms,
                      r.report.worst_parameter.c_str(), r.tolerance, r.passed() ? "PASS" : "FAIL");
        out += line;
    }
    return out;
}

std::string report_csv(std::span<const SuiteResult> results) {
    std::string out = "kernel,configurations,max_rel_error_input,max_rel_error_tms,worst_parameter,tolerance,passed\n";
    for (const auto& r : results) {
        out += to_string(r.kernel) + "," + std::to_string(r.report.configurations_tested) + "," +
               format_double(r.report.max_rel_error_input) + "," + format_double(r.report.max_rel_error_tms) + ",\"" +
               r.report.worst_parameter + "\"," + format_double(r.tolerance) + "," + (r.passed() ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace ptl
