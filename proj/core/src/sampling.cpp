#include "ptl/sampling.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "ptl/homography.hpp"

namespace ptl {

int support_radius(const KernelSpec& spec) { return spec.kind == KernelKind::bilinear ? 1 : 2; }

double k1(const KernelSpec& spec, double u) {
    const double a = std::abs(u);
    if (spec.kind == KernelKind::bilinear) return a < 1.0 ? 1.0 - a : 0.0;

    const double alpha = spec.alpha;
    if (a <= 1.0) return (alpha + 2.0) * a * a * a - (alpha + 3.0) * a * a + 1.0;
    if (a < 2.0) return alpha * a * a * a - 5.0 * alpha * a * a + 8.0 * alpha * a - 4.0 * alpha;
    return 0.0;
}

double k1_prime(const KernelSpec& spec, double u) {
    if (spec.kind == KernelKind::bilinear) {
        if (u < -1.0 || u >= 1.0) return 0.0;
        return u < 0.0 ? 1.0 : -1.0;
    }
    // Odd extension of the derivative on |u|. The cubic is C1, so one-sided
    // limits agree at every breakpoint.
    const double alpha = spec.alpha;
    const double a = std::abs(u);
    double d = 0.0;
    if (a <= 1.0) {
        d = 3.0 * (alpha + 2.0) * a * a - 2.0 * (alpha + 3.0) * a;
    } else if (a < 2.0) {
        d = 3.0 * alpha * a * a - 10.0 * alpha * a + 8.0 * alpha;
    }
    return u < 0.0 ? -d : d;
}

KernelSpec parse_kernel(const std::string& text) {
    if (text == "bilinear") return KernelSpec::bilinear();
    if (text == "bicubic") return KernelSpec::bicubic();
    const std::string prefix = "bicubic:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string rest = text.substr(prefix.size());
        double alpha = 0.0;
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), alpha);
        if (ec == std::errc() && ptr == rest.data() + rest.size() && std::isfinite(alpha)) {
            return KernelSpec::bicubic(alpha);
        }
    }
    throw std::invalid_argument("unknown kernel '" + text + "' (expected bilinear, bicubic or bicubic:<alpha>)");
}

std::string to_string(const KernelSpec& spec) {
    if (spec.kind == KernelKind::bilinear) return "bilinear";
    return "bicubic:" + format_double(spec.alpha);
}

}  // namespace ptl
