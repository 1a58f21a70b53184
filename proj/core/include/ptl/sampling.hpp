#pragma once

#include <string>

namespace ptl {

enum class KernelKind { bilinear, bicubic };

struct KernelSpec {
    KernelKind kind = KernelKind::bilinear;
    double alpha = -0.5;  // bicubic only

    static KernelSpec bilinear() { return {KernelKind::bilinear, -0.5}; }
    static KernelSpec bicubic(double alpha = -0.5) { return {KernelKind::bicubic, alpha}; }

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

// Half-width of the kernel support: 1 for bilinear, 2 for bicubic.
int support_radius(const KernelSpec& spec);

// One-dimensional kernel: triangle for bilinear, Keys cubic with free alpha.
double k1(const KernelSpec& spec, double u);

// Derivative of k1; at breakpoints this is the right-hand derivative.
double k1_prime(const KernelSpec& spec, double u);

// Separable 2-D weight k1(du) * k1(dv).
inline double weight(const KernelSpec& spec, double du, double dv) { return k1(spec, du) * k1(spec, dv); }

// "bilinear", "bicubic" or "bicubic:<alpha>". Throws std::invalid_argument.
KernelSpec parse_kernel(const std::string& text);
std::string to_string(const KernelSpec& spec);

}  // namespace ptl
