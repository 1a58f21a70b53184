#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>

namespace ptl {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

using Matrix3 = std::array<double, 9>;  // row-major
using HomographyParams = std::array<double, 8>;

/// Pinhole intrinsics: [[s_x f, sh, tr_x, 0], [0, s_y f, tr_y, 0], [0, 0, 1, 0]].
struct CameraIntrinsics {
    double focal = 1.0;
    double scale_x = 1.0;
    double scale_y = 1.0;
    double shear = 0.0;
    double offset_x = 0.0;
    double offset_y = 0.0;
};

/// Camera-to-world rotation block and translation. The rotation is not
/// required to be orthonormal.
struct CameraExtrinsics {
    Matrix3 rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
    std::array<double, 3> translation{0, 0, 0};
};

inline constexpr double kHorizonGuard = 1e-8;
inline constexpr double kSingularGuard = 1e-12;

/// Projective map of the plane in normalized form (bottom-right entry exactly 1).
///
/// The eight free entries, row-major, are the learnable degrees of freedom of
/// a transformation matrix: (t11, t12, t13, t21, t22, t23, t31, t32).
class Homography {
public:
    static Homography identity();
    static Homography from_params(std::span<const double, 8> params);
    static Homography from_camera(const CameraIntrinsics& in, const CameraExtrinsics& ex);
    // Four-point DLT with Hartley normalization. Throws NumericalError on
    // collinear triples or a rank-deficient system.
    static Homography from_point_pairs(std::span<const Point2, 4> src, std::span<const Point2, 4> dst);
    // Divides by m[8]; throws NumericalError when that entry or the determinant is degenerate.
    static Homography from_matrix(const Matrix3& m);

    const Matrix3& matrix() const { return m_; }
    double operator()(int row, int col) const { return m_[row * 3 + col]; }
    HomographyParams params() const;
    double determinant() const;

    // Homogeneous denominator t31 x + t32 y + 1.
    double omega(Point2 p) const { return m_[6] * p.x + m_[7] * p.y + 1.0; }

    // Throws HorizonError when |omega| < kHorizonGuard.
    Point2 apply(Point2 p) const;

    friend bool operator==(const Homography&, const Homography&) = default;

private:
    explicit Homography(const Matrix3& m) : m_(m) {}
    Matrix3 m_;
};

Homography compose(const Homography& outer, const Homography& inner);
Homography invert(const Homography& h);

// Text format: three lines of three numbers, 17 significant digits.
std::string format_homography(const Homography& h);
Homography parse_homography(const std::string& text);
Homography read_homography(std::istream& in);
std::ostream& operator<<(std::ostream& os, const Homography& h);

// Shortest-exact-enough decimal with 17 significant digits.
std::string format_double(double v);

}  // namespace ptl
