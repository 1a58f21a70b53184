#include "ptl/homography.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "ptl/error.hpp"

namespace ptl {

namespace {

Matrix3 multiply(const Matrix3& a, const Matrix3& b) {
    Matrix3 c{};
    for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 3; ++k) {
            double s = 0.0;
            for (int j = 0; j < 3; ++j) s += a[r * 3 + j] * b[j * 3 + k];
            c[r * 3 + k] = s;
        }
    }
    return c;
}

double det3(const Matrix3& m) {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Matrix3 inverse3(const Matrix3& m) {
    double det = det3(m);
    if (!(std::abs(det) > kSingularGuard)) throw NumericalError("homography is singular (|det| <= 1e-12)");
    Matrix3 adj{
        m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
        m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
        m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3],
    };
    for (double& v : adj) v /= det;
    return adj;
}

bool nearly_collinear(Point2 a, Point2 b, Point2 c) {
    double ux = b.x - a.x, uy = b.y - a.y;
    double vx = c.x - a.x, vy = c.y - a.y;
    double lu = std::hypot(ux, uy), lv = std::hypot(vx, vy);
    if (lu == 0.0 || lv == 0.0) return true;
    return std::abs(ux * vy - uy * vx) <= 1e-10 * lu * lv;
}

void check_quad(std::span<const Point2, 4> q, const char* which) {
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            for (int k = j + 1; k < 4; ++k) {
                if (nearly_collinear(q[i], q[j], q[k])) {
                    throw NumericalError(std::string("from_point_pairs: three ") + which +
                                         " points are collinear");
                }
            }
        }
    }
}

// Similarity taking the centroid to the origin with mean distance sqrt(2).
Matrix3 hartley_transform(std::span<const Point2, 4> q) {
    double cx = 0.0, cy = 0.0;
    for (const auto& p : q) {
        cx += p.x;
        cy += p.y;
    }
    cx /= 4.0;
    cy /= 4.0;
    double mean_dist = 0.0;
    for (const auto& p : q) mean_dist += std::hypot(p.x - cx, p.y - cy);
    mean_dist /= 4.0;
    double s = std::sqrt(2.0) / mean_dist;
    return Matrix3{s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1};
}

Point2 transform_affine(const Matrix3& t, Point2 p) {
    return {t[0] * p.x + t[1] * p.y + t[2], t[3] * p.x + t[4] * p.y + t[5]};
}

// Solves a dense n x n system in place with partial pivoting.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, std::size_t n) {
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        if (std::abs(a[pivot * n + col]) <= 1e-12 * scale) {
            throw NumericalError("from_point_pairs: rank-deficient correspondence system");
        }
        if (pivot != col) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r * n + col] / a[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i * n + k] * x[k];
        x[i] = s / a[i * n + i];
    }
    return x;
}

}  // namespace

Homography Homography::identity() { return Homography(Matrix3{1, 0, 0, 0, 1, 0, 0, 0, 1}); }

Homography Homography::from_matrix(const Matrix3& m) {
    if (!(std::abs(m[8]) >= kSingularGuard)) {
        throw NumericalError("homography bottom-right entry is degenerate (|m33| < 1e-12)");
    }
    Matrix3 n = m;
    for (double& v : n) v /= m[8];
    n[8] = 1.0;
    if (!(std::abs(det3(n)) > kSingularGuard)) throw NumericalError("homography is singular (|det| <= 1e-12)");
    return Homography(n);
}

Homography Homography::from_params(std::span<const double, 8> p) {
    return from_matrix(Matrix3{p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], 1.0});
}

Homography Homography::from_camera(const CameraIntrinsics& in, const CameraExtrinsics& ex) {
    if (in.scale_x * in.focal == 0.0 || in.scale_y * in.focal == 0.0) {
        throw std::invalid_argument("from_camera: s_x*f and s_y*f must be nonzero");
    }
    // IN is 3x4 with a zero last column; EX is 4x4 with bottom row (0,0,0,1).
    const double intr[3][4] = {
        {in.scale_x * in.focal, in.shear, in.offset_x, 0.0},
        {0.0, in.scale_y * in.focal, in.offset_y, 0.0},
        {0.0, 0.0, 1.0, 0.0},
    };
    double extr[4][4] = {};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) extr[r][c] = ex.rotation[r * 3 + c];
        extr[r][3] = ex.translation[r];
    }
    extr[3][3] = 1.0;

    double cam[3][4] = {};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += intr[r][k] * extr[k][c];
            cam[r][c] = s;
        }
    }
    // Restriction to the world plane z = 0 keeps columns 1, 2 and 4.
    Matrix3 h{cam[0][0], cam[0][1], cam[0][3], cam[1][0], cam[1][1], cam[1][3], cam[2][0], cam[2][1], cam[2][3]};
    if (!(std::abs(h[8]) >= kSingularGuard)) {
        throw NumericalError("from_camera: degenerate camera, world plane passes through the camera centre");
    }
    return from_matrix(h);
}

Homography Homography::from_point_pairs(std::span<const Point2, 4> src, std::span<const Point2, 4> dst) {
    check_quad(src, "source");
    check_quad(dst, "destination");
    const Matrix3 ts = hartley_transform(src);
    const Matrix3 td = hartley_transform(dst);

    std::vector<double> a(64, 0.0);
    std::vector<double> b(8, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
        Point2 s = transform_affine(ts, src[i]);
        Point2 d = transform_affine(td, dst[i]);
        double* r0 = &a[(2 * i) * 8];
        double* r1 = &a[(2 * i + 1) * 8];
        r0[0] = s.x; r0[1] = s.y; r0[2] = 1.0;
        r0[6] = -d.x * s.x; r0[7] = -d.x * s.y;
        r1[3] = s.x; r1[4] = s.y; r1[5] = 1.0;
        r1[6] = -d.y * s.x; r1[7] = -d.y * s.y;
        b[2 * i] = d.x;
        b[2 * i + 1] = d.y;
    }
    std::vector<double> h = solve_dense(std::move(a), std::move(b), 8);
    Matrix3 normalized{h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0};
    return from_matrix(multiply(inverse3(td), multiply(normalized, ts)));
}

HomographyParams Homography::params() const {
    return {m_[0], m_[1], m_[2], m_[3], m_[4], m_[5], m_[6], m_[7]};
}

double Homography::determinant() const { return det3(m_); }

Point2 Homography::apply(Point2 p) const {
    const double w = m_[6] * p.x + m_[7] * p.y + 1.0;
    if (!(std::abs(w) >= kHorizonGuard)) throw HorizonError("point lies on the horizon line (|omega| < 1e-8)");
    return {(m_[0] * p.x + m_[1] * p.y + m_[2]) / w, (m_[3] * p.x + m_[4] * p.y + m_[5]) / w};
}

Homography compose(const Homography& outer, const Homography& inner) {
    return Homography::from_matrix(multiply(outer.matrix(), inner.matrix()));
}

Homography invert(const Homography& h) { return Homography::from_matrix(inverse3(h.matrix())); }

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, end);
}

std::string format_homography(const Homography& h) {
    std::string out;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            out += format_double(h(r, c));
            out += c == 2 ? '\n' : ' ';
        }
    }
    return out;
}

Homography read_homography(std::istream& in) {
    Matrix3 m{};
    for (double& v : m) {
        std::string tok;
        if (!(in >> tok)) throw DataError("homography text: expected 9 numbers");
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
            throw DataError("homography text: bad number '" + tok + "'");
        }
    }
    std::string extra;
    if (in >> extra) throw DataError("homography text: trailing content '" + extra + "'");
    return Homography::from_matrix(m);
}

Homography parse_homography(const std::string& text) {
    std::istringstream in(text);
    return read_homography(in);
}

std::ostream& operator<<(std::ostream& os, const Homography& h) { return os << format_homography(h); }

}  // namespace ptl
