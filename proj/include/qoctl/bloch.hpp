#pragma once

// Bloch-vector and 2x2 operator algebra for a single qubit. Everything here
// is a pure function on small value types; no allocation, no shared state.

#include <array>
#include <cmath>
#include <complex>
#include <utility>

#include "qoctl/errors.hpp"

namespace qoctl {

using complexd = std::complex<double>;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// State Bloch vector: rho = (1 + a.sigma)/2, physical when |a| <= 1.
struct BlochState {
    double ax = 0.0, ay = 0.0, az = 0.0;

    Vec3 vec() const { return {ax, ay, az}; }
    static BlochState from_vec(const Vec3& v) { return {v.x, v.y, v.z}; }
    double norm() const { return vec().norm(); }
    bool physical(double tol = 1e-9) const { return norm() <= 1.0 + tol; }
};

// Costate Bloch vector: pi = q.sigma, traceless self-adjoint, unconstrained
// magnitude.
struct CostateBloch {
    double qx = 0.0, qy = 0.0, qz = 0.0;

    Vec3 vec() const { return {qx, qy, qz}; }
    static CostateBloch from_vec(const Vec3& v) { return {v.x, v.y, v.z}; }
};

// Dense 2x2 complex matrix, row-major. Small enough that value semantics
// beat any linear-algebra dependency.
struct Mat2 {
    complexd m00{0.0, 0.0}, m01{0.0, 0.0}, m10{0.0, 0.0}, m11{0.0, 0.0};

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Mat2 zero() { return {}; }
    static Mat2 sigma_x() { return {0.0, 1.0, 1.0, 0.0}; }
    static Mat2 sigma_y() {
        return {0.0, complexd(0.0, -1.0), complexd(0.0, 1.0), 0.0};
    }
    static Mat2 sigma_z() { return {1.0, 0.0, 0.0, -1.0}; }

    Mat2 operator+(const Mat2& o) const {
        return {m00 + o.m00, m01 + o.m01, m10 + o.m10, m11 + o.m11};
    }
    Mat2 operator-(const Mat2& o) const {
        return {m00 - o.m00, m01 - o.m01, m10 - o.m10, m11 - o.m11};
    }
    Mat2 operator*(const Mat2& o) const {
        return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
                m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
    }
    Mat2 operator*(const complexd& s) const { return {m00 * s, m01 * s, m10 * s, m11 * s}; }
    Mat2 operator*(double s) const { return *this * complexd(s, 0.0); }

    Mat2 adjoint() const {
        return {std::conj(m00), std::conj(m10), std::conj(m01), std::conj(m11)};
    }
    complexd trace() const { return m00 + m11; }

    double max_abs() const {
        return std::max(std::max(std::abs(m00), std::abs(m01)),
                        std::max(std::abs(m10), std::abs(m11)));
    }

    bool is_hermitian(double tol = 1e-12) const { return (*this - adjoint()).max_abs() <= tol; }
    bool is_unitary(double tol = 1e-12) const {
        return (*this * adjoint() - identity()).max_abs() <= tol;
    }
};

inline Mat2 operator*(double s, const Mat2& m) { return m * s; }
inline Mat2 operator*(const complexd& s, const Mat2& m) { return m * s; }

inline Mat2 commutator(const Mat2& a, const Mat2& b) { return a * b - b * a; }
inline Mat2 anticommutator(const Mat2& a, const Mat2& b) { return a * b + b * a; }

// Hilbert-Schmidt pairing <A B> = Tr[A B], real part (all uses pair
// self-adjoint operators).
inline double trace_pair(const Mat2& a, const Mat2& b) { return ((a * b).trace()).real(); }

// v.sigma
inline Mat2 pauli_dot(const Vec3& v) {
    return Mat2{complexd(v.z, 0.0), complexd(v.x, -v.y), complexd(v.x, v.y), complexd(-v.z, 0.0)};
}

// rho = (1 + a.sigma)/2
inline Mat2 to_density(const BlochState& a) {
    Vec3 v = a.vec();
    return Mat2{complexd(0.5 * (1.0 + v.z), 0.0), complexd(0.5 * v.x, -0.5 * v.y),
                complexd(0.5 * v.x, 0.5 * v.y), complexd(0.5 * (1.0 - v.z), 0.0)};
}

inline BlochState from_density(const Mat2& rho) {
    return {2.0 * rho.m01.real(), -2.0 * rho.m01.imag(), (rho.m00 - rho.m11).real()};
}

// pi = q.sigma
inline Mat2 to_costate_matrix(const CostateBloch& q) { return pauli_dot(q.vec()); }

inline CostateBloch from_costate_matrix(const Mat2& pi) {
    return {pi.m01.real(), -pi.m01.imag(), 0.5 * (pi.m00 - pi.m11).real()};
}

// Bloch-rate components of a traceless Hermitian matrix M = (v.sigma)/2,
// i.e. the inverse of rho-dot = (adot.sigma)/2. Used to read generators
// back into Bloch coordinates.
inline Vec3 bloch_rate_from_matrix(const Mat2& m) {
    return {2.0 * m.m01.real(), -2.0 * m.m01.imag(), (m.m00 - m.m11).real()};
}

// exp(-i angle (axis.sigma)/2); axis must be unit length.
inline Mat2 axis_angle_unitary(const Vec3& axis, double angle) {
    if (std::abs(axis.norm() - 1.0) > 1e-12)
        throw input_error("axis_angle_unitary: axis is not normalized");
    double c = std::cos(0.5 * angle);
    double s = std::sin(0.5 * angle);
    return Mat2::identity() * complexd(c, 0.0) + pauli_dot(axis) * complexd(0.0, -s);
}

// Rotate a Bloch vector by `angle` about `axis` (right-hand rule); equals
// conjugation of rho by exp(-i angle (axis.sigma)/2). Rodrigues form keeps
// the norm exact.
inline BlochState rotate_bloch(const BlochState& a, const Vec3& axis, double angle) {
    if (std::abs(axis.norm() - 1.0) > 1e-12)
        throw input_error("rotate_bloch: axis is not normalized");
    Vec3 v = a.vec();
    double c = std::cos(angle), s = std::sin(angle);
    Vec3 rotated = v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c));
    return BlochState::from_vec(rotated);
}

inline Vec3 rotate_vec(const Vec3& v, const Vec3& axis, double angle) {
    BlochState r = rotate_bloch(BlochState::from_vec(v), axis, angle);
    return r.vec();
}

// [a.sigma, b.sigma] = 2i (a x b).sigma; returns 2 (a x b).
inline Vec3 pauli_commutator(const Vec3& a, const Vec3& b) { return a.cross(b) * 2.0; }

// Eigendecomposition of a Hermitian 2x2 matrix. Eigenvalues descending;
// vectors[k] is the normalized eigenvector of values[k].
struct EigenSystem {
    std::array<double, 2> values;                    // values[0] >= values[1]
    std::array<std::array<complexd, 2>, 2> vectors;  // vectors[k] = k-th eigenvector
};

inline EigenSystem eigh(const Mat2& h) {
    double a = h.m00.real();
    double d = h.m11.real();
    complexd b = h.m01;
    double s = 0.5 * (a + d);
    double r = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
    EigenSystem es;
    es.values = {s + r, s - r};
    if (std::abs(b) > 1e-300) {
        // (H - values[0]) annihilates (b, values[0] - a)
        complexd v0 = b;
        complexd v1 = complexd(es.values[0] - a, 0.0);
        double n = std::sqrt(std::norm(v0) + std::norm(v1));
        es.vectors[0] = {v0 / n, v1 / n};
        es.vectors[1] = {-std::conj(v1 / n), std::conj(v0 / n)};
    } else if (a >= d) {  // diagonal (or fully degenerate) matrix
        es.vectors = {{{complexd(1.0, 0.0), complexd(0.0, 0.0)},
                       {complexd(0.0, 0.0), complexd(1.0, 0.0)}}};
    } else {
        es.vectors = {{{complexd(0.0, 0.0), complexd(1.0, 0.0)},
                       {complexd(1.0, 0.0), complexd(0.0, 0.0)}}};
    }
    return es;
}

// exp(i M) for Hermitian M = s*1 + v.sigma, closed form, exactly unitary.
inline Mat2 exp_i_hermitian(const Mat2& m) {
    double s = 0.5 * (m.m00 + m.m11).real();
    Vec3 v = {m.m01.real(), -m.m01.imag(), 0.5 * (m.m00 - m.m11).real()};
    double w = v.norm();
    complexd phase = std::exp(complexd(0.0, s));
    if (w < 1e-300) return Mat2::identity() * phase;
    double c = std::cos(w), sn = std::sin(w);
    Mat2 u = Mat2::identity() * complexd(c, 0.0) + pauli_dot(v * (1.0 / w)) * complexd(0.0, sn);
    return u * phase;
}

}  // namespace qoctl
