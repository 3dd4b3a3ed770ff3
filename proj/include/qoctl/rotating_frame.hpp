#pragma once

// Change of basis to the instantaneous Hamiltonian eigenframe: the Hermitian
// generator Lambda, reconstruction of the frame unitary U from Udot = i Lambda U,
// and extraction of Lambda from a sampled Hamiltonian path.

#include <cmath>
#include <functional>
#include <vector>

#include "qoctl/bloch.hpp"
#include "qoctl/errors.hpp"

namespace qoctl {

// Lambda = [(l0+l3) 1 + 2 (l1 sx + l2 sy) + (l0-l3) sz] / 2
struct LambdaCoefficients {
    double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;

    Mat2 matrix() const {
        double s = 0.5 * (l0 + l3);
        return Mat2::identity() * s + pauli_dot(bloch_axis());
    }
    // Pauli-vector part; the Bloch precession axis contributed by Lambda.
    Vec3 bloch_axis() const { return {l1, l2, 0.5 * (l0 - l3)}; }

    static LambdaCoefficients from_matrix(const Mat2& m) {
        double s = 0.5 * (m.m00 + m.m11).real();
        double vx = m.m01.real();
        double vy = -m.m01.imag();
        double vz = 0.5 * (m.m00 - m.m11).real();
        return {s + vz, vx, vy, s - vz};
    }

    LambdaCoefficients operator+(const LambdaCoefficients& o) const {
        return {l0 + o.l0, l1 + o.l1, l2 + o.l2, l3 + o.l3};
    }
    LambdaCoefficients operator*(double c) const { return {l0 * c, l1 * c, l2 * c, l3 * c}; }
};

using LambdaFn = std::function<LambdaCoefficients(double)>;

// Uniformly sampled Lambda(t); interpolated linearly when evaluated between
// nodes.
struct LambdaSchedule {
    std::vector<double> times;
    std::vector<LambdaCoefficients> values;

    LambdaCoefficients at(double t) const {
        if (times.empty()) return {};
        if (t <= times.front()) return values.front();
        if (t >= times.back()) return values.back();
        double h = (times.back() - times.front()) / double(times.size() - 1);
        auto k = static_cast<std::size_t>((t - times.front()) / h);
        if (k + 1 >= times.size()) k = times.size() - 2;
        double w = (t - times[k]) / (times[k + 1] - times[k]);
        return values[k] * (1.0 - w) + values[k + 1] * w;
    }
    LambdaFn interpolator() const {
        return [s = *this](double t) { return s.at(t); };
    }
};

// Propagate Udot = i Lambda(t) U from t0 to t1 in `steps` equal steps with a
// fourth-order Magnus rule; each step is a closed-form 2x2 exponential, so
// the result is unitary by construction. For Lambda constant on a step the
// step is exact.
inline Mat2 reconstruct_U(const LambdaFn& lambda, const Mat2& u0, double t0, double t1,
                          int steps) {
    if (!u0.is_unitary(1e-10)) throw input_error("reconstruct_U: U0 is not unitary");
    if (steps < 1 || t1 == t0) return u0;
    const double c = 0.5 * std::sqrt(3.0) / 3.0;  // Gauss node offset
    double h = (t1 - t0) / steps;
    Mat2 u = u0;
    for (int k = 0; k < steps; ++k) {
        double tm = t0 + (k + 0.5) * h;
        Mat2 l1 = lambda(tm - c * h).matrix();
        Mat2 l2 = lambda(tm + c * h).matrix();
        // Omega = i h (L1+L2)/2 + sqrt(3) h^2 [L1, L2] / 12; exp(Omega) with
        // Omega = i * Hermitian
        Mat2 herm = 0.5 * h * (l1 + l2) +
                    complexd(0.0, -std::sqrt(3.0) / 12.0 * h * h) * commutator(l1, l2);
        u = exp_i_hermitian(herm) * u;
    }
    return u;
}

// Schedule-driven overload: one Magnus step per grid interval up to time t.
inline Mat2 reconstruct_U(const LambdaSchedule& schedule, const Mat2& u0, double t) {
    if (schedule.times.size() < 2) return u0;
    Mat2 u = u0;
    LambdaFn fn = schedule.interpolator();
    for (std::size_t k = 0; k + 1 < schedule.times.size() && schedule.times[k] < t; ++k) {
        double hi = std::min(schedule.times[k + 1], t);
        u = reconstruct_U(fn, u, schedule.times[k], hi, 1);
    }
    return u;
}

inline Mat2 rotate_frame(const Mat2& rho, const Mat2& u) {
    if (!u.is_unitary(1e-10)) throw input_error("rotate_frame: U is not unitary");
    return u * rho * u.adjoint();
}

// Sampled Hermitian H(t) on a uniform grid.
struct HamiltonianPath {
    std::vector<double> times;
    std::vector<Mat2> h;
};

namespace detail {

// Phase-aligned eigenvectors along the path: ordered by descending eigenvalue
// (no crossings below the gap floor) and rotated so the overlap with the
// previous sample is real positive.
struct AlignedFrame {
    std::array<double, 2> values;
    std::array<std::array<complexd, 2>, 2> vectors;
};

inline std::vector<AlignedFrame> aligned_frames(const HamiltonianPath& path,
                                                double gap_floor_rel) {
    std::size_t n = path.times.size();
    if (n < 2) throw input_error("HamiltonianPath: need at least 2 samples");
    std::vector<AlignedFrame> frames(n);
    double max_gap = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        EigenSystem es = eigh(path.h[k]);
        frames[k].values = es.values;
        frames[k].vectors = es.vectors;
        max_gap = std::max(max_gap, es.values[0] - es.values[1]);
    }
    double floor = gap_floor_rel * max_gap;
    for (std::size_t k = 0; k < n; ++k) {
        double gap = frames[k].values[0] - frames[k].values[1];
        if (gap < floor)
            throw degenerate_spectrum_error("lambda_from_path: eigenvalue gap " +
                                            std::to_string(gap) + " below floor at sample " +
                                            std::to_string(k));
        if (k == 0) continue;
        for (int m = 0; m < 2; ++m) {
            complexd overlap = std::conj(frames[k - 1].vectors[m][0]) * frames[k].vectors[m][0] +
                               std::conj(frames[k - 1].vectors[m][1]) * frames[k].vectors[m][1];
            double mag = std::abs(overlap);
            complexd phase = mag > 1e-300 ? std::conj(overlap) / mag : complexd(1.0, 0.0);
            frames[k].vectors[m][0] *= phase;
            frames[k].vectors[m][1] *= phase;
        }
    }
    return frames;
}

}  // namespace detail

// Generator extracted from a Hamiltonian path: off-diagonal (in the
// instantaneous eigenbasis) elements i <m|dH/dt|n> / (e_n - e_m); the
// diagonal is gauged to zero. dH/dt uses fourth-order central differences,
// one-sided at the endpoints.
inline LambdaSchedule lambda_from_path(const HamiltonianPath& path,
                                       double gap_floor_rel = 1e-6) {
    std::size_t n = path.times.size();
    auto frames = detail::aligned_frames(path, gap_floor_rel);
    double h = (path.times.back() - path.times.front()) / double(n - 1);

    auto hdot_at = [&](std::size_t k) -> Mat2 {
        const auto& m = path.h;
        if (k == 0) return (m[1] - m[0]) * (1.0 / h);
        if (k == n - 1) return (m[n - 1] - m[n - 2]) * (1.0 / h);
        if (k == 1 || k == n - 2) return (m[k + 1] - m[k - 1]) * (0.5 / h);
        return (m[k - 2] - 8.0 * m[k - 1] + 8.0 * m[k + 1] - m[k + 2]) * (1.0 / (12.0 * h));
    };

    LambdaSchedule out;
    out.times = path.times;
    out.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        Mat2 hdot = hdot_at(k);
        const auto& f = frames[k];
        auto sandwich = [&](int m, int nn) {
            const auto& vm = f.vectors[m];
            const auto& vn = f.vectors[nn];
            complexd acc = 0.0;
            acc += std::conj(vm[0]) * (hdot.m00 * vn[0] + hdot.m01 * vn[1]);
            acc += std::conj(vm[1]) * (hdot.m10 * vn[0] + hdot.m11 * vn[1]);
            return acc;
        };
        complexd l01 = complexd(0.0, 1.0) * sandwich(0, 1) / (f.values[1] - f.values[0]);
        Mat2 lam{0.0, l01, std::conj(l01), 0.0};
        out.values[k] = LambdaCoefficients::from_matrix(lam);
    }
    return out;
}

// Diagonal energies along the path (descending order, matching the frame).
inline std::vector<Mat2> diagonal_path(const HamiltonianPath& path,
                                       double gap_floor_rel = 1e-6) {
    auto frames = detail::aligned_frames(path, gap_floor_rel);
    std::vector<Mat2> out(frames.size());
    for (std::size_t k = 0; k < frames.size(); ++k)
        out[k] = Mat2{complexd(frames[k].values[0], 0.0), 0.0, 0.0,
                      complexd(frames[k].values[1], 0.0)};
    return out;
}

// Frame unitary at each sample, U(0) = diagonalizer of H(0): rows are the
// aligned eigenvectors.
inline Mat2 initial_diagonalizer(const HamiltonianPath& path, double gap_floor_rel = 1e-6) {
    auto frames = detail::aligned_frames(path, gap_floor_rel);
    const auto& v = frames[0].vectors;
    return Mat2{std::conj(v[0][0]), std::conj(v[0][1]), std::conj(v[1][0]), std::conj(v[1][1])};
}

// Residual of the frame identity U rhodot U^dag = d(rho~)/dt - i[Lambda, rho~]
// on sampled data; finite differences limit the attainable accuracy.
inline double rotdin_identity_check(const std::vector<double>& times,
                                    const std::vector<Mat2>& rho,
                                    const std::vector<Mat2>& u,
                                    const LambdaSchedule& lambda) {
    std::size_t n = times.size();
    if (n < 3 || rho.size() != n || u.size() != n)
        throw input_error("rotdin_identity_check: need matching sampled rho(t), U(t)");
    double h = (times.back() - times.front()) / double(n - 1);
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        Mat2 rhodot = (rho[k + 1] - rho[k - 1]) * (0.5 / h);
        Mat2 rho_t = u[k] * rho[k] * u[k].adjoint();
        Mat2 rho_t_prev = u[k - 1] * rho[k - 1] * u[k - 1].adjoint();
        Mat2 rho_t_next = u[k + 1] * rho[k + 1] * u[k + 1].adjoint();
        Mat2 rho_t_dot = (rho_t_next - rho_t_prev) * (0.5 / h);
        Mat2 lhs = u[k] * rhodot * u[k].adjoint();
        Mat2 rhs = rho_t_dot - complexd(0.0, 1.0) * commutator(lambda.at(times[k]).matrix(), rho_t);
        worst = std::max(worst, (lhs - rhs).max_abs());
    }
    return worst;
}

}  // namespace qoctl
