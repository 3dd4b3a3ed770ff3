#pragma once

// Algebraic optimality conditions of the Pontryagin minimum principle for the
// heat and time objectives, evaluated as residuals on (a~, q~, eps, K).
// Each condition is a signed sum of terms; the relative residual divides by
// the largest term so pass/fail thresholds stay scale-free.

#include <cmath>
#include <string>
#include <vector>

#include "qoctl/bloch.hpp"
#include "qoctl/dissipators.hpp"
#include "qoctl/dynamics.hpp"
#include "qoctl/errors.hpp"

namespace qoctl {

struct ConditionResidual {
    std::string name;
    double signed_value = 0.0;  // sum of terms, sign kept for linearity tests
    double raw = 0.0;           // |signed_value|
    double relative = 0.0;      // raw / max |term|
    bool pass = false;
};

struct PmpReport {
    Objective objective = Objective::Heat;
    DissipatorModel model;
    double K = 0.0;
    double tol_rel = 1e-6;
    std::vector<ConditionResidual> conditions;

    bool all_pass() const {
        for (const auto& c : conditions)
            if (!c.pass) return false;
        return true;
    }
    const ConditionResidual& operator[](const std::string& name) const {
        for (const auto& c : conditions)
            if (c.name == name) return c;
        throw input_error("PmpReport: no condition named " + name);
    }
};

namespace detail {

inline ConditionResidual make_condition(std::string name, const std::vector<double>& terms,
                                        double tol_rel) {
    ConditionResidual c;
    c.name = std::move(name);
    double scale = 0.0;
    for (double t : terms) {
        c.signed_value += t;
        scale = std::max(scale, std::abs(t));
    }
    c.raw = std::abs(c.signed_value);
    c.relative = scale > 0.0 ? c.raw / scale : 0.0;
    // Single-term conditions have relative == 1 whenever they are not exactly
    // zero, so a tiny raw value also counts as satisfied.
    c.pass = c.relative <= tol_rel || c.raw <= tol_rel;
    return c;
}

inline ConditionResidual collinearity_condition(const Vec3& a, const Vec3& q, double tol_rel) {
    ConditionResidual c;
    c.name = "collinearity";
    Vec3 cr = a.cross(q);
    c.raw = cr.norm();
    c.signed_value = c.raw;
    double scale = std::max({std::abs(a.x * q.y), std::abs(a.y * q.x), std::abs(a.y * q.z),
                             std::abs(a.z * q.y), std::abs(a.z * q.x), std::abs(a.x * q.z)});
    c.relative = scale > 0.0 ? c.raw / scale : 0.0;
    c.pass = c.relative <= tol_rel || c.raw <= tol_rel;
    return c;
}

}  // namespace detail

// Residuals of the five heat-minimization conditions. `K` is the conserved
// pseudo-Hamiltonian value the point is tested against.
inline PmpReport heat_residuals(const DissipatorModel& model, const BlochState& a,
                                const CostateBloch& q, double eps, double K,
                                double tol_rel = 1e-6) {
    model.validate();
    PmpReport rep;
    rep.objective = Objective::Heat;
    rep.model = model;
    rep.K = K;
    rep.tol_rel = tol_rel;

    double g = model.gamma;
    double aeq = equilibrium_az(model, eps);
    double slope = equilibrium_az_slope(model, eps);
    double xy = a.ax * q.qx + a.ay * q.qy;
    double dz = a.az - aeq;
    double qsrc = q.qz - 0.5 * eps;
    using detail::make_condition;

    switch (model.kind) {
        case DissipatorKind::GibbsMixing:
            rep.conditions.push_back(
                make_condition("stationarity_k", {xy, dz * qsrc, K / g}, tol_rel));
            rep.conditions.push_back(
                make_condition("gap_stationarity", {slope * qsrc, 0.5 * dz}, tol_rel));
            break;
        case DissipatorKind::Bosonic:
            rep.conditions.push_back(make_condition(
                "stationarity_k", {xy, 2.0 * dz * qsrc, -2.0 * aeq * K / g}, tol_rel));
            rep.conditions.push_back(make_condition(
                "gap_stationarity", {xy * slope, 2.0 * a.az * qsrc * slope, aeq * dz}, tol_rel));
            break;
        case DissipatorKind::Fermionic:
            rep.conditions.push_back(
                make_condition("stationarity_k", {0.5 * xy, dz * qsrc, K / g}, tol_rel));
            rep.conditions.push_back(
                make_condition("gap_stationarity", {slope * qsrc, 0.5 * dz}, tol_rel));
            break;
    }
    rep.conditions.push_back(detail::collinearity_condition(a.vec(), q.vec(), tol_rel));
    if (model.kind == DissipatorKind::Bosonic) {
        rep.conditions.push_back(
            detail::make_condition("transverse_x", {a.ax * qsrc, -aeq * q.qx}, tol_rel));
        rep.conditions.push_back(
            detail::make_condition("transverse_y", {a.ay * qsrc, -aeq * q.qy}, tol_rel));
    } else {
        rep.conditions.push_back(
            detail::make_condition("transverse_x", {aeq * q.qx, 0.5 * eps * a.ax}, tol_rel));
        rep.conditions.push_back(
            detail::make_condition("transverse_y", {aeq * q.qy, 0.5 * eps * a.ay}, tol_rel));
    }
    return rep;
}

// Residuals of the five time-minimization conditions; the conserved value is
// pinned to zero.
inline PmpReport time_residuals(const DissipatorModel& model, const BlochState& a,
                                const CostateBloch& q, double eps, double tol_rel = 1e-6) {
    model.validate();
    PmpReport rep;
    rep.objective = Objective::Time;
    rep.model = model;
    rep.K = 0.0;
    rep.tol_rel = tol_rel;

    double g = model.gamma;
    double aeq = equilibrium_az(model, eps);
    double slope = equilibrium_az_slope(model, eps);
    double xy = a.ax * q.qx + a.ay * q.qy;
    double dz = a.az - aeq;
    using detail::make_condition;

    switch (model.kind) {
        case DissipatorKind::GibbsMixing:
            rep.conditions.push_back(
                make_condition("costate_normalization", {xy, dz * q.qz, -1.0 / g}, tol_rel));
            rep.conditions.push_back(make_condition("gap_stationarity", {slope * q.qz}, tol_rel));
            break;
        case DissipatorKind::Bosonic:
            rep.conditions.push_back(make_condition(
                "costate_normalization",
                {xy, 2.0 * a.az * q.qz, (2.0 * aeq / g) * (1.0 - g * q.qz)}, tol_rel));
            rep.conditions.push_back(make_condition(
                "gap_stationarity", {(xy + 2.0 * a.az * q.qz) * slope}, tol_rel));
            break;
        case DissipatorKind::Fermionic:
            rep.conditions.push_back(make_condition(
                "costate_normalization", {0.5 * xy, dz * q.qz, -1.0 / g}, tol_rel));
            rep.conditions.push_back(make_condition("gap_stationarity", {slope * q.qz}, tol_rel));
            break;
    }
    rep.conditions.push_back(detail::collinearity_condition(a.vec(), q.vec(), tol_rel));
    switch (model.kind) {
        case DissipatorKind::GibbsMixing:
            rep.conditions.push_back(make_condition("transverse_x", {aeq * q.qx}, tol_rel));
            rep.conditions.push_back(make_condition("transverse_y", {aeq * q.qy}, tol_rel));
            break;
        case DissipatorKind::Bosonic:
            rep.conditions.push_back(make_condition("transverse_x", {dz * q.qx}, tol_rel));
            rep.conditions.push_back(make_condition("transverse_y", {dz * q.qy}, tol_rel));
            break;
        case DissipatorKind::Fermionic:
            rep.conditions.push_back(
                make_condition("transverse_x", {dz * q.qx, -0.5 * eps * a.ax}, tol_rel));
            rep.conditions.push_back(
                make_condition("transverse_y", {dz * q.qy, -0.5 * eps * a.ay}, tol_rel));
            break;
    }
    return rep;
}

// The two matrix-algebraic conditions: |a~ x q~| for [pi~, rho~] = 0, and the
// max-abs residual of [pi~, L[rho~]] + [rho~, L^dag[pi~]] = [rho~, L^dag[D]]
// (right side zero for the time objective).
inline std::pair<double, double> commutator_conditions(const DissipatorModel& model,
                                                       const BlochState& a,
                                                       const CostateBloch& q, double eps,
                                                       Objective objective) {
    double res18 = a.vec().cross(q.vec()).norm();

    Mat2 rho = to_density(a);
    Mat2 pi = to_costate_matrix(q);
    Mat2 d = diagonal_hamiltonian(eps);
    complexd i1(0.0, 1.0);
    auto liouville = [&](const Mat2& x) {
        return -i1 * commutator(d, x) + dissipator_matrix(model, x, eps);
    };
    auto liouville_adj = [&](const Mat2& x) {
        return i1 * commutator(d, x) + dissipator_adjoint_matrix(model, x, eps);
    };
    Mat2 lhs = commutator(pi, liouville(rho)) + commutator(rho, liouville_adj(pi));
    Mat2 rhs = objective == Objective::Heat ? commutator(rho, liouville_adj(d)) : Mat2::zero();
    return {res18, (lhs - rhs).max_abs()};
}

// Left side of the combined fermionic coherent condition,
// -(x/2) tanh(x/2) / cosh^2(x/2) with x = beta*eps, which would have to equal
// (az - az_eq)^2 >= 0 for a coherent extremal to exist.
inline double fermionic_coherent_rhs(double beta_eps) {
    double half = 0.5 * beta_eps;
    double c = std::cosh(half);
    return -half * std::tanh(half) / (c * c);
}

// Scan a beta*eps grid for points admitting a real coherent fermionic
// extremal; the admissible set is empty away from beta*eps = 0.
inline std::vector<double> fermionic_coherent_feasible_points(double lo, double hi, int n) {
    std::vector<double> feasible;
    for (int k = 0; k < n; ++k) {
        double x = lo + (hi - lo) * k / double(n - 1);
        if (fermionic_coherent_rhs(x) >= 0.0) feasible.push_back(x);
    }
    return feasible;
}

struct PseudoHamiltonianValue {
    double K = 0.0;             // mean over samples
    double max_deviation = 0.0;
    double stdev = 0.0;
    std::vector<double> samples;
};

// Evaluate the pseudo-Hamiltonian along a trajectory carrying costate
// samples; on an extremal it is constant (and zero for the time objective).
inline PseudoHamiltonianValue conserved_K(const Trajectory& traj, Objective objective) {
    if (!traj.has_costate())
        throw input_error("conserved_K: trajectory carries no costate samples");
    PseudoHamiltonianValue out;
    std::size_t n = traj.times.size();
    out.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        LambdaCoefficients lam = traj.lambda.empty() ? LambdaCoefficients{} : traj.lambda[k];
        out.samples[k] =
            pseudo_hamiltonian(traj.model, traj.a[k], traj.q[k], traj.eps[k], lam, objective);
    }
    double sum = 0.0;
    for (double v : out.samples) sum += v;
    out.K = sum / double(n);
    double var = 0.0;
    for (double v : out.samples) {
        out.max_deviation = std::max(out.max_deviation, std::abs(v - out.K));
        var += (v - out.K) * (v - out.K);
    }
    out.stdev = std::sqrt(var / double(n));
    return out;
}

// Heuristic probe of PMP condition (ii): nudge each control by +/-delta and
// report the most negative change of the pseudo-Hamiltonian. Along the
// Lambda directions the pseudo-Hamiltonian is linear, so any first-order
// decrease flags a non-extremal point.
struct MinimalityProbe {
    double min_delta_h = 0.0;
    bool is_minimal = true;
};

inline MinimalityProbe control_minimality_probe(const DissipatorModel& model,
                                                const BlochState& a, const CostateBloch& q,
                                                double eps, const LambdaCoefficients& lam,
                                                Objective objective, double delta = 1e-4,
                                                double slack = 1e-9) {
    double base = pseudo_hamiltonian(model, a, q, eps, lam, objective);
    MinimalityProbe probe;
    auto consider = [&](double value) {
        probe.min_delta_h = std::min(probe.min_delta_h, value - base);
    };
    for (double s : {-delta, delta}) {
        double e = eps + s;
        if (model.kind == DissipatorKind::Bosonic && e <= 0.0) continue;
        consider(pseudo_hamiltonian(model, a, q, e, lam, objective));
        LambdaCoefficients l = lam;
        l.l1 = lam.l1 + s;
        consider(pseudo_hamiltonian(model, a, q, eps, l, objective));
        l = lam;
        l.l2 = lam.l2 + s;
        consider(pseudo_hamiltonian(model, a, q, eps, l, objective));
        l = lam;
        l.l3 = lam.l3 + s;
        consider(pseudo_hamiltonian(model, a, q, eps, l, objective));
    }
    double scale = std::max(1.0, std::abs(base));
    probe.is_minimal = probe.min_delta_h >= -slack * scale - 1e-12;
    return probe;
}

}  // namespace qoctl
