#pragma once

// Closed-form extremal branches of the heat- and time-minimization problems
// and full protocol synthesis (quench -> incoherent open evolution -> quench).
//
// The diagonal extremal family is parameterized by u = tanh(beta eps / 2).
// Writing az_eq = -u, the stationarity pair reduces to
//   Gibbs/fermionic: (az + u)^2 = c^2 (1 - u^2),   c^2 = -K beta / gamma >= 0
//   bosonic:         (az + u)^2 = m (1 - u^2),     m = (K beta / gamma) az >= 0
// which solve in closed form for u(az); the branch sign picks the direction
// of motion. Durations and heats are line integrals over az.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qoctl/bloch.hpp"
#include "qoctl/dissipators.hpp"
#include "qoctl/dynamics.hpp"
#include "qoctl/errors.hpp"

namespace qoctl {

// ---------------------------------------------------------------------------
// Closed-form branch values

// Coherent Gibbs candidate az(eps): magnitude exceeds 1 for every gap, so the
// caller rejects it as unphysical.
inline double gibbs_coherent_az(double eps, double beta) {
    double x = beta * eps;
    if (x == 0.0)
        throw input_error("gibbs_coherent_az: removable singularity at beta*eps = 0");
    double r = x / std::sinh(x);
    double aeq = -std::tanh(0.5 * x);
    return aeq * (1.0 + r) / (1.0 - r);
}

struct BranchParams {
    double K = 0.0;   // conserved pseudo-Hamiltonian value
    double mu = 0.0;  // K beta / (2 gamma)
    int sign = -1;    // branch selector in the quadratic root
};

struct CoherentBranchResult {
    double az = 0.0;
    double xy_norm_sq = 0.0;  // right side of the off-diagonal constraint
};

// Coherent bosonic candidate: az from the quadratic branch and the implied
// value of ax^2 + ay^2, which is negative on the whole feasible region.
inline CoherentBranchResult bosonic_coherent_branch(double eps, double beta, double K,
                                                    double gamma, int sign) {
    if (eps <= 0.0) throw singular_rate_error("bosonic_coherent_branch: eps must be > 0");
    double x = beta * eps;
    double mu = K * beta / (2.0 * gamma);
    if (mu == 0.0)
        throw branch_undefined_error("bosonic_coherent_branch: mu = 0 has no coherent branch");
    double disc = 1.0 - x * std::sinh(x) / (4.0 * mu * mu);
    if (disc < 0.0)
        throw branch_undefined_error("bosonic_coherent_branch: negative discriminant");
    double c = std::cosh(0.5 * x);
    double aeq = -std::tanh(0.5 * x);
    double az = aeq + mu / (c * c) * (1.0 + sign * std::sqrt(disc));
    double xy = 2.0 * aeq * (2.0 * K / (gamma * eps) - 1.0) * (az - aeq);
    return {az, xy};
}

struct IncoherentBranchValue {
    double az = 0.0;
    bool physical = true;  // false when |az| > 1; returned, never dropped
};

// Incoherent bosonic branch az(eps; K, sign). K = 0 is the quasi-static
// equilibrium limit.
inline double bosonic_incoherent_az_value(double eps, double beta, double K, double gamma,
                                          int sign) {
    if (eps <= 0.0) throw singular_rate_error("bosonic_incoherent_az: eps must be > 0");
    double x = beta * eps;
    double aeq = -std::tanh(0.5 * x);
    if (K == 0.0) return aeq;
    double mu = K * beta / (2.0 * gamma);
    double disc = 1.0 - std::sinh(x) / mu;
    if (disc < 0.0)
        throw branch_undefined_error("bosonic_incoherent_az: negative discriminant");
    double c = std::cosh(0.5 * x);
    return aeq + mu / (c * c) * (1.0 + sign * std::sqrt(disc));
}

inline IncoherentBranchValue bosonic_incoherent_az(double eps, double beta, double K,
                                                   double gamma, int sign) {
    double az = bosonic_incoherent_az_value(eps, beta, K, gamma, sign);
    return {az, std::abs(az) <= 1.0};
}

// Diagonal Gibbs/fermionic extremal at fixed (eps, K): solves the two-equation
// stationarity system for (az, qz). Closed-form seed polished by one Newton
// step on the pair.
struct DiagonalBranchPoint {
    double az = 0.0;
    double qz = 0.0;
};

inline DiagonalBranchPoint gibbs_diagonal_branch(double eps, double beta, double gamma, double K,
                                                 int sign) {
    if (K > 0.0)
        throw branch_undefined_error("gibbs_diagonal_branch: requires K <= 0");
    double u = std::tanh(0.5 * beta * eps);
    double c2 = 1.0 - u * u;
    double delta = sign * std::sqrt(-K * beta / gamma * c2);
    double az = -u + delta;
    double qz = 0.5 * eps + delta / (beta * c2);
    // Newton polish of [delta*(qz-eps/2)+K/g, slope*(qz-eps/2)+delta/2]
    double slope = -0.5 * beta * c2;
    for (int it = 0; it < 2; ++it) {
        double d = az + u;
        double s = qz - 0.5 * eps;
        double f1 = d * s + K / gamma;
        double f2 = slope * s + 0.5 * d;
        // Jacobian [[s, d], [1/2, slope]]
        double det = s * slope - 0.5 * d;
        if (std::abs(det) < 1e-300) break;
        az -= (f1 * slope - f2 * d) / det;
        qz -= (s * f2 - 0.5 * f1) / det;
    }
    return {az, qz};
}

// ---------------------------------------------------------------------------
// Protocols

struct QuenchSegment {
    Vec3 axis{0.0, 1.0, 0.0};
    double angle = 0.0;
};

struct OpenEvolutionSegment {
    double duration = 0.0;
    std::vector<double> times;  // coarse samples for export
    std::vector<double> eps;
    std::function<double(double)> eps_fn;  // exact control
    std::function<double(double)> qz_fn;   // extremal costate along the branch
    double K = 0.0;
    int sign = -1;
};

using ProtocolSegment = std::variant<QuenchSegment, OpenEvolutionSegment>;

struct Protocol {
    Objective objective = Objective::Heat;
    DissipatorModel model;
    std::vector<ProtocolSegment> segments;  // first and last are quenches
    BlochState rho0, rho_tau;
    Mat2 h0_basis = Mat2::identity();
    double predicted_cost = 0.0;
    bool zero_time_branch = false;
    bool nonmarkov_caveat = false;
    std::string note;

    const OpenEvolutionSegment* evolution() const {
        for (const auto& s : segments)
            if (std::holds_alternative<OpenEvolutionSegment>(s))
                return &std::get<OpenEvolutionSegment>(s);
        return nullptr;
    }
    std::optional<CostateBloch> initial_costate() const {
        const auto* evo = evolution();
        if (!evo || !evo->qz_fn) return std::nullopt;
        return CostateBloch{0.0, 0.0, evo->qz_fn(0.0)};
    }
};

namespace detail {

// Rotation carrying `from` onto `to` (equal norms assumed); identity when
// already aligned, y-axis pi flip for the antipodal case.
inline QuenchSegment aligning_quench(const Vec3& from, const Vec3& to) {
    double nf = from.norm(), nt = to.norm();
    if (nf < 1e-14 || nt < 1e-14) return {Vec3{0.0, 1.0, 0.0}, 0.0};
    Vec3 f = from * (1.0 / nf), t = to * (1.0 / nt);
    double cosang = std::max(-1.0, std::min(1.0, f.dot(t)));
    Vec3 axis = f.cross(t);
    double n = axis.norm();
    if (n < 1e-12) {
        if (cosang > 0.0) return {Vec3{0.0, 1.0, 0.0}, 0.0};
        // antipodal: pi about any orthogonal axis; fix y when possible
        Vec3 ortho = std::abs(f.y) < 0.9 ? Vec3{0.0, 1.0, 0.0} : Vec3{1.0, 0.0, 0.0};
        ortho = ortho - f * ortho.dot(f);
        ortho = ortho * (1.0 / ortho.norm());
        return {ortho, M_PI};
    }
    return {axis * (1.0 / n), std::acos(cosang)};
}

// Diagonal extremal family in the u = tanh(beta eps/2) parameterization.
struct DiagonalBranch {
    DissipatorKind kind;
    double beta, gamma;
    double param;  // Gibbs/fermionic: c = sqrt(-K beta/gamma); bosonic: |K| beta/gamma
    int sign;      // +1: az decreasing (cooling), -1: az increasing

    double u_of(double a) const {
        if (kind == DissipatorKind::Bosonic) {
            double m = param * (-a);  // = (K beta/gamma) a, both negative
            return (-a + sign * std::sqrt(m * (1.0 - a * a + m))) / (1.0 + m);
        }
        double c = param;
        return (-a + sign * c * std::sqrt(1.0 + c * c - a * a)) / (1.0 + c * c);
    }
    double eps_of(double a) const { return (2.0 / beta) * std::atanh(u_of(a)); }
    double delta_of(double a) const { return a + u_of(a); }
    double adot(double a) const {
        double u = u_of(a);
        double d = a + u;
        if (kind == DissipatorKind::Bosonic) return -(gamma / u) * d;
        return -gamma * d;
    }
    double K_value(double) const {
        if (kind == DissipatorKind::Bosonic) return -param * gamma / beta;
        return -param * param * gamma / beta;
    }
    double qz_of(double a) const {
        double u = u_of(a);
        double d = a + u;
        double eps = eps_of(a);
        if (kind == DissipatorKind::Bosonic) {
            double K = K_value(a);
            return 0.5 * eps - u * K / (gamma * d);
        }
        return 0.5 * eps + d / (beta * (1.0 - u * u));
    }
};

// Time and heat along the branch from a0 to atau, plus an invertible time
// grid for building eps(t). Composite Simpson on a uniform az grid.
struct BranchPath {
    DiagonalBranch branch;
    std::vector<double> a_nodes, t_nodes;
    double duration = 0.0;
    double heat = 0.0;

    double a_of_t(double t) const {
        if (t <= 0.0) return a_nodes.front();
        if (t >= duration) return a_nodes.back();
        std::size_t lo = 0, hi = t_nodes.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            (t_nodes[mid] <= t ? lo : hi) = mid;
        }
        // cubic Hermite in t with exact nodal slopes da/dt
        double h = t_nodes[hi] - t_nodes[lo];
        if (h <= 0.0) return a_nodes[lo];
        double w = (t - t_nodes[lo]) / h;
        double m0 = branch.adot(a_nodes[lo]) * h;
        double m1 = branch.adot(a_nodes[hi]) * h;
        double w2 = w * w, w3 = w2 * w;
        return (2 * w3 - 3 * w2 + 1) * a_nodes[lo] + (w3 - 2 * w2 + w) * m0 +
               (-2 * w3 + 3 * w2) * a_nodes[hi] + (w3 - w2) * m1;
    }
    double eps_at(double t) const { return branch.eps_of(a_of_t(t)); }
    double qz_at(double t) const { return branch.qz_of(a_of_t(t)); }
};

inline BranchPath trace_branch(const DiagonalBranch& branch, double a0, double atau,
                               int n_intervals = 2000) {
    BranchPath path;
    path.branch = branch;
    path.a_nodes.resize(n_intervals + 1);
    path.t_nodes.resize(n_intervals + 1);
    double h = (atau - a0) / n_intervals;
    double t = 0.0, heat = 0.0;
    path.a_nodes[0] = a0;
    path.t_nodes[0] = 0.0;
    for (int k = 0; k < n_intervals; ++k) {
        double al = a0 + k * h, am = al + 0.5 * h, ar = al + h;
        t += h / 6.0 * (1.0 / branch.adot(al) + 4.0 / branch.adot(am) + 1.0 / branch.adot(ar));
        heat += -0.5 * h / 6.0 *
                (branch.eps_of(al) + 4.0 * branch.eps_of(am) + branch.eps_of(ar));
        path.a_nodes[k + 1] = ar;
        path.t_nodes[k + 1] = t;
    }
    path.duration = t;
    path.heat = heat;
    return path;
}

}  // namespace detail

// Exact minimal duration of the incoherent time-optimal evolution between
// diagonal states (az convention <= 0), in the unbounded-gap limit.
inline double time_optimal_duration(const DissipatorModel& model, double az0, double aztau) {
    double g = model.gamma;
    if (std::abs(az0 - aztau) < 1e-15) return 0.0;
    if (model.kind == DissipatorKind::Bosonic) {
        if (az0 >= aztau) return std::log((az0 + 1.0) / (aztau + 1.0)) / g;
        return 0.0;  // degenerate gap->0 branch
    }
    if (az0 >= aztau) {
        if (aztau <= -1.0)
            throw infeasible_error("time_optimal_duration: pure target needs infinite time");
        return std::log((az0 + 1.0) / (aztau + 1.0)) / g;
    }
    return std::log((az0 - 1.0) / (aztau - 1.0)) / g;
}

// Duration of the same evolution with the gap clamped to +/- eps_max; this is
// what a simulated schedule actually takes to arrive.
inline double clamped_time_duration(const DissipatorModel& model, double az0, double aztau,
                                    double eps_max) {
    double g = model.gamma;
    if (std::abs(az0 - aztau) < 1e-15) return 0.0;
    bool purify = az0 >= aztau;
    double eps = purify ? eps_max : -eps_max;
    double aeq = equilibrium_az(model, eps);
    if (model.kind == DissipatorKind::Bosonic) {
        if (!purify) return 0.0;
        double rate = g / std::tanh(0.5 * model.beta * eps_max);
        return std::log((az0 - aeq) / (aztau - aeq)) / rate;
    }
    return std::log((az0 - aeq) / (aztau - aeq)) / g;
}

// Suboptimal all-coherent comparison branch: pure transverse decay at the bare
// rate, (1/gamma) ln(|a(0)|/|a(tau)|).
inline double coherent_decay_time(double a0_norm, double atau_norm, double gamma) {
    if (!(a0_norm > 0.0) || !(atau_norm > 0.0) || a0_norm > 1.0)
        throw input_error("coherent_decay_time: norms must lie in (0, 1]");
    if (atau_norm > a0_norm)
        throw infeasible_error("coherent_decay_time: pure decay cannot grow the Bloch norm");
    return std::log(a0_norm / atau_norm) / gamma;
}

struct SynthesisOptions {
    double eps_max = 50.0;      // gap clamp used for emitted +/-inf segments
    int branch_intervals = 2000;
    int export_samples = 256;
};

// Minimal-time protocol: quench to the diagonal frame (az <= 0), evolve at the
// clamped extreme gap, quench onto the target.
inline Protocol synthesize_time_protocol(const DissipatorModel& model, const BlochState& rho0,
                                         const BlochState& rho_tau, double beta, double gamma,
                                         const SynthesisOptions& opts = {}) {
    DissipatorModel m = model;
    m.beta = beta;
    m.gamma = gamma;
    m.validate();
    if (!rho0.physical() || !rho_tau.physical())
        throw input_error("synthesize_time_protocol: boundary states must be physical");

    double n0 = rho0.norm(), ntau = rho_tau.norm();
    double az0 = -n0, aztau = -ntau;
    if (ntau >= 1.0 - 1e-12 && n0 < 1.0 - 1e-12)
        throw infeasible_error("synthesize_time_protocol: pure target unreachable in finite time");

    Protocol proto;
    proto.objective = Objective::Time;
    proto.model = m;
    proto.rho0 = rho0;
    proto.rho_tau = rho_tau;

    QuenchSegment pre = detail::aligning_quench(rho0.vec(), {0.0, 0.0, az0});
    QuenchSegment post = detail::aligning_quench({0.0, 0.0, aztau}, rho_tau.vec());

    double tau_exact = time_optimal_duration(m, az0, aztau);
    proto.predicted_cost = tau_exact;

    if (std::abs(az0 - aztau) < 1e-14) {
        proto.segments = {pre, post};
        return proto;
    }
    if (m.kind == DissipatorKind::Bosonic && az0 < aztau) {
        // gap -> 0 limit: rates diverge and the arrival time collapses; flag
        // the Markovian-validity caveat instead of simulating it
        proto.segments = {pre, post};
        proto.zero_time_branch = true;
        proto.nonmarkov_caveat = true;
        proto.note = "degenerate gap->0 branch: zero-time limit outside Lindblad validity";
        return proto;
    }

    bool purify = az0 >= aztau;
    double eps = purify ? opts.eps_max : -opts.eps_max;
    double duration = clamped_time_duration(m, az0, aztau, opts.eps_max);

    OpenEvolutionSegment evo;
    evo.duration = duration;
    evo.eps_fn = [eps](double) { return eps; };
    double aeq = equilibrium_az(m, eps);
    double qz0 = m.kind == DissipatorKind::Bosonic ? -aeq / (gamma * (az0 - aeq))
                                                   : 1.0 / (gamma * (az0 - aeq));
    double rate = m.kind == DissipatorKind::Bosonic
                      ? gamma / std::tanh(0.5 * beta * opts.eps_max)
                      : gamma;
    // costate solves qdot = rate * q once the source is dropped
    evo.qz_fn = [qz0, rate](double t) { return qz0 * std::exp(rate * t); };
    evo.K = 0.0;
    evo.sign = purify ? +1 : -1;
    evo.times.resize(opts.export_samples + 1);
    evo.eps.assign(opts.export_samples + 1, eps);
    for (int k = 0; k <= opts.export_samples; ++k)
        evo.times[k] = duration * k / double(opts.export_samples);

    proto.segments = {pre, evo, post};
    return proto;
}

// Minimal-heat protocol: quench to the diagonal frame, follow the incoherent
// extremal branch with the conserved value fitted so the evolution lasts tau,
// quench onto the target. Quenches carry no heat.
inline Protocol synthesize_heat_protocol(const DissipatorModel& model, const BlochState& rho0,
                                         const BlochState& rho_tau, const Mat2& h0_basis,
                                         double tau, double beta, double gamma,
                                         const SynthesisOptions& opts = {}) {
    DissipatorModel m = model;
    m.beta = beta;
    m.gamma = gamma;
    m.validate();
    if (!(tau > 0.0)) throw input_error("synthesize_heat_protocol: tau must be > 0");
    if (!rho0.physical() || !rho_tau.physical())
        throw input_error("synthesize_heat_protocol: boundary states must be physical");

    double az0 = -rho0.norm(), aztau = -rho_tau.norm();

    Protocol proto;
    proto.objective = Objective::Heat;
    proto.model = m;
    proto.rho0 = rho0;
    proto.rho_tau = rho_tau;
    proto.h0_basis = h0_basis;

    QuenchSegment pre = detail::aligning_quench(rho0.vec(), {0.0, 0.0, az0});
    QuenchSegment post = detail::aligning_quench({0.0, 0.0, aztau}, rho_tau.vec());

    if (std::abs(az0 - aztau) < 1e-14) {
        // hold at equilibrium: zero heat at any duration
        OpenEvolutionSegment evo;
        evo.duration = tau;
        double eps_eq = az0 > -1.0 ? -(2.0 / beta) * std::atanh(az0) : opts.eps_max;
        if (m.kind == DissipatorKind::Bosonic && eps_eq <= 0.0)
            throw infeasible_error("synthesize_heat_protocol: bosonic hold needs az < 0");
        evo.eps_fn = [eps_eq](double) { return eps_eq; };
        evo.qz_fn = [eps_eq](double) { return 0.5 * eps_eq; };
        evo.K = 0.0;
        evo.times.resize(opts.export_samples + 1);
        evo.eps.assign(opts.export_samples + 1, eps_eq);
        for (int k = 0; k <= opts.export_samples; ++k)
            evo.times[k] = tau * k / double(opts.export_samples);
        proto.segments = {pre, evo, post};
        proto.predicted_cost = 0.0;
        return proto;
    }

    double tau_min = time_optimal_duration(m, az0, aztau);
    if (tau <= tau_min)
        throw infeasible_error("synthesize_heat_protocol: requested duration " +
                                   std::to_string(tau) + " below the minimal time " +
                                   std::to_string(tau_min),
                               tau_min);

    int sign = aztau < az0 ? +1 : -1;
    auto duration_for = [&](double param) {
        detail::DiagonalBranch br{m.kind, beta, gamma, param, sign};
        return detail::trace_branch(br, az0, aztau, opts.branch_intervals).duration;
    };

    // Bracket the branch parameter: duration decreases as the parameter grows.
    double lo, hi;
    if (m.kind == DissipatorKind::Bosonic && sign == -1) {
        // heating branch exists only while |K| beta/gamma < |az| along the path
        hi = 0.999999 * std::min(std::abs(az0), std::abs(aztau));
        lo = 1e-12;
        if (duration_for(hi) > tau)
            throw infeasible_error(
                "synthesize_heat_protocol: duration below the regular-branch minimum for the "
                "bosonic heating direction",
                duration_for(hi));
    } else {
        lo = 1e-8;
        hi = 1.0;
        int guard = 0;
        while (duration_for(hi) > tau && guard++ < 200) hi *= 2.0;
        if (guard >= 200)
            throw infeasible_error("synthesize_heat_protocol: could not bracket the branch");
    }
    int guard = 0;
    while (duration_for(lo) < tau && guard++ < 200) lo *= 0.5;
    for (int it = 0; it < 200; ++it) {
        double mid = std::sqrt(lo * hi);
        (duration_for(mid) > tau ? lo : hi) = mid;
    }
    double param = std::sqrt(lo * hi);

    detail::DiagonalBranch branch{m.kind, beta, gamma, param, sign};
    detail::BranchPath path = detail::trace_branch(branch, az0, aztau, opts.branch_intervals);

    OpenEvolutionSegment evo;
    evo.duration = tau;
    evo.eps_fn = [path](double t) { return path.eps_at(t); };
    evo.qz_fn = [path](double t) { return path.qz_at(t); };
    evo.K = branch.K_value(az0);
    evo.sign = sign;
    evo.times.resize(opts.export_samples + 1);
    evo.eps.resize(opts.export_samples + 1);
    for (int k = 0; k <= opts.export_samples; ++k) {
        evo.times[k] = tau * k / double(opts.export_samples);
        evo.eps[k] = path.eps_at(evo.times[k]);
    }
    proto.segments = {pre, evo, post};
    proto.predicted_cost = path.heat;
    double eps_peak = std::max(std::abs(path.eps_at(0.0)), std::abs(path.eps_at(tau)));
    if (eps_peak > opts.eps_max)
        proto.note = "branch gap exceeds eps_max; emitted schedule is not clamped";
    return proto;
}

// Realize a protocol as an integrable control schedule with the quenches on
// the grid ends.
inline ControlSchedule protocol_to_schedule(const Protocol& proto, double dt) {
    const OpenEvolutionSegment* evo = proto.evolution();
    double tau = evo ? evo->duration : 0.0;
    ControlSchedule sched;
    sched.t0 = 0.0;
    sched.t1 = tau;
    sched.n_steps = tau > 0.0 ? std::max(1, int(std::lround(tau / dt))) : 0;
    // quenches before the evolution land on t=0, after it on t=tau
    bool seen_evolution = false;
    for (const auto& seg : proto.segments) {
        if (std::holds_alternative<OpenEvolutionSegment>(seg)) {
            seen_evolution = true;
            continue;
        }
        const auto& q = std::get<QuenchSegment>(seg);
        if (std::abs(q.angle) > 0.0)
            sched.quenches.push_back({seen_evolution ? tau : 0.0, q.axis, q.angle});
    }
    if (evo && evo->eps_fn) {
        sched.eps_fn = evo->eps_fn;
    } else {
        sched.eps_fn = [](double) { return 0.0; };
    }
    sched.materialize_samples();
    return sched;
}

}  // namespace qoctl
