#pragma once

// Rotating-frame equations of motion for the state and costate Bloch vectors,
// a fixed-step RK4 integrator with instantaneous unitary quenches, and the
// heat / time cost functionals.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qoctl/bloch.hpp"
#include "qoctl/dissipators.hpp"
#include "qoctl/errors.hpp"
#include "qoctl/rotating_frame.hpp"

namespace qoctl {

enum class Objective { Heat, Time };

inline const char* objective_name(Objective o) {
    return o == Objective::Heat ? "heat" : "time";
}

// Instantaneous unitary applied to state and costate at a grid time.
struct Quench {
    double time = 0.0;
    Vec3 axis{0.0, 1.0, 0.0};
    double angle = 0.0;
};

// Piecewise description of the controls eps(t) and Lambda(t) on a uniform
// grid, plus quench events. When the exact functional forms are known the
// optional callables override the sampled values (sampling is kept for
// export).
struct ControlSchedule {
    double t0 = 0.0;
    double t1 = 0.0;
    int n_steps = 0;
    std::vector<double> eps;                    // n_steps + 1 samples
    std::vector<LambdaCoefficients> lambda;     // empty means identically zero
    std::vector<Quench> quenches;               // times on grid points
    std::function<double(double)> eps_fn;
    std::function<LambdaCoefficients(double)> lambda_fn;

    double dt() const { return n_steps > 0 ? (t1 - t0) / n_steps : 0.0; }

    double eps_at(double t) const {
        if (eps_fn) return eps_fn(t);
        return interp_scalar(eps, t);
    }
    LambdaCoefficients lambda_at(double t) const {
        if (lambda_fn) return lambda_fn(t);
        if (lambda.empty()) return {};
        if (t <= t0) return lambda.front();
        if (t >= t1) return lambda.back();
        double h = dt();
        auto k = static_cast<std::size_t>((t - t0) / h);
        if (k + 1 >= lambda.size()) k = lambda.size() - 2;
        double w = (t - (t0 + k * h)) / h;
        return lambda[k] * (1.0 - w) + lambda[k + 1] * w;
    }

    void validate() const {
        if (n_steps < 0) throw input_error("ControlSchedule: negative step count");
        if (n_steps > 0 && !(t1 > t0)) throw input_error("ControlSchedule: t1 must exceed t0");
        if (!eps_fn && eps.size() != static_cast<std::size_t>(n_steps) + 1)
            throw input_error("ControlSchedule: eps must have n_steps+1 samples");
        if (!lambda_fn && !lambda.empty() &&
            lambda.size() != static_cast<std::size_t>(n_steps) + 1)
            throw input_error("ControlSchedule: lambda must have n_steps+1 samples");
        for (double e : eps)
            if (!std::isfinite(e)) throw input_error("ControlSchedule: eps sample not finite");
        double h = dt();
        for (const auto& q : quenches) {
            if (q.time < t0 - 1e-12 || q.time > t1 + 1e-12)
                throw input_error("ControlSchedule: quench outside schedule window");
            if (h > 0.0) {
                double frac = (q.time - t0) / h;
                if (std::abs(frac - std::round(frac)) > 1e-9)
                    throw input_error("ControlSchedule: quench time not on the grid");
            }
        }
    }

    // Fill the sampled arrays from the callables (for export).
    void materialize_samples() {
        if (!eps_fn && !lambda_fn) return;
        eps.resize(n_steps + 1);
        lambda.resize(n_steps + 1);
        for (int k = 0; k <= n_steps; ++k) {
            double t = t0 + k * dt();
            if (eps_fn) eps[k] = eps_fn(t);
            if (lambda_fn) lambda[k] = lambda_fn(t);
        }
    }

private:
    double interp_scalar(const std::vector<double>& v, double t) const {
        if (v.empty()) throw input_error("ControlSchedule: no eps samples");
        if (v.size() == 1 || t <= t0) return v.front();
        if (t >= t1) return v.back();
        double h = dt();
        auto k = static_cast<std::size_t>((t - t0) / h);
        if (k + 1 >= v.size()) k = v.size() - 2;
        double w = (t - (t0 + k * h)) / h;
        return v[k] * (1.0 - w) + v[k + 1] * w;
    }
};

// d(a)/dt in the rotating frame: dissipator + precession about z at rate eps
// + precession about the Lambda axis.
inline Vec3 rhs_state(const DissipatorModel& model, const Vec3& a, double eps,
                      const LambdaCoefficients& lam) {
    Vec3 diss = apply_dissipator(model, BlochState::from_vec(a), eps);
    Vec3 zhat{0.0, 0.0, 1.0};
    Vec3 ell = lam.bloch_axis();
    return diss + eps * zhat.cross(a) + 2.0 * a.cross(ell);
}

// d(q)/dt: the costate precesses like the state but sees the sign-flipped
// dissipator, and for the heat objective an eps/2 source on the z component.
inline Vec3 rhs_costate(const DissipatorModel& model, const Vec3& q, double eps,
                        const LambdaCoefficients& lam, Objective objective) {
    detail::check_rate_domain(model, eps);
    double g = model.gamma;
    double aeq = equilibrium_az(model, eps);
    double src = objective == Objective::Heat ? 0.5 * eps : 0.0;
    Vec3 diss;
    switch (model.kind) {
        case DissipatorKind::GibbsMixing:
            diss = {g * q.x, g * q.y, g * (q.z - src)};
            break;
        case DissipatorKind::Bosonic:
            diss = {-0.5 * g * q.x / aeq, -0.5 * g * q.y / aeq, -g * (q.z - src) / aeq};
            break;
        case DissipatorKind::Fermionic:
            diss = {0.5 * g * q.x, 0.5 * g * q.y, g * (q.z - src)};
            break;
    }
    Vec3 zhat{0.0, 0.0, 1.0};
    Vec3 ell = lam.bloch_axis();
    return diss + eps * zhat.cross(q) + 2.0 * q.cross(ell);
}

// Heat flux into the bath, -<D D_D[rho~]>; positive when the system releases
// heat. Reduces to (gamma eps / 2)(az - az_eq) for the Gibbs channel.
inline double heat_flux(const DissipatorModel& model, const BlochState& a, double eps) {
    Vec3 diss = apply_dissipator(model, a, eps);
    return -0.5 * eps * diss.z;
}

// Control-theoretic pseudo-Hamiltonian in Bloch form. Constant along
// extremals; zero on-shell for the time objective.
inline double pseudo_hamiltonian(const DissipatorModel& model, const BlochState& a,
                                 const CostateBloch& q, double eps,
                                 const LambdaCoefficients& lam, Objective objective) {
    Vec3 av = a.vec(), qv = q.vec();
    Vec3 zhat{0.0, 0.0, 1.0};
    Vec3 gen_rate = apply_dissipator(model, a, eps) + eps * zhat.cross(av);
    double costate_term = qv.dot(gen_rate);
    double lambda_term = -2.0 * lam.bloch_axis().dot(av.cross(qv));
    if (objective == Objective::Time) return 1.0 + costate_term + lambda_term;
    return costate_term - 0.5 * eps * gen_rate.z + lambda_term;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<BlochState> a;
    std::vector<CostateBloch> q;  // empty when no costate was propagated
    std::vector<double> eps;
    std::vector<LambdaCoefficients> lambda;
    std::vector<double> heat;     // accumulated, heat[0] = 0
    DissipatorModel model;
    Objective objective = Objective::Heat;

    bool has_costate() const { return !q.empty(); }
    const BlochState& final_state() const { return a.back(); }
    double total_heat() const { return heat.back(); }
};

// Classical fixed-step RK4 on the schedule grid. Quenches rotate both Bloch
// vectors exactly at their grid times and carry no heat. Throws
// integration_error if the state leaves the Bloch ball beyond 1e-6.
inline Trajectory integrate(const ControlSchedule& schedule, const BlochState& a0,
                            const std::optional<CostateBloch>& q0, const DissipatorModel& model,
                            Objective objective) {
    schedule.validate();
    model.validate();
    if (!a0.physical()) throw input_error("integrate: initial state outside Bloch ball");

    const bool with_q = q0.has_value();
    Trajectory traj;
    traj.model = model;
    traj.objective = objective;
    int n = schedule.n_steps;
    traj.times.reserve(n + 1);
    traj.a.reserve(n + 1);
    traj.heat.reserve(n + 1);

    Vec3 a = a0.vec();
    Vec3 q = with_q ? q0->vec() : Vec3{};
    double heat = 0.0;
    double h = schedule.dt();

    std::vector<Quench> pending = schedule.quenches;
    std::stable_sort(pending.begin(), pending.end(),
                     [](const Quench& l, const Quench& r) { return l.time < r.time; });
    std::size_t next_quench = 0;
    double quench_tol = h > 0.0 ? 0.5 * h : 1e-12;
    // Quench times sit on grid nodes, so visiting nodes in order consumes
    // them exactly at their node.
    auto apply_quenches_at = [&](double t) {
        while (next_quench < pending.size() && pending[next_quench].time <= t + quench_tol) {
            const Quench& qu = pending[next_quench];
            a = rotate_vec(a, qu.axis, qu.angle);
            if (with_q) q = rotate_vec(q, qu.axis, qu.angle);
            ++next_quench;
        }
    };

    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.a.push_back(BlochState::from_vec(a));
        if (with_q) traj.q.push_back(CostateBloch::from_vec(q));
        traj.eps.push_back(schedule.eps_at(t));
        traj.lambda.push_back(schedule.lambda_at(t));
        traj.heat.push_back(heat);
    };

    struct Deriv {
        Vec3 da, dq;
        double dheat;
    };
    auto deriv = [&](double t, const Vec3& av, const Vec3& qv) -> Deriv {
        double eps = schedule.eps_at(t);
        LambdaCoefficients lam = schedule.lambda_at(t);
        Deriv d;
        d.da = rhs_state(model, av, eps, lam);
        d.dq = with_q ? rhs_costate(model, qv, eps, lam, objective) : Vec3{};
        d.dheat = heat_flux(model, BlochState::from_vec(av), eps);
        return d;
    };

    // Endpoint stages sample the controls a hair inside the step so that
    // control discontinuities sitting exactly on grid nodes resolve to the
    // step they govern; immaterial for smooth schedules.
    const double edge = 1e-9 * h;

    apply_quenches_at(schedule.t0);
    record(schedule.t0);
    for (int k = 0; k < n; ++k) {
        double t = schedule.t0 + k * h;
        Deriv k1 = deriv(t + edge, a, q);
        Deriv k2 = deriv(t + 0.5 * h, a + 0.5 * h * k1.da, q + 0.5 * h * k1.dq);
        Deriv k3 = deriv(t + 0.5 * h, a + 0.5 * h * k2.da, q + 0.5 * h * k2.dq);
        Deriv k4 = deriv(t + h - edge, a + h * k3.da, q + h * k3.dq);
        a += (h / 6.0) * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da);
        q += (h / 6.0) * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
        heat += (h / 6.0) * (k1.dheat + 2.0 * k2.dheat + 2.0 * k3.dheat + k4.dheat);
        if (a.norm() > 1.0 + 1e-6)
            throw integration_error("integrate: state left the Bloch ball at t=" +
                                    std::to_string(t + h));
        double tk = schedule.t0 + (k + 1) * h;
        if (k + 1 == n) tk = schedule.t1;
        apply_quenches_at(tk);
        record(tk);
    }
    return traj;
}

inline Trajectory integrate(const ControlSchedule& schedule, const BlochState& a0,
                            const DissipatorModel& model,
                            Objective objective = Objective::Heat) {
    return integrate(schedule, a0, std::nullopt, model, objective);
}

}  // namespace qoctl
