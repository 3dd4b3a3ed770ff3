#pragma once

// Brute-force certification oracle: derivative-free multistart pattern search
// over piecewise-constant controls, optimized directly against the simulated
// heat or arrival time. Fully deterministic for a fixed seed; restarts are
// independent and may run on separate threads.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "qoctl/analytic.hpp"
#include "qoctl/bloch.hpp"
#include "qoctl/dissipators.hpp"
#include "qoctl/dynamics.hpp"
#include "qoctl/errors.hpp"

namespace qoctl {

// splitmix64; used to derive independent per-restart RNG streams
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct Rng {
    uint64_t state;
    explicit Rng(uint64_t s) : state(s ? s : 0x853c49e6748fea9bULL) {}
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return (next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

// Flattened control parameterization: per segment (eps, l1, l2, l3), plus an
// optional terminal quench (axis angle in the x-y plane, rotation angle).
struct ParamVector {
    int n_segments = 1;
    bool terminal_quench = false;
    std::vector<double> values;

    static constexpr int kPerSegment = 4;
    int size() const { return n_segments * kPerSegment + (terminal_quench ? 2 : 0); }
    double eps(int seg) const { return values[seg * kPerSegment]; }
    double lam(int seg, int i) const { return values[seg * kPerSegment + i]; }  // i in 1..3
    double quench_axis_angle() const { return values[n_segments * kPerSegment]; }
    double quench_angle() const { return values[n_segments * kPerSegment + 1]; }
};

struct Problem {
    DissipatorModel model;
    Objective objective = Objective::Heat;
    BlochState a0;
    BlochState a_target;
    double horizon = 1.0;
    double dt = 1e-3;
    double target_tol = 1e-3;     // Bloch distance accepted as a hit
    double eps_lo = -50.0;
    double eps_hi = 50.0;
    double lambda_bound = 10.0;   // |l_i| bound
    bool terminal_quench = true;

    void validate() const {
        model.validate();
        if (!(horizon >= 0.0)) throw input_error("Problem: horizon must be >= 0");
        if (!(dt > 0.0)) throw input_error("Problem: dt must be > 0");
        if (model.kind == DissipatorKind::Bosonic && eps_lo <= 0.0)
            throw input_error("Problem: bosonic model needs eps_lo > 0");
    }
};

struct EvalResult {
    double cost = 0.0;         // heat released, or arrival time (horizon if missed)
    double target_miss = 0.0;  // Bloch distance to the target
};

namespace detail {

inline Vec3 apply_terminal_quench(const ParamVector& p, const Vec3& v) {
    if (!p.terminal_quench) return v;
    double phi = p.quench_axis_angle();
    Vec3 axis{std::cos(phi), std::sin(phi), 0.0};
    return rotate_vec(v, axis, p.quench_angle());
}

}  // namespace detail

// Build the piecewise-constant schedule encoded by `params`, integrate it, and
// score it against the problem. Deterministic for fixed inputs.
inline EvalResult evaluate(const ParamVector& params, const Problem& problem) {
    problem.validate();
    const int nseg = params.n_segments;
    double tau = problem.horizon;

    ControlSchedule sched;
    sched.t0 = 0.0;
    sched.t1 = tau;
    int steps_per_seg = std::max(1, int(std::ceil(tau / problem.dt / nseg)));
    sched.n_steps = tau > 0.0 ? steps_per_seg * nseg : 0;
    double seg_len = tau > 0.0 ? tau / nseg : 1.0;
    ParamVector p = params;  // copied into the closures
    sched.eps_fn = [p, seg_len, nseg](double t) {
        int seg = std::min(nseg - 1, std::max(0, int(t / seg_len)));
        return p.eps(seg);
    };
    sched.lambda_fn = [p, seg_len, nseg](double t) {
        int seg = std::min(nseg - 1, std::max(0, int(t / seg_len)));
        return LambdaCoefficients{0.0, p.lam(seg, 1), p.lam(seg, 2), p.lam(seg, 3)};
    };
    sched.materialize_samples();

    Trajectory traj = integrate(sched, problem.a0, problem.model, problem.objective);

    Vec3 target = problem.a_target.vec();
    if (problem.objective == Objective::Heat) {
        Vec3 final_v = detail::apply_terminal_quench(params, traj.a.back().vec());
        return {traj.total_heat(), (final_v - target).norm()};
    }

    // Time objective: first grid time whose quenched state is within
    // tolerance, refined by linear interpolation of the miss.
    double best_miss = 1e300;
    double prev_miss = 1e300;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        double miss = (detail::apply_terminal_quench(params, traj.a[k].vec()) - target).norm();
        if (miss < best_miss) best_miss = miss;
        if (miss <= problem.target_tol) {
            double t = traj.times[k];
            if (k > 0 && prev_miss > problem.target_tol) {
                double w = (prev_miss - problem.target_tol) / (prev_miss - miss);
                t = traj.times[k - 1] + w * (traj.times[k] - traj.times[k - 1]);
            }
            return {t, miss};
        }
        prev_miss = miss;
    }
    return {tau, best_miss};
}

struct MultistartConfig {
    int n_segments = 16;
    int restarts = 200;
    int iterations = 60;     // pattern-search sweeps per penalty epoch
    int penalty_epochs = 3;  // weight grows x10 each epoch
    double penalty_weight0 = 100.0;
    uint64_t seed = 0;
    int threads = 0;  // 0: hardware concurrency
};

struct OptimizationResult {
    ParamVector best;
    double best_cost = 0.0;       // penalized cost of the winner
    double best_objective = 0.0;  // unpenalized heat / arrival time
    double target_miss = 0.0;
    int best_restart = -1;
    uint64_t seed = 0;
    std::vector<double> cost_trace;  // winner's per-sweep penalized best
};

namespace detail {

struct RestartOutcome {
    ParamVector params;
    double penalized = 1e300;
    double objective = 0.0;
    double miss = 0.0;
    std::vector<double> trace;
};

inline RestartOutcome run_restart(const Problem& problem, const MultistartConfig& cfg,
                                  int restart_index) {
    Rng rng(mix_seed(cfg.seed, uint64_t(restart_index)));
    const int nseg = cfg.n_segments;
    ParamVector x;
    x.n_segments = nseg;
    x.terminal_quench = problem.terminal_quench;
    x.values.resize(x.size());
    std::vector<double> lo(x.size()), hi(x.size());
    for (int s = 0; s < nseg; ++s) {
        lo[s * 4] = problem.eps_lo;
        hi[s * 4] = problem.eps_hi;
        for (int i = 1; i <= 3; ++i) {
            lo[s * 4 + i] = -problem.lambda_bound;
            hi[s * 4 + i] = problem.lambda_bound;
        }
    }
    if (x.terminal_quench) {
        lo[nseg * 4] = -M_PI;
        hi[nseg * 4] = M_PI;
        lo[nseg * 4 + 1] = -M_PI;
        hi[nseg * 4 + 1] = M_PI;
    }
    for (int i = 0; i < x.size(); ++i) x.values[i] = rng.uniform(lo[i], hi[i]);

    RestartOutcome out;
    double weight = cfg.penalty_weight0;
    auto score = [&](const ParamVector& p) {
        EvalResult r = evaluate(p, problem);
        double f = r.cost + weight * r.target_miss * r.target_miss;
        return std::make_pair(f, r);
    };

    auto [fx, rx] = score(x);
    for (int epoch = 0; epoch < cfg.penalty_epochs; ++epoch) {
        weight = cfg.penalty_weight0 * std::pow(10.0, epoch);
        std::tie(fx, rx) = score(x);  // re-score under the new weight
        std::vector<double> step(x.size());
        for (int i = 0; i < x.size(); ++i) step[i] = 0.25 * (hi[i] - lo[i]);
        for (int sweep = 0; sweep < cfg.iterations; ++sweep) {
            bool improved = false;
            for (int i = 0; i < x.size(); ++i) {
                for (double dir : {+1.0, -1.0}) {
                    double old = x.values[i];
                    double cand = std::min(hi[i], std::max(lo[i], old + dir * step[i]));
                    if (cand == old) continue;
                    x.values[i] = cand;
                    auto [fc, rc] = score(x);
                    if (fc < fx) {
                        fx = fc;
                        rx = rc;
                        improved = true;
                        break;  // keep the improving move
                    }
                    x.values[i] = old;
                }
            }
            if (!improved) {
                for (double& s : step) s *= 0.5;
            }
            out.trace.push_back(fx);
            double max_step = 0.0;
            for (int i = 0; i < x.size(); ++i)
                max_step = std::max(max_step, step[i] / (hi[i] - lo[i]));
            if (max_step < 1e-5) break;
        }
    }
    out.params = x;
    out.penalized = fx;
    out.objective = rx.cost;
    out.miss = rx.target_miss;
    return out;
}

}  // namespace detail

// Best control found across `restarts` independent pattern searches. The
// boundary constraint enters through an escalating quadratic penalty on the
// target miss. Bit-identical results for identical (seed, config).
inline OptimizationResult multistart_search(const Problem& problem, const MultistartConfig& cfg) {
    problem.validate();
    OptimizationResult result;
    result.seed = cfg.seed;
    if (cfg.restarts <= 0) return result;

    std::vector<detail::RestartOutcome> outcomes(cfg.restarts);
    int threads = cfg.threads > 0 ? cfg.threads : int(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, cfg.restarts));
    std::atomic<int> cursor{0};
    auto worker = [&]() {
        for (;;) {
            int idx = cursor.fetch_add(1);
            if (idx >= cfg.restarts) return;
            outcomes[idx] = detail::run_restart(problem, cfg, idx);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // deterministic merge: strictly better cost, ties to the lower index
    int best = 0;
    for (int i = 1; i < cfg.restarts; ++i)
        if (outcomes[i].penalized < outcomes[best].penalized) best = i;
    result.best = outcomes[best].params;
    result.best_cost = outcomes[best].penalized;
    result.best_objective = outcomes[best].objective;
    result.target_miss = outcomes[best].miss;
    result.best_restart = best;
    result.cost_trace = outcomes[best].trace;
    return result;
}

// Minimal arrival times over a grid of diagonal targets, with a
// reachable-within-horizon verdict per target.
struct ReachabilityRow {
    double target_az = 0.0;
    double min_time = 0.0;
    bool reachable = false;
    bool feasible = true;
};

inline std::vector<ReachabilityRow> reachability_scan(const DissipatorModel& model,
                                                      const BlochState& a0, double horizon,
                                                      const std::vector<double>& target_az_grid) {
    std::vector<ReachabilityRow> rows;
    rows.reserve(target_az_grid.size());
    double az0 = -a0.norm();
    for (double az : target_az_grid) {
        ReachabilityRow row;
        row.target_az = az;
        if (std::abs(az) > 1.0) {
            row.feasible = false;
            rows.push_back(row);
            continue;
        }
        try {
            row.min_time = time_optimal_duration(model, az0, -std::abs(az));
            row.reachable = row.min_time <= horizon;
        } catch (const infeasible_error&) {
            row.feasible = false;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace qoctl
