#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "qoctl/analytic.hpp"
#include "qoctl/pmp.hpp"

using namespace qoctl;
using Catch::Approx;

namespace {
const DissipatorModel kGibbs{DissipatorKind::GibbsMixing, 1.0, 1.0};
const DissipatorModel kBosonic{DissipatorKind::Bosonic, 1.0, 1.0};
const DissipatorModel kFermionic{DissipatorKind::Fermionic, 1.0, 1.0};

Trajectory simulate_protocol(const Protocol& proto, double dt = 1e-3) {
    ControlSchedule sched = protocol_to_schedule(proto, dt);
    return integrate(sched, proto.rho0, proto.initial_costate(), proto.model, proto.objective);
}
}  // namespace

TEST_CASE("gibbs coherent candidate is unphysical everywhere") {
    // frozen from direct evaluation of the branch formula
    CHECK(gibbs_coherent_az(1.0, 1.0) == Approx(-5.7373912310146924).epsilon(1e-12));
    CHECK(std::abs(gibbs_coherent_az(1.0, 1.0)) > 1.0);

    for (int k = 0; k < 2000; ++k) {
        double x = 0.01 + (20.0 - 0.01) * k / 1999.0;
        CHECK(std::abs(gibbs_coherent_az(x, 1.0)) > 1.0);
    }
    // the ratio denominator closes at zero gap: magnitude diverges
    CHECK(std::abs(gibbs_coherent_az(1e-4, 1.0)) > 1e4);
    CHECK_THROWS_AS(gibbs_coherent_az(0.0, 1.0), input_error);
}

TEST_CASE("bosonic coherent branch: negative off-diagonal norm on the feasible grid") {
    int feasible = 0;
    for (int i = 0; i < 100; ++i) {
        double x = 0.05 + (10.0 - 0.05) * i / 99.0;  // beta*eps
        for (int j = 0; j < 81; ++j) {
            double kb = -10.0 + 20.0 * j / 80.0;  // K beta / gamma
            if (kb == 0.0) continue;
            for (int sign : {-1, +1}) {
                try {
                    auto res = bosonic_coherent_branch(x, 1.0, kb, 1.0, sign);
                    ++feasible;
                    CHECK(res.xy_norm_sq < 0.0);
                } catch (const branch_undefined_error&) {
                }
            }
        }
    }
    CHECK(feasible > 1000);  // the grid genuinely exercises the branch
}

TEST_CASE("bosonic coherent branch: large-mu asymptote is unphysical") {
    double x = 1.0;
    double mu = 1e4;
    auto res = bosonic_coherent_branch(x, 1.0, 2.0 * mu, 1.0, +1);
    double c2 = std::cosh(0.5 * x) * std::cosh(0.5 * x);
    CHECK(res.az == Approx(equilibrium_az(kBosonic, x) + 2.0 * mu / c2).epsilon(1e-3));
    CHECK(std::abs(res.az) > 1.0);
}

TEST_CASE("bosonic coherent branch solves the stationarity pair") {
    // substitute (az, xy_norm_sq, qz from the compact costate relation) back
    // into the conserved-value and gap conditions
    for (double x : {0.5, 1.0, 3.0}) {
        for (double kb : {-6.0, -2.0, 2.0, 6.0}) {
            for (int sign : {-1, +1}) {
                double K = kb, gamma = 1.0, beta = 1.0, eps = x;
                CoherentBranchResult res;
                try {
                    res = bosonic_coherent_branch(eps, beta, K, gamma, sign);
                } catch (const branch_undefined_error&) {
                    continue;
                }
                double aeq = equilibrium_az(kBosonic, eps);
                double slope = equilibrium_az_slope(kBosonic, eps);
                double delta = res.az - aeq;
                double qsrc = 0.5 * eps * aeq / delta;  // qz - eps/2 via the compact relation
                double s = 0.5 * eps * res.xy_norm_sq / delta;  // ax qx + ay qy
                double c9 = s + 2.0 * delta * qsrc - 2.0 * aeq * K / gamma;
                double c10 = (s + 2.0 * res.az * qsrc) * slope + aeq * delta;
                CHECK(std::abs(c9) <= 1e-9 * std::max(1.0, std::abs(2.0 * aeq * K / gamma)));
                CHECK(std::abs(c10) <= 1e-9 * std::max(1.0, std::abs(aeq * delta)));
            }
        }
    }
}

TEST_CASE("bosonic incoherent branch: spot values and physicality flag") {
    // mu = -0.5 at unit gap; frozen from direct evaluation
    auto minus = bosonic_incoherent_az(1.0, 1.0, -1.0, 1.0, -1);
    CHECK(minus.az == Approx(-0.13557995237025376).epsilon(1e-10));
    CHECK(minus.az == Approx(-0.13558).margin(1e-4));
    CHECK(minus.physical);

    auto plus = bosonic_incoherent_az(1.0, 1.0, -1.0, 1.0, +1);
    CHECK(plus.az == Approx(-1.5751020951156932).epsilon(1e-10));
    CHECK_FALSE(plus.physical);

    // K = 0 is the equilibrium quasi-static limit
    auto eq = bosonic_incoherent_az(1.0, 1.0, 0.0, 1.0, -1);
    CHECK(eq.az == Approx(equilibrium_az(kBosonic, 1.0)));

    CHECK_THROWS_AS(bosonic_incoherent_az(1.0, 1.0, 0.5, 1.0, -1), branch_undefined_error);
    CHECK_THROWS_AS(bosonic_incoherent_az(0.0, 1.0, -1.0, 1.0, -1), singular_rate_error);
}

TEST_CASE("bosonic incoherent branch satisfies the eliminated-costate identity") {
    // (az - az_eq)^2 = -2 (K/gamma) az d(az_eq)/d(eps), checked across the grid
    for (int i = 0; i < 60; ++i) {
        double x = 0.1 + (8.0 - 0.1) * i / 59.0;
        for (double K : {-4.0, -1.0, -0.25, 0.5, 2.0}) {
            for (int sign : {-1, +1}) {
                double az;
                try {
                    az = bosonic_incoherent_az_value(x, 1.0, K, 1.0, sign);
                } catch (const branch_undefined_error&) {
                    continue;
                }
                double aeq = equilibrium_az(kBosonic, x);
                double slope = equilibrium_az_slope(kBosonic, x);
                double lhs = (az - aeq) * (az - aeq);
                double rhs = -2.0 * K * az * slope;
                CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
                // branch rule: the sign of K matches the sign of az
                if (std::abs(az) > 1e-12) CHECK(K * az >= 0.0);
            }
        }
    }
}

TEST_CASE("gibbs diagonal branch point solves the stationarity pair") {
    for (double eps : {0.4, 1.0, 3.0}) {
        for (double K : {-0.5, -0.05}) {
            for (int sign : {-1, +1}) {
                auto pt = gibbs_diagonal_branch(eps, 1.0, 1.0, K, sign);
                PmpReport rep = heat_residuals(kGibbs, {0, 0, pt.az}, {0, 0, pt.qz}, eps, K);
                for (const auto& c : rep.conditions) CHECK(c.raw <= 1e-10);
            }
        }
    }
    CHECK_THROWS_AS(gibbs_diagonal_branch(1.0, 1.0, 1.0, 0.5, -1), branch_undefined_error);
}

TEST_CASE("time protocol: reference durations") {
    // purification: -0.2 -> -0.8 takes ln 4 at the positive gap extreme
    Protocol p1 = synthesize_time_protocol(kGibbs, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.8}, 1.0, 1.0);
    CHECK(p1.predicted_cost == Approx(std::log(4.0)).epsilon(1e-12));

    // mixing: -0.8 -> -0.2 takes ln 1.5 at the negative extreme
    Protocol p2 = synthesize_time_protocol(kGibbs, {0.0, 0.0, -0.8}, {0.0, 0.0, -0.2}, 1.0, 1.0);
    CHECK(p2.predicted_cost == Approx(std::log(1.5)).epsilon(1e-12));
    const auto* evo2 = p2.evolution();
    REQUIRE(evo2 != nullptr);
    CHECK(evo2->eps_fn(0.0) < 0.0);

    // fermionic shares the gibbs time protocol
    Protocol pf =
        synthesize_time_protocol(kFermionic, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.8}, 1.0, 1.0);
    CHECK(pf.predicted_cost == Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("time protocol: simulated arrival matches the unbounded-gap value") {
    SynthesisOptions opts;
    opts.eps_max = 50.0;
    Protocol proto =
        synthesize_time_protocol(kGibbs, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.8}, 1.0, 1.0, opts);
    Trajectory traj = simulate_protocol(proto);
    CHECK(traj.a.back().az == Approx(-0.8).margin(1e-6));
    double simulated = traj.times.back();
    CHECK(std::abs(simulated - std::log(4.0)) / std::log(4.0) < 0.01);
}

TEST_CASE("time protocol: tilted boundary states get aligning quenches") {
    double n0 = 0.2, ntau = 0.8;
    BlochState rho0{n0 / std::sqrt(2.0), 0.0, n0 / std::sqrt(2.0)};
    BlochState rhot{0.0, ntau, 0.0};
    Protocol proto = synthesize_time_protocol(kGibbs, rho0, rhot, 1.0, 1.0);
    CHECK(proto.predicted_cost == Approx(std::log(4.0)).epsilon(1e-10));
    Trajectory traj = simulate_protocol(proto);
    CHECK(traj.a.back().ax == Approx(0.0).margin(1e-6));
    CHECK(traj.a.back().ay == Approx(ntau).margin(1e-6));
    CHECK(traj.a.back().az == Approx(0.0).margin(1e-6));
}

TEST_CASE("time protocol: unitarily equivalent boundaries need no open evolution") {
    BlochState rho0{0.5, 0.0, 0.0};
    BlochState rhot{0.0, 0.0, -0.5};
    Protocol proto = synthesize_time_protocol(kGibbs, rho0, rhot, 1.0, 1.0);
    CHECK(proto.predicted_cost == 0.0);
    CHECK(proto.evolution() == nullptr);
    Trajectory traj = simulate_protocol(proto);
    CHECK(traj.a.back().az == Approx(-0.5).margin(1e-12));
    CHECK(traj.total_heat() == 0.0);
}

TEST_CASE("time protocol: bosonic directions") {
    // purification uses the positive-gap branch with the same log formula
    Protocol p1 = synthesize_time_protocol(kBosonic, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.8}, 1.0, 1.0);
    CHECK(p1.predicted_cost == Approx(std::log(4.0)).epsilon(1e-12));
    CHECK_FALSE(p1.zero_time_branch);

    // mixing collapses to the zero-time degenerate-gap limit
    Protocol p2 = synthesize_time_protocol(kBosonic, {0.0, 0.0, -0.8}, {0.0, 0.0, -0.2}, 1.0, 1.0);
    CHECK(p2.predicted_cost == 0.0);
    CHECK(p2.zero_time_branch);
    CHECK(p2.nonmarkov_caveat);
}

TEST_CASE("time protocol: pure target is infeasible") {
    CHECK_THROWS_AS(
        synthesize_time_protocol(kGibbs, {0.0, 0.0, -0.2}, {0.0, 0.0, -1.0}, 1.0, 1.0),
        infeasible_error);
}

TEST_CASE("clamp convergence of the simulated arrival time") {
    double target = std::log(4.0);
    double prev_err = 1e9;
    for (double eps_max : {10.0, 20.0, 50.0}) {
        double err = std::abs(clamped_time_duration(kGibbs, -0.2, -0.8, eps_max) - target);
        CHECK(err < prev_err);
        prev_err = err;
    }
    // the last refinement sits at the double-precision floor
    double e50 = std::abs(clamped_time_duration(kGibbs, -0.2, -0.8, 50.0) - target);
    double e100 = std::abs(clamped_time_duration(kGibbs, -0.2, -0.8, 100.0) - target);
    CHECK(e100 <= e50 + 1e-12);
}

TEST_CASE("coherent decay is never faster than the incoherent protocol") {
    CHECK(coherent_decay_time(0.8, 0.2, 1.0) == Approx(std::log(4.0)));
    CHECK(coherent_decay_time(0.5, 0.5, 1.0) == 0.0);
    CHECK(coherent_decay_time(1.0, std::exp(-1.0), 1.0) == Approx(1.0));
    CHECK_THROWS_AS(coherent_decay_time(0.2, 0.8, 1.0), infeasible_error);

    // matching z-targets: mixing from -0.8 to -0.2 incoherently takes ln 1.5
    double coherent = coherent_decay_time(0.8, 0.2, 1.0);
    double incoherent = time_optimal_duration(kGibbs, -0.8, -0.2);
    CHECK(incoherent == Approx(std::log(1.5)));
    CHECK(coherent > incoherent);

    auto g = oracles::rng(601);
    for (int k = 0; k < 100; ++k) {
        double n0 = oracles::uniform(g, 0.05, 0.99);
        double nt = oracles::uniform(g, 0.01, n0 - 1e-3);
        double tc = coherent_decay_time(n0, nt, 1.0);
        double ti = time_optimal_duration(kGibbs, -n0, -nt);
        CHECK(tc > ti);
    }
}

TEST_CASE("heat protocol: identity boundary gives zero heat") {
    double aeq = equilibrium_az(kGibbs, 1.0);
    BlochState eq{0.0, 0.0, aeq};
    Protocol proto =
        synthesize_heat_protocol(kGibbs, eq, eq, Mat2::identity(), 2.0, 1.0, 1.0);
    CHECK(proto.predicted_cost == Approx(0.0).margin(1e-12));
    Trajectory traj = simulate_protocol(proto);
    CHECK(std::abs(traj.total_heat()) < 1e-9);
    CHECK(traj.a.back().az == Approx(aeq).margin(1e-9));
}

TEST_CASE("heat protocol: gibbs cooling matches its simulated cost") {
    double tau = 2.0;
    BlochState rho0{0.0, 0.0, -0.2}, rhot{0.0, 0.0, -0.7};
    Protocol proto = synthesize_heat_protocol(kGibbs, rho0, rhot, Mat2::identity(), tau, 1.0, 1.0);
    REQUIRE(proto.evolution() != nullptr);
    CHECK(proto.evolution()->duration == Approx(tau).epsilon(1e-6));
    Trajectory traj = simulate_protocol(proto);
    CHECK(traj.a.back().az == Approx(-0.7).margin(1e-6));
    CHECK(traj.total_heat() == Approx(proto.predicted_cost).epsilon(1e-6));
    CHECK(proto.predicted_cost > 0.0);  // cooling releases heat

    // slower processes dissipate less
    Protocol slow =
        synthesize_heat_protocol(kGibbs, rho0, rhot, Mat2::identity(), 2.0 * tau, 1.0, 1.0);
    CHECK(slow.predicted_cost < proto.predicted_cost);
}

TEST_CASE("heat protocol: heating absorbs heat") {
    Protocol proto = synthesize_heat_protocol(kGibbs, {0.0, 0.0, -0.7}, {0.0, 0.0, -0.2},
                                              Mat2::identity(), 2.0, 1.0, 1.0);
    Trajectory traj = simulate_protocol(proto);
    CHECK(traj.total_heat() == Approx(proto.predicted_cost).margin(1e-6));
    CHECK(proto.predicted_cost < 0.0);
}

TEST_CASE("heat protocol: bosonic cooling matches its simulated cost") {
    double tau = 2.0;
    Protocol proto = synthesize_heat_protocol(kBosonic, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.6},
                                              Mat2::identity(), tau, 1.0, 1.0);
    Trajectory traj = simulate_protocol(proto);
    CHECK(traj.a.back().az == Approx(-0.6).margin(1e-6));
    CHECK(traj.total_heat() == Approx(proto.predicted_cost).epsilon(1e-6));
}

TEST_CASE("heat protocol: fermionic shares the gibbs diagonal branch") {
    Protocol pg = synthesize_heat_protocol(kGibbs, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.7},
                                           Mat2::identity(), 2.0, 1.0, 1.0);
    Protocol pf = synthesize_heat_protocol(kFermionic, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.7},
                                           Mat2::identity(), 2.0, 1.0, 1.0);
    CHECK(pf.predicted_cost == Approx(pg.predicted_cost).epsilon(1e-10));
    Trajectory traj = simulate_protocol(pf);
    CHECK(traj.total_heat() == Approx(pf.predicted_cost).epsilon(1e-6));
}

TEST_CASE("heat protocol: coherent target costs the same as its diagonalization") {
    double tau = 2.0;
    double nt = 0.7;
    BlochState tilted{nt / std::sqrt(2.0), 0.0, -nt / std::sqrt(2.0)};
    Protocol pd = synthesize_heat_protocol(kGibbs, {0.0, 0.0, -0.2}, {0.0, 0.0, -nt},
                                           Mat2::identity(), tau, 1.0, 1.0);
    Protocol pc = synthesize_heat_protocol(kGibbs, {0.0, 0.0, -0.2}, tilted, Mat2::identity(),
                                           tau, 1.0, 1.0);
    CHECK(pc.predicted_cost == Approx(pd.predicted_cost).epsilon(1e-12));
    Trajectory traj = simulate_protocol(pc);
    CHECK(traj.total_heat() == Approx(pc.predicted_cost).epsilon(1e-6));
    CHECK(traj.a.back().ax == Approx(tilted.ax).margin(1e-6));
    CHECK(traj.a.back().az == Approx(tilted.az).margin(1e-6));
}

TEST_CASE("heat protocol: duration below the minimal time is infeasible") {
    double tau_min = std::log(4.0);
    try {
        synthesize_heat_protocol(kGibbs, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.8}, Mat2::identity(),
                                 0.5 * tau_min, 1.0, 1.0);
        FAIL("expected infeasible_error");
    } catch (const infeasible_error& e) {
        CHECK(e.minimal_time == Approx(tau_min).epsilon(1e-12));
    }
}

TEST_CASE("synthesized open segments satisfy the residual suite") {
    struct Case {
        DissipatorModel model;
        BlochState from, to;
    };
    Case cases[] = {
        {kGibbs, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.7}},
        {kGibbs, {0.0, 0.0, -0.7}, {0.0, 0.0, -0.2}},
        {kBosonic, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.6}},
        {kFermionic, {0.0, 0.0, -0.3}, {0.0, 0.0, -0.6}},
    };
    for (const auto& c : cases) {
        Protocol proto =
            synthesize_heat_protocol(c.model, c.from, c.to, Mat2::identity(), 2.0, 1.0, 1.0);
        const auto* evo = proto.evolution();
        REQUIRE(evo != nullptr);
        Trajectory traj = simulate_protocol(proto);
        std::size_t n = traj.times.size();
        for (int k = 1; k < 32; ++k) {
            std::size_t idx = n * std::size_t(k) / 32;
            PmpReport rep = heat_residuals(c.model, traj.a[idx], traj.q[idx], traj.eps[idx],
                                           evo->K, 1e-6);
            for (const auto& cond : rep.conditions) CHECK(cond.relative <= 1e-6);
        }
    }
}

TEST_CASE("pseudo-hamiltonian is constant along synthesized heat branches") {
    Protocol proto = synthesize_heat_protocol(kGibbs, {0.0, 0.0, -0.2}, {0.0, 0.0, -0.7},
                                              Mat2::identity(), 2.0, 1.0, 1.0);
    Trajectory traj = simulate_protocol(proto);
    auto kv = conserved_K(traj, Objective::Heat);
    CHECK(kv.stdev / std::abs(kv.K) <= 1e-8);
    CHECK(kv.K == Approx(proto.evolution()->K).epsilon(1e-6));
}
