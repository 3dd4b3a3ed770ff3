#pragma once

// The three thermal GKSL dissipators in Bloch and matrix form, their
// equilibrium quantities and adjoints, and the frame-covariance check.
//
// Conventions: the rotating-frame Hamiltonian is D = (eps/2)(1 + sigma_z),
// so the excited state sits in the upper-left slot and the ground state is
// az = -1. Rates are per unit time; eps and beta carry inverse units.

#include <cmath>
#include <string>
#include <vector>

#include "qoctl/bloch.hpp"
#include "qoctl/errors.hpp"

namespace qoctl {

enum class DissipatorKind { GibbsMixing, Bosonic, Fermionic };

inline const char* kind_name(DissipatorKind k) {
    switch (k) {
        case DissipatorKind::GibbsMixing: return "gibbs";
        case DissipatorKind::Bosonic: return "bosonic";
        case DissipatorKind::Fermionic: return "fermionic";
    }
    return "?";
}

struct DissipatorModel {
    DissipatorKind kind = DissipatorKind::GibbsMixing;
    double gamma = 1.0;  // decoherence rate
    double beta = 1.0;   // inverse temperature

    void validate() const {
        if (!(gamma > 0.0)) throw input_error("DissipatorModel: gamma must be > 0");
        if (!(beta > 0.0)) throw input_error("DissipatorModel: beta must be > 0");
    }
};

// N_B = 1/(e^{beta eps} - 1), via expm1 so large beta*eps underflows to 0
// instead of producing inf/nan.
inline double bosonic_occupation(double beta, double eps) {
    return 1.0 / std::expm1(beta * eps);
}

// N_F = 1/(e^{beta eps} + 1)
inline double fermionic_occupation(double beta, double eps) {
    double x = beta * eps;
    if (x > 0) {
        double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (std::exp(x) + 1.0);
}

struct OccupationNumbers {
    double n_bosonic;
    double n_fermionic;
};

inline OccupationNumbers occupations(double beta, double eps) {
    return {bosonic_occupation(beta, eps), fermionic_occupation(beta, eps)};
}

// az at equilibrium: -tanh(beta eps / 2). Same value for all three models.
inline double equilibrium_az(const DissipatorModel& model, double eps) {
    (void)model;
    return -std::tanh(0.5 * model.beta * eps);
}

// d(az_eq)/d(eps) = -(beta/2)(1 - az_eq^2) = -(beta/2) sech^2(beta eps/2).
// The sech form avoids the 1 - tanh^2 cancellation at large gaps.
inline double equilibrium_az_slope(const DissipatorModel& model, double eps) {
    double c = std::cosh(0.5 * model.beta * eps);
    return -0.5 * model.beta / (c * c);
}

namespace detail {

// Bosonic rates diverge as eps -> 0 and the occupation turns negative for
// eps < 0; both are outside the model's domain.
inline void check_rate_domain(const DissipatorModel& model, double eps) {
    if (model.kind == DissipatorKind::Bosonic && eps <= 0.0)
        throw singular_rate_error(
            "bosonic dissipator undefined at eps <= 0 (rate diverges at the closing gap)");
}

}  // namespace detail

// Bloch-space rate d(a)/dt contributed by the dissipator alone.
//   Gibbs:     (-g ax, -g ay, -g (az - az_eq))
//   Bosonic:   (g ax, g ay, 2 g (az - az_eq)) / (2 az_eq)
//   Fermionic: (-g ax / 2, -g ay / 2, -g (az - az_eq))
inline Vec3 apply_dissipator(const DissipatorModel& model, const BlochState& a, double eps) {
    detail::check_rate_domain(model, eps);
    double g = model.gamma;
    double aeq = equilibrium_az(model, eps);
    switch (model.kind) {
        case DissipatorKind::GibbsMixing:
            return {-g * a.ax, -g * a.ay, -g * (a.az - aeq)};
        case DissipatorKind::Bosonic:
            return {0.5 * g * a.ax / aeq, 0.5 * g * a.ay / aeq, g * (a.az - aeq) / aeq};
        case DissipatorKind::Fermionic:
            return {-0.5 * g * a.ax, -0.5 * g * a.ay, -g * (a.az - aeq)};
    }
    return {};
}

// Lindblad operators of the standard-form dissipator for a given Hamiltonian,
// built from its spectral decomposition. Used by the covariance check and the
// matrix-form generators.
struct LindbladOp {
    Mat2 op;
    double rate;
};

inline std::vector<LindbladOp> lindblad_ops(const DissipatorModel& model, const Mat2& h) {
    EigenSystem es = eigh(h);
    double gap = es.values[0] - es.values[1];
    // |e><g| and |g><e| between the instantaneous eigenvectors
    auto outer = [](const std::array<complexd, 2>& u, const std::array<complexd, 2>& v) {
        return Mat2{u[0] * std::conj(v[0]), u[0] * std::conj(v[1]),
                    u[1] * std::conj(v[0]), u[1] * std::conj(v[1])};
    };
    Mat2 lower = outer(es.vectors[1], es.vectors[0]);  // |g><e|
    Mat2 raise = outer(es.vectors[0], es.vectors[1]);  // |e><g|
    double g = model.gamma;
    switch (model.kind) {
        case DissipatorKind::Bosonic: {
            if (gap <= 0.0)
                throw singular_rate_error("bosonic lindblad_ops: Hamiltonian gap must be > 0");
            double nb = bosonic_occupation(model.beta, gap);
            return {{lower, g * (1.0 + nb)}, {raise, g * nb}};
        }
        case DissipatorKind::Fermionic: {
            double nf = fermionic_occupation(model.beta, gap);
            return {{lower, g * (1.0 - nf)}, {raise, g * nf}};
        }
        case DissipatorKind::GibbsMixing: {
            // complete thermalization: L_jk = sqrt(p_k) |k><j| with Gibbs
            // weights p_k of the instantaneous Hamiltonian
            double pe = fermionic_occupation(model.beta, gap);  // e^{-b E_e}/Z for a 2-level gap
            double pg = 1.0 - pe;
            Mat2 proj_e = outer(es.vectors[0], es.vectors[0]);
            Mat2 proj_g = outer(es.vectors[1], es.vectors[1]);
            return {{proj_e, g * pe},
                    {proj_g, g * pg},
                    {raise, g * pe},
                    {lower, g * pg}};
        }
    }
    return {};
}

inline Mat2 apply_lindblad(const std::vector<LindbladOp>& ops, const Mat2& rho) {
    Mat2 out = Mat2::zero();
    for (const auto& [l, r] : ops) {
        Mat2 ldag = l.adjoint();
        out = out + r * (l * rho * ldag - 0.5 * anticommutator(ldag * l, rho));
    }
    return out;
}

inline Mat2 apply_lindblad_adjoint(const std::vector<LindbladOp>& ops, const Mat2& x) {
    Mat2 out = Mat2::zero();
    for (const auto& [l, r] : ops) {
        Mat2 ldag = l.adjoint();
        out = out + r * (ldag * x * l - 0.5 * anticommutator(ldag * l, x));
    }
    return out;
}

// D = (eps/2)(1 + sigma_z)
inline Mat2 diagonal_hamiltonian(double eps) {
    return Mat2{complexd(eps, 0.0), 0.0, 0.0, 0.0};
}

// Gibbs state of the diagonal Hamiltonian: (1 + az_eq sigma_z)/2.
inline Mat2 gibbs_state(const DissipatorModel& model, double eps) {
    double aeq = equilibrium_az(model, eps);
    return to_density(BlochState{0.0, 0.0, aeq});
}

// Matrix form of the dissipator acting on rho in the rotating frame.
inline Mat2 dissipator_matrix(const DissipatorModel& model, const Mat2& rho, double eps) {
    detail::check_rate_domain(model, eps);
    if (model.kind == DissipatorKind::GibbsMixing)
        return model.gamma * (gibbs_state(model, eps) - rho);
    return apply_lindblad(lindblad_ops(model, diagonal_hamiltonian(eps)), rho);
}

// Adjoint of the dissipator (Heisenberg picture) in the rotating frame.
inline Mat2 dissipator_adjoint_matrix(const DissipatorModel& model, const Mat2& x, double eps) {
    detail::check_rate_domain(model, eps);
    if (model.kind == DissipatorKind::GibbsMixing) {
        double mean = trace_pair(x, gibbs_state(model, eps));
        return model.gamma * (mean * Mat2::identity() - x);
    }
    return apply_lindblad_adjoint(lindblad_ops(model, diagonal_hamiltonian(eps)), x);
}

// Max-abs difference between the fermionic dissipator and its split into a
// Gibbs mixing part plus a pure dephasing part; zero within roundoff.
inline double fermionic_decomposition_check(const DissipatorModel& model, const BlochState& a,
                                            double eps) {
    DissipatorModel ferm = model;
    ferm.kind = DissipatorKind::Fermionic;
    DissipatorModel gibbs = model;
    gibbs.kind = DissipatorKind::GibbsMixing;
    Mat2 rho = to_density(a);
    Mat2 lhs = dissipator_matrix(ferm, rho, eps);
    Mat2 dephase =
        0.25 * ferm.gamma * (a.ax * Mat2::sigma_x() + a.ay * Mat2::sigma_y());
    Mat2 rhs = dissipator_matrix(gibbs, rho, eps) + dephase;
    return (lhs - rhs).max_abs();
}

// Covariance of the dissipator under a rotation of the Hamiltonian basis:
// build D_{U^dag D U} from the rotated Hamiltonian's own spectral data and
// compare with conjugating the diagonal-frame dissipator. Returns the
// max-abs difference.
inline double h_covariance_check(const DissipatorModel& model, const Mat2& rho, const Mat2& u,
                                 double eps) {
    if (!u.is_unitary(1e-10)) throw input_error("h_covariance_check: U is not unitary");
    Mat2 d = diagonal_hamiltonian(eps);
    Mat2 h = u.adjoint() * d * u;
    Mat2 rotated_frame;
    if (model.kind == DissipatorKind::GibbsMixing) {
        // Gibbs state of H from its own eigendecomposition
        EigenSystem es = eigh(h);
        double gap = es.values[0] - es.values[1];
        double pe = fermionic_occupation(model.beta, gap);
        auto outer = [](const std::array<complexd, 2>& a, const std::array<complexd, 2>& b) {
            return Mat2{a[0] * std::conj(b[0]), a[0] * std::conj(b[1]),
                        a[1] * std::conj(b[0]), a[1] * std::conj(b[1])};
        };
        Mat2 eta = pe * outer(es.vectors[0], es.vectors[0]) +
                   (1.0 - pe) * outer(es.vectors[1], es.vectors[1]);
        rotated_frame = model.gamma * (eta - rho);
    } else {
        rotated_frame = apply_lindblad(lindblad_ops(model, h), rho);
    }
    Mat2 diagonal_frame =
        u.adjoint() * dissipator_matrix(model, u * rho * u.adjoint(), eps) * u;
    return (rotated_frame - diagonal_frame).max_abs();
}

}  // namespace qoctl
