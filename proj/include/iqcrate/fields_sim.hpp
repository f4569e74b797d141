#pragma once

#include "iqcrate/graph_tools.hpp"
#include "iqcrate/lmi_assembly.hpp"
#include "iqcrate/state_space.hpp"
#include "iqcrate/zf_multiplier.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iqcrate {

// ============================================================================
// Scalar fields
// ============================================================================
// A field psi: R^d -> R is carried by its gradient oracle, an optional value
// oracle, a declared sector (m, L) and, when known, its minimizer.  The
// declared sector is a claim, not a derived fact; sector_spot_check probes it
// on random pairs:  m |y1-y2|^2 <= (grad(y1)-grad(y2))'(y1-y2) <= L |y1-y2|^2.

struct ScalarField {
    int d = 1;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    std::function<double(const Eigen::VectorXd&)> value;  // may be empty
    double m = 0.0;  // declared sector lower bound
    double L = 0.0;  // declared sector upper bound
    std::optional<Eigen::VectorXd> y_opt;  // known minimizer
    bool quadratic = false;           // psi(y) = y'Qy + b'y + c for some Q > 0
    bool radially_symmetric = false;  // psi(y) = psi_r(|y - y_opt|)
};

// psi(y) = 1/2 (y - y0)' Hess (y - y0) with symmetric positive definite Hess;
// the declared sector is [lambda_min, lambda_max] of Hess and y_opt = y0.
[[nodiscard]] ScalarField quadratic_field(const Eigen::MatrixXd& hess,
                                          const Eigen::VectorXd& y0);

// Quadratic field with Hessian eigenvalues sampled log-uniformly in [m, L]
// over a random orthogonal eigenbasis; deterministic per seed.
[[nodiscard]] ScalarField random_quadratic_field(int d, double m, double L,
                                                 const Eigen::VectorXd& y0,
                                                 std::uint64_t seed);

struct SectorCheckResult {
    bool ok = false;
    double worst_lower = 0.0;  // min over pairs of increment'dy - m |dy|^2
    double worst_upper = 0.0;  // min over pairs of L |dy|^2 - increment'dy
};

// Probes the declared sector on `pairs` random point pairs drawn from a ball
// of the given radius around y_opt (the origin when unknown).
[[nodiscard]] SectorCheckResult sector_spot_check(const ScalarField& field, int pairs,
                                                  std::uint64_t seed, double radius = 10.0,
                                                  double tol = 1e-7);

// ============================================================================
// Composite potentials  f(y) = V(y) + sum_{i informed} psi(y_i)
// ============================================================================
// Two interaction kinds are supported:
//   laplacian_quadratic:  V(y) = 1/2 (y - r)' (Lap kron I_d) (y - r)
//   sigma_flocking:       V(y) = sum_{edges (i,j)} k/2 (|y_i - y_j|_sigma - dist)^2
// with |z|_sigma = (1/eps)(sqrt(1 + eps |z|^2) - 1).

enum class InteractionKind { LaplacianQuadratic, SigmaFlocking };

struct CompositePotential {
    InteractionKind kind = InteractionKind::LaplacianQuadratic;
    int N = 0;
    int d = 1;
    Eigen::MatrixXd laplacian;  // N x N  (laplacian_quadratic)
    Eigen::VectorXd r;          // N d formation reference (laplacian_quadratic)
    std::vector<std::pair<int, int>> edges;  // sigma_flocking
    double k = 1.0;     // sigma_flocking edge gain
    double dist = 1.0;  // sigma_flocking desired sigma-distance
    double eps = 1.0;   // sigma-norm parameter
    std::vector<int> informed;  // sorted, non-empty, 0-based
    ScalarField psi;

    // Shape and range consistency; throws std::invalid_argument otherwise.
    void validate() const;
};

[[nodiscard]] CompositePotential formation_potential(const InteractionGraph& g,
                                                     const Eigen::VectorXd& r, int d,
                                                     ScalarField psi);
[[nodiscard]] CompositePotential flocking_potential(const InteractionGraph& g, double k,
                                                    double dist, int d, ScalarField psi,
                                                    double eps = 1.0);

// (1/eps)(sqrt(1 + eps |z|^2) - 1); smooth at z = 0 with zero gradient there.
[[nodiscard]] double sigma_norm(const Eigen::VectorXd& z, double eps = 1.0);
[[nodiscard]] Eigen::VectorXd sigma_norm_gradient(const Eigen::VectorXd& z, double eps = 1.0);

// Interaction gradient grad V(y) for a stacked y in R^{Nd}.
[[nodiscard]] Eigen::VectorXd grad_V(const CompositePotential& pot, const Eigen::VectorXd& y);

// grad f(y) = grad V(y) plus the psi gradient injected at informed blocks.
[[nodiscard]] Eigen::VectorXd grad_f(const CompositePotential& pot, const Eigen::VectorXd& y);

// f(y) itself; requires the field's value oracle.
[[nodiscard]] double f_value(const CompositePotential& pot, const Eigen::VectorXd& y);

// Damped Newton descent from y0 to a stationary point of f; used for
// equilibrium location and f minimum values.  The f field is NaN when the
// field carries no value oracle.
struct DescentResult {
    Eigen::VectorXd z;
    double f = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

[[nodiscard]] DescentResult minimize_f(const CompositePotential& pot, const Eigen::VectorXd& y0,
                                       int max_iterations = 20000, double grad_tol = 1e-10);

// ============================================================================
// Closed-loop simulation
// ============================================================================
// The network loop integrates
//     eta' = Ahat eta + Bhat u,   y = Chat eta,   u = grad f(y)
// with N block copies of the agent plant (classical fixed-step RK4).  Any
// loop sign lives inside the plant realization: the library convention keeps
// u = +grad f(y) and lets B carry the negative feedback sign.

struct Trajectory {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<Eigen::VectorXd> eta;  // stacked network state per sample
    std::vector<Eigen::VectorXd> y;    // stacked outputs, R^{Nd}
    std::vector<Eigen::VectorXd> u;    // stacked inputs grad f(y)
    bool blew_up = false;      // integration stopped on a non-finite state
    double blow_up_time = 0.0;
    std::string warning;  // step-size guideline violations and similar
    std::string meta;     // free-form provenance (plant, field, seed)

    [[nodiscard]] std::size_t samples() const { return t.size(); }

    // Uniform grid and consistent sample counts; throws std::invalid_argument.
    void validate() const;
};

// G is the per-agent plant: a scalar channel (lifted d-fold internally) or
// already d x d.  Strictly proper realizations only (D = 0); eta0 stacks the
// N lifted agent states.  A non-finite state aborts the run and records the
// blow-up time on the trajectory.
[[nodiscard]] Trajectory simulate_network(const StateSpace& G, int N, int d,
                                          const CompositePotential& pot,
                                          const Eigen::VectorXd& eta0, double t_end,
                                          double dt = 1e-3);

// Flocking variant: each agent is the model's vehicle with the second-order
// pre-filter, per-agent state [x; q; p] with q(0) = C x(0), p(0) = 0.  x0
// stacks the N vehicle states only.
[[nodiscard]] Trajectory simulate_network(const FlockingModel& model, int N,
                                          const CompositePotential& pot,
                                          const Eigen::VectorXd& x0, double t_end,
                                          double dt = 1e-3);

// LPV loop over a scalar scheduling parameter: two vertex realizations at
// parameter values rho_values (ascending), affine matrix interpolation per
// RK4 stage time.  rho(t) outside the vertex interval throws.
[[nodiscard]] Trajectory simulate_lpv(const std::vector<StateSpace>& vertices,
                                      const std::vector<double>& rho_values,
                                      const std::function<double(double)>& rho, int N, int d,
                                      const CompositePotential& pot,
                                      const Eigen::VectorXd& eta0, double t_end,
                                      double dt = 1e-3);

// Splits a stacked flocking network state into vehicle / pre-filter blocks
// (sizes N n_x, N d, N d) for storage evaluation.
struct FlockingState {
    Eigen::VectorXd x;
    Eigen::VectorXd q;
    Eigen::VectorXd p;
};

[[nodiscard]] FlockingState split_flocking_state(const FlockingModel& model, int N,
                                                 const Eigen::VectorXd& eta);

// CSV document with header `t,y_1..y_{Nd},u_1..u_{Nd}`.
[[nodiscard]] std::string trajectory_csv(const Trajectory& traj);

// ============================================================================
// Empirical rate estimation
// ============================================================================

struct RateFit {
    bool ok = false;         // no-fit when the error never decays far enough
    double alpha_emp = 0.0;  // negated slope of the log-error line fit
    double kappa_emp = 0.0;  // exp of the fit intercept
    double residual = 0.0;   // rms residual of the line fit
    int samples_used = 0;
    bool peak_fit = false;  // oscillatory decay fitted on envelope peaks
    std::string reason;     // set when !ok
};

// Least-squares line fit of log |y(t) - y_star| over the window where the
// error lies in [1e-6, 1e-1] of its initial value.  The error must decay
// below 1e-6 of the initial value within the horizon, else no-fit.  When the
// window contains five or more local maxima the fit uses only those peaks,
// which tracks the envelope of oscillatory decay.
[[nodiscard]] RateFit estimate_rate(const Trajectory& traj, const Eigen::VectorXd& y_star);

// ============================================================================
// Empirical multiplier audit
// ============================================================================
// Direct quadrature check of the filtered inequality
//     int_0^T e^{2 alpha t} (H p'q - p'w_1 - q'w_2) dt >= 0
// on shifted trajectory signals ytilde = y - y_star, utilde = u (the input
// offset vanishes at a minimizer), with
//     p = utilde - m ytilde,   q = L ytilde - utilde,
//     w_1(t) = int_0^t e^{-2 alpha (t-s)} h(t-s)  q(s) ds,
//     w_2(t) = int_0^t e^{-2 alpha (t-s)} h(s-t)  p(s) ds,
// and of the companion kernel inequality
//     int_0^T e^{2 alpha t} p(t)' (q(t) - beta(tau) q_T(t - tau)) dt >= 0,
// beta(tau) = min{1, e^{-2 alpha tau}}, q_T the zero extension of q outside
// [0, T], over a 21-point tau grid spanning [-T, 2T] per horizon.  All
// integrals and convolutions use the trapezoid rule on the trajectory grid;
// horizons snap to that grid.  The rate weight comes from tpl.cfg.alpha.
//
// The (ytilde, utilde) pair is spot-checked against the sector before any
// quadrature; a violating pair is rejected with std::invalid_argument.

struct ZfAuditResult {
    double min_integral = 0.0;  // min over the T grid of the filtered inequality
    double worst_T = 0.0;
    double min_lemma = 0.0;  // min over (T, tau) of the kernel inequality
    double worst_lemma_T = 0.0;
    double worst_lemma_tau = 0.0;
    double energy = 0.0;  // int e^{2 alpha t} (|p|^2 + |q|^2) dt, largest horizon
};

[[nodiscard]] ZfAuditResult empirical_zf_check(const Trajectory& traj,
                                               const Eigen::VectorXd& y_star, double m, double L,
                                               const PTemplate& tpl, const PValues& values,
                                               const std::vector<double>& T_grid);

// ============================================================================
// Minimizer characterizations
// ============================================================================
// For a claimed equilibrium z (|grad f(z)| <= tol, else rejected with
// std::invalid_argument), reports which special-case characterization
// applies and whether it holds:
//   consensus (r = 0):       z = 1_N kron y_opt
//   single informed agent i: z_j = y_opt + (r_j - r_i)
//   quadratic psi:           mean of informed blocks equals y_opt
//   radially symmetric psi:  y_opt lies in the convex hull of informed blocks
// The hull test solves min |Z theta - y_opt| over the simplex (Frank-Wolfe
// with a duality-gap certificate).

struct MinimizerReport {
    double grad_norm = 0.0;
    bool consensus_applies = false;
    bool consensus_holds = false;
    bool single_informed_applies = false;
    bool single_informed_holds = false;
    bool quadratic_applies = false;
    bool quadratic_holds = false;
    bool radial_applies = false;
    bool radial_holds = false;
    std::string summary;  // one line per applicable characterization
};

[[nodiscard]] MinimizerReport minimizer_checks(const CompositePotential& pot,
                                               const Eigen::VectorXd& z, double tol = 1e-6);

}  // namespace iqcrate
