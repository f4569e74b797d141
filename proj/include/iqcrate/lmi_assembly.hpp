#pragma once

#include "iqcrate/sdp.hpp"
#include "iqcrate/state_space.hpp"
#include "iqcrate/zf_multiplier.hpp"

#include <Eigen/Dense>

#include <vector>

namespace iqcrate {

// ============================================================================
// Rate LMIs
// ============================================================================
// The analysis conditions are assembled as feasibility problems over a
// storage matrix X (posed strictly positive definite via the delta margin)
// and the multiplier parameters (H, c, a).  The closed maps are formed as
//     (A0, B0, C0, D0) = series(Pi, [G; I])
// so the LMI couples the plant state with the multiplier filter state.

struct AssembledRateLmi {
    SdpProblem problem;
    MatVarId X;              // storage matrix, one per problem (shared by LPV vertices)
    VarId H = -1;            // multiplier parameters, ordered (H, c..., a...)
    std::vector<VarId> c;
    std::vector<VarId> a;
    MultiplierRealization mult;
    StateSpace closed;       // the composed (A0,B0,C0,D0) (first vertex for LPV)
    double alpha = 0.0;
    double delta = 0.0;
};

// Single-agent (or single-channel-group) rate LMI: G is the agent plant as a
// scalar channel (lifted d-fold internally) or already d x d.
[[nodiscard]] AssembledRateLmi assemble_rate_lmi(const StateSpace& G, double m, double L, int d,
                                                 double alpha, const ZFConfig& cfg);

// Full-network LMI: N copies of the agent plant against the stacked
// multiplier with P kron I_{Nd}.
[[nodiscard]] AssembledRateLmi assemble_rate_lmi_full(const StateSpace& G, int N, int d, double m,
                                                      double L, double alpha, const ZFConfig& cfg);

// LPV vertex family: one shared storage X and one shared multiplier, with the
// rate LMI imposed at every vertex realization.  Soundness over the parameter
// polytope rests on affine parameter dependence, which is the caller's claim;
// for non-affine scheduling a grid of vertices is a heuristic, not a proof.
[[nodiscard]] AssembledRateLmi assemble_rate_lmi_lpv(const std::vector<StateSpace>& vertices,
                                                     double m, double L, int d, double alpha,
                                                     const ZFConfig& cfg);

// Multiplier parameter values extracted from a feasible assignment.
[[nodiscard]] PValues multiplier_values(const AssembledRateLmi& lmi, const Assignment& a);

// Storage matrix extracted from a feasible assignment.
[[nodiscard]] Eigen::MatrixXd storage_matrix(const AssembledRateLmi& lmi, const Assignment& a);

// ============================================================================
// Flocking analysis LMI
// ============================================================================

struct FlockingModel {
    Eigen::MatrixXd A;    // vehicle dynamics, n_x x n_x, Hurwitz
    Eigen::MatrixXd B_q;  // reference input, n_x x d
    Eigen::MatrixXd B_p;  // reference-velocity input, n_x x d
    Eigen::MatrixXd C;    // position output, d x n_x
    double k_p = 1.0;     // pre-filter position gain, > 0
    double k_d = 1.0;     // pre-filter damping gain, >= 0
    int d = 1;            // spatial dimension
    Eigen::Matrix2d M10;  // IQC matrix for the gradient channel
    Eigen::Matrix2d M20;  // IQC matrix for the tracking-error channel
    double c1 = 1.0;      // set bound: f(q) <= c1 keeps the output in S
    double c2 = 1.0;      // set bound: ||y - q||^2 <= c2 keeps the output in S

    [[nodiscard]] int n_x() const { return static_cast<int>(A.rows()); }

    // Tracking assumption, shape consistency, symmetric M; throws on failure.
    void validate() const;
};

struct AssembledFlockingLmi {
    SdpProblem problem;
    MatVarId R;       // storage remainder, (n_x + 2d) PSD
    MatVarId Q;       // tracking-error weight, n_x, posed > 0
    VarId mu = -1;    // gradient-potential weight, > 0
    VarId eps = -1;   // strict (p,p) damping, > 0
    VarId lam1 = -1;  // IQC channel weights, >= 0
    VarId lam2 = -1;
    FlockingModel model;
    double delta = 0.0;
};

[[nodiscard]] AssembledFlockingLmi assemble_flocking_lmi(const FlockingModel& model);

// The storage matrix X0 = R + [[Q, Q A^{-1} B_q, 0], [*, B_q' A^{-T} Q A^{-1} B_q, 0],
// [0, 0, I_d]] evaluated at a feasible assignment.
[[nodiscard]] Eigen::MatrixXd flocking_storage_matrix(const AssembledFlockingLmi& lmi,
                                                      const Assignment& a);

// Storage function V_s(x, q, p) = sum_i (eta_i - eta_i*)' X0 (eta_i - eta_i*)
//   + 2 mu (f(q) - f_min),
// with per-agent equilibrium x* = -A^{-1} B_q y*, q* = y*, p* = 0.  States may
// be stacked over N agents (sizes N n_x / N d); f_value_gap = f(q) - f_min is
// supplied by the caller who owns the potential.
[[nodiscard]] double storage_value(const AssembledFlockingLmi& lmi, const Assignment& solution,
                                   const Eigen::VectorXd& x, const Eigen::VectorXd& q,
                                   const Eigen::VectorXd& p, const Eigen::VectorXd& y_star,
                                   double f_value_gap);

// Right-hand side of the small-initial-condition test
//   V_s <= min{ 2 c1 mu, c2 lambda_min(Q) / ||C||^2 }     (spectral norm of C).
[[nodiscard]] double ic_small_bound(const AssembledFlockingLmi& lmi, const Assignment& solution);

}  // namespace iqcrate
