#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace iqcrate {

// ============================================================================
// Continuous-time LTI realizations
// ============================================================================
// A StateSpace holds the quadruple (A, B, C, D) of
//     x' = A x + B u,   y = C x + D u
// with n states, m inputs and p outputs.  n = 0 (static map y = D u) is a
// valid realization and arises for the circle-criterion multiplier.

struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;

    StateSpace() = default;

    // Validates dimensional consistency and finiteness; throws
    // std::invalid_argument with the offending sizes otherwise.
    StateSpace(Eigen::MatrixXd A_in, Eigen::MatrixXd B_in,
               Eigen::MatrixXd C_in, Eigen::MatrixXd D_in);

    [[nodiscard]] Eigen::Index states() const { return A.rows(); }
    [[nodiscard]] Eigen::Index inputs() const { return B.cols(); }
    [[nodiscard]] Eigen::Index outputs() const { return C.rows(); }
};

// Static (memoryless) system y = D u.
[[nodiscard]] StateSpace static_gain(const Eigen::MatrixXd& D);

// Identity map on k channels.
[[nodiscard]] StateSpace identity_system(Eigen::Index k);

// Controllable-canonical realization of num(s)/den(s), coefficients ordered
// highest power first.  Requires deg(num) <= deg(den) and a nonzero leading
// denominator coefficient; an improper quotient is rejected.
[[nodiscard]] StateSpace from_transfer_function(const std::vector<double>& num,
                                                const std::vector<double>& den);

// Cascade: u -> inner -> outer -> y with combined state [x_inner; x_outer].
// The transfer function is the product (outer * inner).
[[nodiscard]] StateSpace series(const StateSpace& outer, const StateSpace& inner);

// Stacks the identity feed-through below the outputs of G, realizing
// u -> [G u; u] without adding states.
[[nodiscard]] StateSpace augment_with_identity(const StateSpace& G);

// k independent copies of G acting channel-wise: inputs and outputs are
// grouped per copy, so every system matrix becomes block-diagonal with k
// identical blocks (I_k Kronecker the original matrix).
[[nodiscard]] StateSpace kron_lift(const StateSpace& G, int k);

// max_i Re(eig_i(A)); -infinity for a static system (no dynamics).
[[nodiscard]] double spectral_abscissa(const StateSpace& G);

// Frequency response C (s I - A)^{-1} B + D at s = i*omega.
[[nodiscard]] Eigen::MatrixXcd frequency_response(const StateSpace& G, double omega);

// ============================================================================
// Vehicle tracking assumption
// ============================================================================
// The pre-filter construction requires a strictly stable vehicle whose DC
// gain from the reference channel is exactly the identity: -C A^{-1} B_q = I.

struct TrackingCheck {
    bool ok = false;
    double residual = 0.0;  // max-norm of (-C A^{-1} B_q - I)
    std::string reason;     // empty when ok
};

[[nodiscard]] TrackingCheck check_tracking_assumption(const Eigen::MatrixXd& A,
                                                      const Eigen::MatrixXd& B_q,
                                                      const Eigen::MatrixXd& C);

// Kronecker product helper used for network lifting (I_N Kron X and friends).
[[nodiscard]] Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

}  // namespace iqcrate
