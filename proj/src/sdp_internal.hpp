#pragma once

// Internal lowering of an SdpProblem to the margin (slack-maximization) form
// shared by the interior-point solver and the SDPA exporter.  Not installed.

#include "iqcrate/sdp.hpp"

#include <string>
#include <vector>

namespace iqcrate::detail {

// One dense affine PSD block  F0 + sum_k u_k F_k >= 0  in the reduced
// variables u = (z', t) where t (the last index) is the common slack.
struct DenseBlock {
    Eigen::MatrixXd F0;
    std::vector<std::pair<int, Eigen::MatrixXd>> terms;
    std::string name;
};

// One scalar row  f0 + sum_k u_k c_k >= 0 of the shared diagonal block.
struct DiagRow {
    double f0 = 0.0;
    std::vector<std::pair<int, double>> terms;
    std::string name;
};

struct Lowered {
    int nvars = 0;  // reduced variables including the slack (index nvars-1)
    std::vector<DenseBlock> dense;
    std::vector<DiagRow> rows;

    // Recovers the original flat vector:  x = x0 + N * (z' ./ dscale).
    Eigen::VectorXd x0;
    Eigen::MatrixXd N;       // empty when the wiring is the identity
    Eigen::VectorXd dscale;  // per-z' column scaling
    Eigen::VectorXd box_radius;  // per-z' bound used for the dual slack bound
    bool direct = true;          // true: x = z' ./ dscale (no equality elimination)

    bool fixed_point = false;    // equalities pin every variable; check x0 only
    std::string abort_reason;    // nonempty: equalities are inconsistent

    [[nodiscard]] Eigen::VectorXd recover(const Eigen::VectorXd& u) const;
};

[[nodiscard]] Lowered lower(const SdpProblem& p, double box_radius);

}  // namespace iqcrate::detail
