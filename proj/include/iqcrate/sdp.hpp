#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace iqcrate {

// ============================================================================
// Semidefinite feasibility problems
// ============================================================================
// A problem is a registry of scalar decision variables (matrix variables are
// flattened into their upper-triangle entries) together with affine symmetric
// matrix constraints.  Strict inequalities are encoded with an explicit
// margin delta:  "expr < 0" becomes expr <= -delta I and "X > 0" becomes
// X >= delta I.  Solving maximizes a common slack; a returned feasible
// assignment is always re-verified independently of the solver.

using VarId = int;

struct MatVarId {
    int idx = -1;
};

enum class VarSign { Free, NonNegative };
enum class MatCone { Free, Psd };
enum class LmiSense { Leq, Geq };  // expr <= -delta I   /   expr >= +delta I
enum class LinSense { Geq, Eq };   // a'x + b >= 0       /   a'x + b == 0

// Affine symmetric-matrix expression: constant + sum_v x_v * coeff[v].
struct AffineMatrix {
    Eigen::Index dim = 0;
    Eigen::MatrixXd constant;
    std::map<VarId, Eigen::MatrixXd> coeff;

    AffineMatrix() = default;
    explicit AffineMatrix(Eigen::Index n)
        : dim(n), constant(Eigen::MatrixXd::Zero(n, n)) {}

    // Accumulates M onto the coefficient of variable v (M must be dim x dim).
    void add(VarId v, const Eigen::MatrixXd& M);

    // Numeric evaluation at a full flat assignment vector.
    [[nodiscard]] Eigen::MatrixXd eval(const Eigen::VectorXd& x) const;
};

struct LinearConstraint {
    std::vector<std::pair<VarId, double>> terms;
    double constant = 0.0;
    LinSense sense = LinSense::Geq;
    std::string name;

    [[nodiscard]] double eval(const Eigen::VectorXd& x) const;
};

struct LmiConstraint {
    AffineMatrix expr;
    LmiSense sense = LmiSense::Leq;
    double delta = 0.0;
    std::string name;
};

class SdpProblem {
public:
    VarId add_scalar(std::string name, VarSign sign = VarSign::Free);
    MatVarId add_symmetric(std::string name, int n, MatCone cone = MatCone::Free);

    // Flat variable id of entry (r, s) of a matrix variable (order-free).
    [[nodiscard]] VarId entry(MatVarId X, int r, int s) const;
    [[nodiscard]] int matrix_dim(MatVarId X) const;

    // Calls fn(VarId, E) for every upper-triangle entry (r <= s) of X with the
    // symmetric basis matrix E (unit diagonal entry, or symmetric pair of
    // unit off-diagonal entries) so that X = sum x_{rs} E_{rs}.
    template <typename F>
    void for_each_basis(MatVarId X, F&& fn) const {
        const auto& mv = matrix_var(X.idx);
        for (int r = 0; r < mv.n; ++r)
            for (int s = r; s < mv.n; ++s) {
                Eigen::MatrixXd E = Eigen::MatrixXd::Zero(mv.n, mv.n);
                E(r, s) = E(s, r) = 1.0;
                fn(entry(X, r, s), E);
            }
    }

    void add_lmi(AffineMatrix expr, LmiSense sense, double delta, std::string name);
    void add_linear(LinearConstraint lc);

    // Convenience: pins a variable to a constant via an equality row.
    void pin(VarId v, double value, std::string name = "pin");

    [[nodiscard]] int num_vars() const { return static_cast<int>(vars_.size()); }
    [[nodiscard]] const std::string& var_name(VarId v) const { return vars_[static_cast<std::size_t>(v)].name; }
    [[nodiscard]] VarSign var_sign(VarId v) const { return vars_[static_cast<std::size_t>(v)].sign; }

    struct MatrixVarInfo {
        std::string name;
        int n = 0;
        MatCone cone = MatCone::Free;
        VarId base = 0;  // flat id of entry (0,0); upper triangle row-major
    };

    [[nodiscard]] const std::vector<MatrixVarInfo>& matrix_vars() const { return mats_; }
    [[nodiscard]] const std::vector<LmiConstraint>& lmis() const { return lmis_; }
    [[nodiscard]] const std::vector<LinearConstraint>& linear() const { return lins_; }

private:
    struct VarInfo {
        std::string name;
        VarSign sign = VarSign::Free;
    };

    [[nodiscard]] const MatrixVarInfo& matrix_var(int idx) const;

    std::vector<VarInfo> vars_;
    std::vector<MatrixVarInfo> mats_;
    std::vector<LmiConstraint> lmis_;
    std::vector<LinearConstraint> lins_;
};

// Values for every flat variable of a problem.
struct Assignment {
    Eigen::VectorXd x;

    [[nodiscard]] double scalar(VarId v) const { return x[v]; }
    [[nodiscard]] Eigen::MatrixXd matrix(const SdpProblem& p, MatVarId X) const;
};

// ============================================================================
// Verification
// ============================================================================
// Margins are signed satisfaction measures after the delta shift: for
// "expr <= -delta I" the margin is -delta - lambda_max(expr); for cones and
// ">=" senses it is the distance above the required bound.  A constraint is
// satisfied when its margin >= -tol.

struct VerificationReport {
    struct Item {
        std::string name;
        double margin = 0.0;
    };
    std::vector<Item> items;
    double worst_margin = 0.0;

    [[nodiscard]] bool passed(double tol) const { return worst_margin >= -tol; }
};

[[nodiscard]] VerificationReport verify_solution(const SdpProblem& p, const Assignment& a,
                                                 double tol = 1e-9);

// ============================================================================
// Solving
// ============================================================================

enum class SolveStatus { Feasible, Infeasible, Inconclusive };

[[nodiscard]] std::string to_string(SolveStatus s);

struct SolveOptions {
    // Acceptance tolerance of the independent verification.  Must stay below
    // the constraint delta margin (default 1e-8): a point violating some
    // constraint by about delta is what an infeasible-but-homogeneous problem
    // can always offer (e.g. with the multiplier collapsed to zero), and it
    // must be rejected, not absorbed.  Kept disjoint from
    // infeasible_bound_stop so the two verdicts cannot race.
    double verify_tol = 1e-9;
    int max_iterations = 60;
    double box_radius = 1e6;    // variable bound making the slack problem bounded
    double feasible_margin_stop = 1e-7;   // early exit once true margins clear this
    double infeasible_bound_stop = 1e-9;  // early exit once the slack bound is below -this
    bool dump_sdpa = false;
    std::string sdpa_path;
    bool trace = false;  // per-iteration diagnostics on stderr
};

struct SolverStats {
    int iterations = 0;
    double solve_seconds = 0.0;
    double slack = 0.0;       // best common margin found by the interior point
    double slack_bound = 0.0; // certified upper bound on the achievable margin
    std::string note;
};

struct FeasibilityResult {
    SolveStatus status = SolveStatus::Inconclusive;
    Assignment assignment;      // populated when status == Feasible
    double max_violation = 0.0; // from independent verification (0 when clean)
    SolverStats stats;
};

// Decides feasibility by maximizing a common slack over all constraints with
// a primal-dual interior-point method.  Feasible is reported only when the
// returned assignment independently verifies; Infeasible only when a dual
// certificate bounds the slack below zero (within the variable box).
[[nodiscard]] FeasibilityResult solve_feasibility(const SdpProblem& p,
                                                  const SolveOptions& opts = {});

// Writes the slack-maximization form of the problem as a sparse SDPA file.
void write_sdpa(const SdpProblem& p, const std::string& path, const SolveOptions& opts = {});

// Default strictness margin for "< 0" / "> 0" constraints; reads
// IQCRATE_DELTA from the environment, falling back to 1e-8.
[[nodiscard]] double default_delta();

}  // namespace iqcrate
