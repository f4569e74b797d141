#include "doctest.h"

#include "iqcrate/lmi_assembly.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace iqcrate;

namespace {

// y' = a y - u, so the loop u = grad f(y) with f' in [m, L] is the plant
// 1/(s - a) driven through the gradient sign convention.
StateSpace gradient_first_order(double a) {
    return StateSpace(a * Eigen::MatrixXd::Ones(1, 1), -Eigen::MatrixXd::Ones(1, 1),
                      Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Zero(1, 1));
}

StateSpace gradient_integrator() { return gradient_first_order(0.0); }

// Double integrator with viscous damping rho, position output.
StateSpace damped_double_integrator(double rho) {
    Eigen::MatrixXd A(2, 2), B(2, 1), C(1, 2), D(1, 1);
    A << 0.0, 1.0, 0.0, -rho;
    B << 0.0, -1.0;
    C << 1.0, 0.0;
    D << 0.0;
    return StateSpace(A, B, C, D);
}

ZFConfig cc_config(double alpha) { return ZFConfig{0, 1.0, alpha, MultiplierClass::CC}; }

SolveStatus rate_status(const StateSpace& G, double m, double L, double alpha,
                        const ZFConfig& cfg) {
    const AssembledRateLmi lmi = assemble_rate_lmi(G, m, L, 1, alpha, cfg);
    return solve_feasibility(lmi.problem).status;
}

// Single-integrator vehicles in dimension d behind a PD pre-filter.
FlockingModel surrogate_vehicle(int d, double k_d) {
    FlockingModel m;
    m.A = -Eigen::MatrixXd::Identity(d, d);
    m.B_q = Eigen::MatrixXd::Identity(d, d);
    m.B_p = Eigen::MatrixXd::Zero(d, d);
    m.C = Eigen::MatrixXd::Identity(d, d);
    m.k_p = 1.0;
    m.k_d = k_d;
    m.d = d;
    m.M10 << 9.0, 0.0, 0.0, -1.0;
    m.M20 << 9.0, 0.0, 0.0, -1.0;
    m.c1 = 1.0;
    m.c2 = 1.0;
    return m;
}

// Two-state vehicle with a non-trivial output map (exercises the tracking
// assumption and the spectral norm in the small-initial-condition bound).
FlockingModel two_state_vehicle(double k_d) {
    FlockingModel m;
    m.A.resize(2, 2);
    m.A << -1.0, 0.0, 0.0, -2.0;
    m.B_q.resize(2, 1);
    m.B_q << 1.0, 0.0;
    m.B_p = Eigen::MatrixXd::Zero(2, 1);
    m.C.resize(1, 2);
    m.C << 1.0, 0.5;
    m.k_p = 1.0;
    m.k_d = k_d;
    m.d = 1;
    m.M10 << 9.0, 0.0, 0.0, -1.0;
    m.M20 << 9.0, 0.0, 0.0, -1.0;
    m.c1 = 0.7;
    m.c2 = 1.3;
    return m;
}

double max_eig(const Eigen::MatrixXd& M) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().maxCoeff();
}

double min_eig(const Eigen::MatrixXd& M) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().minCoeff();
}

}  // namespace

// ============================================================================
// Rate LMI: argument validation
// ============================================================================

TEST_CASE("rate LMI rejects inconsistent arguments") {
    const StateSpace G = gradient_integrator();
    const ZFConfig cfg = cc_config(0.0);

    CHECK_THROWS_AS(assemble_rate_lmi(G, 1.0, 1.0, 0, 0.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(assemble_rate_lmi(G, 0.0, 1.0, 1, 0.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(assemble_rate_lmi(G, 2.0, 1.0, 1, 0.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(assemble_rate_lmi(G, 1.0, 1.0, 1, -0.5, cc_config(-0.5)),
                    std::invalid_argument);

    // A 2x2 plant cannot serve a 3-channel loop.
    const StateSpace G2(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2),
                        Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2));
    CHECK_THROWS_AS(assemble_rate_lmi(G2, 1.0, 1.0, 3, 0.0, cfg), std::invalid_argument);

    CHECK_THROWS_AS(assemble_rate_lmi_full(G, 0, 1, 1.0, 1.0, 0.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(assemble_rate_lmi_lpv({}, 1.0, 1.0, 1, 0.0, cfg), std::invalid_argument);

    // LPV vertices must share one state dimension (the storage is common).
    const std::vector<StateSpace> mixed{gradient_integrator(), damped_double_integrator(1.0)};
    CHECK_THROWS_AS(assemble_rate_lmi_lpv(mixed, 1.0, 1.0, 1, 0.0, cfg), std::invalid_argument);
}

// ============================================================================
// Rate LMI: known feasibility boundaries
// ============================================================================

TEST_CASE("integrator loop certifies every rate below one and no rate above") {
    const StateSpace G = gradient_integrator();
    for (double alpha : {0.0, 0.5, 0.9, 0.99})
        CHECK(rate_status(G, 1.0, 1.0, alpha, cc_config(alpha)) == SolveStatus::Feasible);
    for (double alpha : {1.01, 1.5})
        CHECK(rate_status(G, 1.0, 1.0, alpha, cc_config(alpha)) == SolveStatus::Infeasible);
}

TEST_CASE("linear-field loops are certified exactly at the slowest closed-loop mode") {
    // With m = L the loop is linear; 1/(s+2) under unit feedback has its pole
    // at -3, and 1/(s+1) at -2.  The LMI should resolve both boundaries.
    const StateSpace lag2 = gradient_first_order(-2.0);
    CHECK(rate_status(lag2, 1.0, 1.0, 2.95, cc_config(2.95)) == SolveStatus::Feasible);
    CHECK(rate_status(lag2, 1.0, 1.0, 3.05, cc_config(3.05)) == SolveStatus::Infeasible);

    const StateSpace lag1 = gradient_first_order(-1.0);
    CHECK(rate_status(lag1, 1.0, 1.0, 1.95, cc_config(1.95)) == SolveStatus::Feasible);
    CHECK(rate_status(lag1, 1.0, 1.0, 2.05, cc_config(2.05)) == SolveStatus::Infeasible);
}

TEST_CASE("an unstable plant under a weak field has no certificate") {
    const StateSpace G = gradient_first_order(1.0);  // 1/(s-1)
    CHECK(rate_status(G, 0.01, 0.01, 0.0, cc_config(0.0)) == SolveStatus::Infeasible);
}

TEST_CASE("feasibility survives a state-space similarity transform") {
    const StateSpace G = gradient_first_order(-1.0);
    const double t = 3.7;
    const StateSpace Gt(G.A, G.B / t, G.C * t, G.D);
    for (double alpha : {1.95, 2.05}) {
        const ZFConfig cfg = cc_config(alpha);
        CHECK(rate_status(G, 1.0, 1.0, alpha, cfg) == rate_status(Gt, 1.0, 1.0, alpha, cfg));
    }
}

TEST_CASE("certified rates are monotone in alpha") {
    // If the loop certifies some rate, every smaller rate is certified too.
    // The slow sector edge m = 0.5 places the boundary at 1.5 exactly.
    const StateSpace G = gradient_first_order(-1.0);
    REQUIRE(rate_status(G, 0.5, 2.0, 1.4, cc_config(1.4)) == SolveStatus::Feasible);
    for (double alpha : {0.0, 0.4, 0.8, 1.2})
        CHECK(rate_status(G, 0.5, 2.0, alpha, cc_config(alpha)) == SolveStatus::Feasible);
    CHECK(rate_status(G, 0.5, 2.0, 1.5, cc_config(1.5)) == SolveStatus::Infeasible);
}

// ============================================================================
// Rate LMI: multiplier and storage extraction
// ============================================================================

TEST_CASE("a feasible assignment yields a valid multiplier and storage") {
    const StateSpace G = gradient_first_order(-1.0);
    const ZFConfig cfg{1, 2.0, 0.3, MultiplierClass::Noncausal};
    const AssembledRateLmi lmi = assemble_rate_lmi(G, 0.5, 2.0, 1, 0.3, cfg);
    const FeasibilityResult r = solve_feasibility(lmi.problem);
    REQUIRE(r.status == SolveStatus::Feasible);

    const PValues pv = multiplier_values(lmi, r.assignment);
    REQUIRE(pv.c.size() == 1);
    REQUIRE(pv.a.size() == 1);
    CHECK(pv.H >= 0.0);
    CHECK(pv.c[0] >= -1e-9);
    CHECK(pv.a[0] >= -1e-9);
    // The kernel mass constraint transfers to the extracted values.
    const double budget = pv.c[0] / cfg.lambda + pv.a[0] / cfg.lambda;
    CHECK(budget <= pv.H + 1e-6);

    const Eigen::MatrixXd X = storage_matrix(lmi, r.assignment);
    // One plant state plus 2 nu d filter states.
    REQUIRE(X.rows() == 3);
    CHECK((X - X.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(min_eig(X) > 0.0);
    CHECK(X.trace() == doctest::Approx(3.0));

    CHECK(lmi.closed.states() == 3);
    CHECK(lmi.closed.inputs() == 1);  // the loop input u~ alone drives the closed map
}

// ============================================================================
// Rate LMI: network assembly
// ============================================================================

TEST_CASE("the full-network LMI agrees with the single-agent one for copies") {
    // N identical agents against a common sector: the network condition holds
    // exactly when the per-agent condition does.
    const StateSpace G = gradient_integrator();
    for (int N : {1, 2, 3}) {
        for (double alpha : {0.9, 1.01}) {
            const ZFConfig cfg = cc_config(alpha);
            const AssembledRateLmi full = assemble_rate_lmi_full(G, N, 1, 1.0, 1.0, alpha, cfg);
            const AssembledRateLmi single = assemble_rate_lmi(G, 1.0, 1.0, 1, alpha, cfg);
            CHECK(solve_feasibility(full.problem).status ==
                  solve_feasibility(single.problem).status);
        }
    }
}

TEST_CASE("the full-network LMI scales its dimensions with the network size") {
    const StateSpace G = gradient_integrator();
    const ZFConfig cfg{1, 1.0, 0.0, MultiplierClass::Causal};
    const AssembledRateLmi lmi = assemble_rate_lmi_full(G, 3, 1, 0.5, 2.0, 0.0, cfg);
    // 3 plant states + 2 nu (N d) filter states, driven by the stacked u~.
    CHECK(lmi.closed.states() == 3 + 2 * 1 * 3);
    CHECK(lmi.closed.inputs() == 3);
}

// ============================================================================
// Rate LMI: parameter-varying families
// ============================================================================

TEST_CASE("a single-vertex family reduces to the plain LMI") {
    const StateSpace v = damped_double_integrator(0.8);
    for (double alpha : {0.35, 0.45}) {
        const ZFConfig cfg = cc_config(alpha);
        const AssembledRateLmi fam = assemble_rate_lmi_lpv({v}, 1.0, 1.0, 1, alpha, cfg);
        const AssembledRateLmi one = assemble_rate_lmi(v, 1.0, 1.0, 1, alpha, cfg);
        CHECK(solve_feasibility(fam.problem).status == solve_feasibility(one.problem).status);
    }
}

TEST_CASE("a damping-varying double integrator certifies a common rate") {
    // Vertices rho in {0.8, 1.2}: each vertex alone allows rho/2; the common
    // certificate reaches 0.35 but not 0.45.
    const std::vector<StateSpace> verts{damped_double_integrator(0.8),
                                        damped_double_integrator(1.2)};
    const AssembledRateLmi lo = assemble_rate_lmi_lpv(verts, 1.0, 1.0, 1, 0.35, cc_config(0.35));
    CHECK(solve_feasibility(lo.problem).status == SolveStatus::Feasible);
    const AssembledRateLmi hi = assemble_rate_lmi_lpv(verts, 1.0, 1.0, 1, 0.45, cc_config(0.45));
    CHECK(solve_feasibility(hi.problem).status == SolveStatus::Infeasible);

    // The shared certificate can never beat a vertex considered alone.
    const AssembledRateLmi vert =
        assemble_rate_lmi(damped_double_integrator(1.2), 1.0, 1.0, 1, 0.35, cc_config(0.35));
    CHECK(solve_feasibility(vert.problem).status == SolveStatus::Feasible);
}

TEST_CASE("vertex LMIs share one storage and one multiplier") {
    const std::vector<StateSpace> verts{damped_double_integrator(0.8),
                                        damped_double_integrator(1.2)};
    const ZFConfig cfg{1, 1.0, 0.1, MultiplierClass::Causal};
    const AssembledRateLmi lmi = assemble_rate_lmi_lpv(verts, 1.0, 1.0, 1, 0.1, cfg);
    const FeasibilityResult r = solve_feasibility(lmi.problem);
    REQUIRE(r.status == SolveStatus::Feasible);

    // One X (posed over the common closed dimensions) and one (H, c) pair
    // regardless of the number of vertices; the assignment must satisfy all
    // vertex blocks simultaneously.
    const Eigen::MatrixXd X = storage_matrix(lmi, r.assignment);
    CHECK(X.rows() == lmi.closed.states());
    const VerificationReport rep = verify_solution(lmi.problem, r.assignment, 1e-7);
    int rate_blocks = 0;
    for (const auto& item : rep.items)
        if (item.name.rfind("rate", 0) == 0) ++rate_blocks;
    CHECK(rate_blocks == 2);
}

// ============================================================================
// Flocking LMI: model validation
// ============================================================================

TEST_CASE("flocking model validation rejects malformed data") {
    FlockingModel base = surrogate_vehicle(1, 3.0);
    CHECK_NOTHROW(base.validate());

    FlockingModel bad = base;
    bad.B_q = Eigen::MatrixXd::Zero(2, 1);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = base;
    bad.k_p = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = base;
    bad.k_d = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = base;
    bad.M10 << 1.0, 2.0, 3.0, 4.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = base;
    bad.c1 = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    // Steady-state tracking must have unit gain: C (-A)^{-1} B_q = I.
    bad = base;
    bad.A = -2.0 * Eigen::MatrixXd::Identity(1, 1);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

// ============================================================================
// Flocking LMI: damping threshold
// ============================================================================

TEST_CASE("the flocking certificate needs enough damping") {
    for (int d : {1, 2}) {
        for (double k_d : {0.0, 1.0, 2.0}) {
            const AssembledFlockingLmi lmi = assemble_flocking_lmi(surrogate_vehicle(d, k_d));
            CHECK(solve_feasibility(lmi.problem).status == SolveStatus::Infeasible);
        }
        for (double k_d : {3.0, 5.0, 20.0}) {
            const AssembledFlockingLmi lmi = assemble_flocking_lmi(surrogate_vehicle(d, k_d));
            CHECK(solve_feasibility(lmi.problem).status == SolveStatus::Feasible);
        }
    }
}

TEST_CASE("the two-state vehicle shows the same damping threshold behavior") {
    CHECK(solve_feasibility(assemble_flocking_lmi(two_state_vehicle(2.0)).problem).status ==
          SolveStatus::Infeasible);
    CHECK(solve_feasibility(assemble_flocking_lmi(two_state_vehicle(4.0)).problem).status ==
          SolveStatus::Feasible);
}

TEST_CASE("both IQC channels are necessary for the flocking certificate") {
    AssembledFlockingLmi lmi = assemble_flocking_lmi(surrogate_vehicle(1, 4.0));
    lmi.problem.add_linear({{{lmi.lam1, 1.0}}, 0.0, LinSense::Eq, "pin lam1"});
    lmi.problem.add_linear({{{lmi.lam2, 1.0}}, 0.0, LinSense::Eq, "pin lam2"});
    CHECK(solve_feasibility(lmi.problem).status == SolveStatus::Infeasible);
}

TEST_CASE("the dissipation matrix is negative semidefinite at the solution") {
    const AssembledFlockingLmi lmi = assemble_flocking_lmi(two_state_vehicle(4.0));
    const FeasibilityResult r = solve_feasibility(lmi.problem);
    REQUIRE(r.status == SolveStatus::Feasible);
    for (const auto& con : lmi.problem.lmis()) {
        if (con.name != "Z") continue;
        Eigen::MatrixXd Z = con.expr.constant;
        for (const auto& [k, F] : con.expr.coeff) Z += r.assignment.x[k] * F;
        CHECK(max_eig(Z) <= 1e-7);
    }
}

// ============================================================================
// Flocking LMI: storage function
// ============================================================================

TEST_CASE("the storage function vanishes at equilibrium and is nonnegative") {
    const FlockingModel model = two_state_vehicle(4.0);
    const AssembledFlockingLmi lmi = assemble_flocking_lmi(model);
    const FeasibilityResult r = solve_feasibility(lmi.problem);
    REQUIRE(r.status == SolveStatus::Feasible);

    const Eigen::VectorXd y_star = Eigen::VectorXd::Constant(1, 0.7);
    const Eigen::VectorXd x_star = -model.A.inverse() * model.B_q * y_star;
    CHECK(storage_value(lmi, r.assignment, x_star, y_star, Eigen::VectorXd::Zero(1), y_star,
                        0.0) == doctest::Approx(0.0).epsilon(1e-12));

    std::mt19937 rng(41);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd x(2), q(1), p(1);
        for (int i = 0; i < 2; ++i) x[i] = normal(rng);
        q[0] = normal(rng);
        p[0] = normal(rng);
        const double gap = std::abs(normal(rng));
        CHECK(storage_value(lmi, r.assignment, x, q, p, y_star, gap) >= -1e-10);
    }
}

TEST_CASE("the storage splits into a quadratic part and a potential part") {
    const FlockingModel model = two_state_vehicle(4.0);
    const AssembledFlockingLmi lmi = assemble_flocking_lmi(model);
    const FeasibilityResult r = solve_feasibility(lmi.problem);
    REQUIRE(r.status == SolveStatus::Feasible);

    const double mu = r.assignment.x[lmi.mu];
    Eigen::VectorXd x(2), q(1), p(1), y_star(1);
    x << 0.3, -0.2;
    q << 1.1;
    p << -0.4;
    y_star << 0.5;
    const double without = storage_value(lmi, r.assignment, x, q, p, y_star, 0.0);
    const double with = storage_value(lmi, r.assignment, x, q, p, y_star, 0.9);
    CHECK(with - without == doctest::Approx(2.0 * mu * 0.9));
}

TEST_CASE("stacked agents accumulate storage additively") {
    const FlockingModel model = surrogate_vehicle(1, 4.0);
    const AssembledFlockingLmi lmi = assemble_flocking_lmi(model);
    const FeasibilityResult r = solve_feasibility(lmi.problem);
    REQUIRE(r.status == SolveStatus::Feasible);

    std::mt19937 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int N = 3;
    Eigen::VectorXd x(N), q(N), p(N), y_star(N);
    for (int i = 0; i < N; ++i) {
        x[i] = normal(rng);
        q[i] = normal(rng);
        p[i] = normal(rng);
        y_star[i] = normal(rng);
    }
    double sum = 0.0;
    for (int i = 0; i < N; ++i)
        sum += storage_value(lmi, r.assignment, x.segment(i, 1), q.segment(i, 1),
                             p.segment(i, 1), y_star.segment(i, 1), 0.0);
    CHECK(storage_value(lmi, r.assignment, x, q, p, y_star, 0.0) ==
          doctest::Approx(sum).epsilon(1e-10));
}

TEST_CASE("the storage matrix combines the remainder, the weight, and the damping block") {
    const FlockingModel model = two_state_vehicle(4.0);
    const AssembledFlockingLmi lmi = assemble_flocking_lmi(model);
    const FeasibilityResult r = solve_feasibility(lmi.problem);
    REQUIRE(r.status == SolveStatus::Feasible);

    const Eigen::MatrixXd X0 = flocking_storage_matrix(lmi, r.assignment);
    const int n = model.n_x();
    const int d = model.d;
    REQUIRE(X0.rows() == n + 2 * d);
    CHECK((X0 - X0.transpose()).cwiseAbs().maxCoeff() < 1e-10);

    const Eigen::MatrixXd R = r.assignment.matrix(lmi.problem, lmi.R);
    const Eigen::MatrixXd Q = r.assignment.matrix(lmi.problem, lmi.Q);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n + 2 * d);
    W.leftCols(n) = Eigen::MatrixXd::Identity(n, n);
    W.middleCols(n, d) = model.A.inverse() * model.B_q;
    Eigen::MatrixXd expected = R + W.transpose() * Q * W;
    expected.block(n + d, n + d, d, d) += Eigen::MatrixXd::Identity(d, d);
    CHECK((X0 - expected).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(min_eig(X0) > 0.0);
}

TEST_CASE("the small-initial-condition bound matches its closed form") {
    const FlockingModel model = two_state_vehicle(4.0);
    const AssembledFlockingLmi lmi = assemble_flocking_lmi(model);
    const FeasibilityResult r = solve_feasibility(lmi.problem);
    REQUIRE(r.status == SolveStatus::Feasible);

    const double mu = r.assignment.x[lmi.mu];
    const Eigen::MatrixXd Q = r.assignment.matrix(lmi.problem, lmi.Q);
    const double c_norm = model.C.jacobiSvd().singularValues()(0);
    const double expected =
        std::min(2.0 * model.c1 * mu, model.c2 * min_eig(Q) / (c_norm * c_norm));
    const double bound = ic_small_bound(lmi, r.assignment);
    CHECK(bound == doctest::Approx(expected));
    CHECK(bound > 0.0);
}
