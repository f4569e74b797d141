#pragma once

#include "iqcrate/lmi_assembly.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace iqcrate {

// Reads IQCRATE_BISECT_TOL from the environment, falling back to 1e-3.
[[nodiscard]] double default_bisect_tolerance();

struct BisectOptions {
    double tolerance = default_bisect_tolerance();  // final bracket width on alpha
    double initial_upper = 1.0;  // first upper probe, doubled until infeasible
    int max_doublings = 64;
    SolveOptions solve;  // forwarded to every probe
};

// One feasibility probe of the bisection, in chronological order.  The status
// is the raw solver verdict; Inconclusive probes are treated as infeasible
// when narrowing the bracket (the sound direction) but stay visible here.
struct BracketProbe {
    double alpha = 0.0;
    SolveStatus status = SolveStatus::Inconclusive;
};

struct RateCertificate {
    bool certified = false;
    double alpha_star = 0.0;  // largest verified rate (1/time)
    ZFConfig config;          // multiplier configuration, alpha at alpha_star
    double m = 0.0;
    double L = 0.0;
    PValues multiplier;       // feasible quadratic-form parameters at alpha_star
    Eigen::MatrixXd storage;  // storage matrix at alpha_star
    double worst_margin = 0.0;  // independent verification residual
    std::vector<BracketProbe> bracket_history;
    std::string kappa_note;  // the decay prefactor exists but is not computed
    std::string note;        // outcome commentary
};

// Produces the assembled feasibility problem for a given rate; the caller owns
// everything else (plant, sector, multiplier configuration).
using RateProblemBuilder = std::function<AssembledRateLmi(double alpha)>;

// Bisection on the rate: certified alpha_star is within the tolerance of the
// feasibility boundary for the builder's multiplier configuration.  When the
// problem is already infeasible at rate zero the result carries no
// certificate.  Inconclusive probes count as infeasible.
[[nodiscard]] RateCertificate certify_rate(const RateProblemBuilder& builder,
                                           const BisectOptions& opts = {});

// Builders for the standard loops; cfg.alpha is overwritten per probe.
[[nodiscard]] RateProblemBuilder rate_problem(StateSpace G, double m, double L, int d,
                                              ZFConfig cfg);
[[nodiscard]] RateProblemBuilder rate_problem_lpv(std::vector<StateSpace> vertices, double m,
                                                  double L, int d, ZFConfig cfg);

// ============================================================================
// Sweeps
// ============================================================================

struct SweepRow {
    double L = 0.0;
    MultiplierClass cls = MultiplierClass::CC;
    int nu = 0;
    double lambda = 0.0;     // 0 for the static class
    double alpha_star = 0.0;
    double margin = 0.0;     // verification residual of the accepted point
    bool certified = false;
};

struct SweepOptions {
    std::vector<double> lambda_grid{0.5, 1.0, 2.0, 5.0, 10.0};
    int nu_max = -1;  // -1: module default (3 for LTI sweeps, 5 for LPV ones)
    int d = 1;        // loop channel width per agent
    int jobs = 1;     // concurrent grid solves
    BisectOptions bisect;
};

// For each L and class, one row per lambda grid point at the largest filter
// order (richer templates subsume smaller ones, so only nu_max is probed); the
// static class contributes a single row.  The headline rate for (L, class) is
// the row maximum, exposed by best_rate.
[[nodiscard]] std::vector<SweepRow> sweep_L(const StateSpace& G, double m,
                                            const std::vector<double>& L_grid,
                                            const std::vector<MultiplierClass>& classes,
                                            const SweepOptions& opts = {});
[[nodiscard]] std::vector<SweepRow> sweep_L_lpv(const std::vector<StateSpace>& vertices, double m,
                                                const std::vector<double>& L_grid,
                                                const std::vector<MultiplierClass>& classes,
                                                const SweepOptions& opts = {});

[[nodiscard]] double best_rate(const std::vector<SweepRow>& rows, double L, MultiplierClass cls);

// CSV document with header `L,class,nu,lambda,alpha_star,margin`.
[[nodiscard]] std::string sweep_csv(const std::vector<SweepRow>& rows);

// ============================================================================
// Stability margin
// ============================================================================

struct StabilityMarginResult {
    bool ok = false;
    std::string reason;  // set when the bracket preconditions fail
    double L_max = 0.0;  // largest sector bound certifiable at rate zero
};

// Bisection on L (to 1e-2) at rate zero: L is certifiable when any lambda grid
// point at the class's largest order yields a verified certificate.
// Preconditions: L_lo certifiable, L_hi not; violations are reported in the
// result, not thrown.
[[nodiscard]] StabilityMarginResult stability_margin(const StateSpace& G, double m,
                                                     MultiplierClass cls, double L_lo,
                                                     double L_hi,
                                                     const SweepOptions& opts = {});

// Key-value audit document for a certificate.
[[nodiscard]] std::string certificate_text(const RateCertificate& cert);

}  // namespace iqcrate
