#include "iqcrate/rate_certifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

namespace iqcrate {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

constexpr const char* kKappaNote =
    "a prefactor kappa >= 0 completes the decay bound "
    "||y(t) - y_opt|| <= kappa exp(-alpha_star t); its value is not computed";

// A feasible probe kept as the running certificate candidate.
struct FeasiblePoint {
    double alpha = 0.0;
    AssembledRateLmi lmi;
    FeasibilityResult result;
};

void package(RateCertificate& cert, FeasiblePoint& best) {
    cert.certified = true;
    cert.alpha_star = best.alpha;
    cert.config = best.lmi.mult.cfg;
    cert.m = best.lmi.mult.m;
    cert.L = best.lmi.mult.L;
    cert.multiplier = multiplier_values(best.lmi, best.result.assignment);
    cert.storage = storage_matrix(best.lmi, best.result.assignment);
    cert.worst_margin =
        verify_solution(best.lmi.problem, best.result.assignment).worst_margin;
}

int resolved_nu(const SweepOptions& opts, int fallback) {
    return opts.nu_max < 0 ? fallback : opts.nu_max;
}

ZFConfig grid_config(MultiplierClass cls, int nu, double lambda) {
    if (cls == MultiplierClass::CC) return ZFConfig{0, 1.0, 0.0, cls};
    return ZFConfig{nu, lambda, 0.0, cls};
}

struct SweepTask {
    double L = 0.0;
    MultiplierClass cls = MultiplierClass::CC;
    int nu = 0;
    double lambda = 0.0;
};

std::vector<SweepTask> plan_tasks(double m, const std::vector<double>& L_grid,
                                  const std::vector<MultiplierClass>& classes,
                                  const SweepOptions& opts, int nu_fallback) {
    require(!L_grid.empty(), "sweep: L grid must be non-empty");
    require(!classes.empty(), "sweep: class list must be non-empty");
    require(m > 0.0, "sweep: m must be > 0");
    const int nu = resolved_nu(opts, nu_fallback);
    std::vector<SweepTask> tasks;
    for (double L : L_grid) {
        require(L >= m, "sweep: every L must satisfy L >= m");
        for (MultiplierClass cls : classes) {
            if (cls == MultiplierClass::CC) {
                tasks.push_back({L, cls, 0, 0.0});
                continue;
            }
            require(nu >= 1, "sweep: dynamic classes need nu_max >= 1");
            require(!opts.lambda_grid.empty(), "sweep: lambda grid must be non-empty");
            for (double lambda : opts.lambda_grid) {
                require(lambda > 0.0, "sweep: lambda grid entries must be > 0");
                tasks.push_back({L, cls, nu, lambda});
            }
        }
    }
    return tasks;
}

std::vector<SweepRow> run_tasks(const std::vector<SweepTask>& tasks,
                                const std::function<RateProblemBuilder(const SweepTask&)>& make,
                                const SweepOptions& opts) {
    std::vector<SweepRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
            const SweepTask& t = tasks[i];
            const RateCertificate cert = certify_rate(make(t), opts.bisect);
            SweepRow row;
            row.L = t.L;
            row.cls = t.cls;
            row.nu = t.nu;
            row.lambda = t.lambda;
            row.certified = cert.certified;
            row.alpha_star = cert.alpha_star;
            row.margin = cert.certified ? cert.worst_margin
                                        : std::numeric_limits<double>::quiet_NaN();
            rows[i] = row;
        }
    };
    const int jobs = std::max(1, opts.jobs);
    if (jobs == 1 || tasks.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

}  // namespace

double default_bisect_tolerance() {
    if (const char* env = std::getenv("IQCRATE_BISECT_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end != env && std::isfinite(v) && v > 0.0) return v;
    }
    return 1e-3;
}

RateCertificate certify_rate(const RateProblemBuilder& builder, const BisectOptions& opts) {
    require(static_cast<bool>(builder), "certify_rate: builder must be callable");
    require(opts.tolerance > 0.0, "certify_rate: tolerance must be > 0");
    require(opts.initial_upper > 0.0, "certify_rate: initial upper bound must be > 0");
    require(opts.max_doublings >= 0, "certify_rate: doubling cap must be >= 0");

    RateCertificate cert;
    cert.kappa_note = kKappaNote;

    std::optional<FeasiblePoint> best;
    auto probe = [&](double alpha) -> bool {
        AssembledRateLmi lmi = builder(alpha);
        FeasibilityResult r = solve_feasibility(lmi.problem, opts.solve);
        cert.bracket_history.push_back({alpha, r.status});
        if (r.status != SolveStatus::Feasible) return false;
        if (!best || alpha >= best->alpha)
            best = FeasiblePoint{alpha, std::move(lmi), std::move(r)};
        return true;
    };

    if (!probe(0.0)) {
        cert.config = builder(0.0).mult.cfg;
        cert.m = builder(0.0).mult.m;
        cert.L = builder(0.0).mult.L;
        cert.note = "not certifiable at rate zero; no certificate";
        return cert;
    }

    double lower = 0.0;
    double upper = opts.initial_upper;
    bool bracketed = false;
    for (int k = 0; k <= opts.max_doublings; ++k) {
        if (!probe(upper)) {
            bracketed = true;
            break;
        }
        lower = upper;
        upper *= 2.0;
    }
    if (!bracketed) {
        package(cert, *best);
        cert.note = "upper search exhausted its doubling budget; the boundary lies above "
                    "alpha_star";
        return cert;
    }

    while (upper - lower > opts.tolerance) {
        const double mid = 0.5 * (lower + upper);
        if (probe(mid))
            lower = mid;
        else
            upper = mid;
    }

    package(cert, *best);
    std::ostringstream os;
    os << "bisection bracket [" << lower << ", " << upper << "] within tolerance "
       << opts.tolerance;
    cert.note = os.str();
    return cert;
}

RateProblemBuilder rate_problem(StateSpace G, double m, double L, int d, ZFConfig cfg) {
    return [G = std::move(G), m, L, d, cfg](double alpha) {
        ZFConfig probe_cfg = cfg;
        probe_cfg.alpha = alpha;
        return assemble_rate_lmi(G, m, L, d, alpha, probe_cfg);
    };
}

RateProblemBuilder rate_problem_lpv(std::vector<StateSpace> vertices, double m, double L, int d,
                                    ZFConfig cfg) {
    return [vertices = std::move(vertices), m, L, d, cfg](double alpha) {
        ZFConfig probe_cfg = cfg;
        probe_cfg.alpha = alpha;
        return assemble_rate_lmi_lpv(vertices, m, L, d, alpha, probe_cfg);
    };
}

std::vector<SweepRow> sweep_L(const StateSpace& G, double m, const std::vector<double>& L_grid,
                              const std::vector<MultiplierClass>& classes,
                              const SweepOptions& opts) {
    const std::vector<SweepTask> tasks = plan_tasks(m, L_grid, classes, opts, 3);
    return run_tasks(
        tasks,
        [&](const SweepTask& t) {
            return rate_problem(G, m, t.L, opts.d, grid_config(t.cls, t.nu, t.lambda));
        },
        opts);
}

std::vector<SweepRow> sweep_L_lpv(const std::vector<StateSpace>& vertices, double m,
                                  const std::vector<double>& L_grid,
                                  const std::vector<MultiplierClass>& classes,
                                  const SweepOptions& opts) {
    require(!vertices.empty(), "sweep: vertex list must be non-empty");
    const std::vector<SweepTask> tasks = plan_tasks(m, L_grid, classes, opts, 5);
    return run_tasks(
        tasks,
        [&](const SweepTask& t) {
            return rate_problem_lpv(vertices, m, t.L, opts.d,
                                    grid_config(t.cls, t.nu, t.lambda));
        },
        opts);
}

double best_rate(const std::vector<SweepRow>& rows, double L, MultiplierClass cls) {
    bool seen = false;
    double best = 0.0;
    for (const SweepRow& row : rows) {
        if (row.L != L || row.cls != cls) continue;
        seen = true;
        if (row.certified) best = std::max(best, row.alpha_star);
    }
    require(seen, "best_rate: no sweep rows at the requested (L, class)");
    return best;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "L,class,nu,lambda,alpha_star,margin\n";
    for (const SweepRow& row : rows) {
        os << row.L << ',' << to_string(row.cls) << ',' << row.nu << ',' << row.lambda << ','
           << row.alpha_star << ',' << row.margin << '\n';
    }
    return os.str();
}

StabilityMarginResult stability_margin(const StateSpace& G, double m, MultiplierClass cls,
                                       double L_lo, double L_hi, const SweepOptions& opts) {
    require(m > 0.0, "stability_margin: m must be > 0");
    require(L_lo >= m, "stability_margin: L_lo must satisfy L_lo >= m");
    require(L_hi > L_lo, "stability_margin: need L_lo < L_hi");
    const int nu = resolved_nu(opts, 3);
    if (cls != MultiplierClass::CC) {
        require(nu >= 1, "stability_margin: dynamic classes need nu_max >= 1");
        require(!opts.lambda_grid.empty(), "stability_margin: lambda grid must be non-empty");
    }

    auto certifiable = [&](double L) -> bool {
        std::vector<double> lambdas =
            cls == MultiplierClass::CC ? std::vector<double>{1.0} : opts.lambda_grid;
        for (double lambda : lambdas) {
            const ZFConfig cfg = grid_config(cls, nu, lambda);
            const AssembledRateLmi lmi = assemble_rate_lmi(G, m, L, opts.d, 0.0, cfg);
            if (solve_feasibility(lmi.problem, opts.bisect.solve).status ==
                SolveStatus::Feasible)
                return true;
        }
        return false;
    };

    StabilityMarginResult out;
    if (!certifiable(L_lo)) {
        out.reason = "lower sector bound is not certifiable at rate zero";
        return out;
    }
    if (certifiable(L_hi)) {
        out.reason = "upper sector bound is still certifiable at rate zero";
        return out;
    }
    double lo = L_lo, hi = L_hi;
    while (hi - lo > 1e-2) {
        const double mid = 0.5 * (lo + hi);
        if (certifiable(mid))
            lo = mid;
        else
            hi = mid;
    }
    out.ok = true;
    out.L_max = lo;
    return out;
}

std::string certificate_text(const RateCertificate& cert) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "certificate: iqcrate-rate-v1\n";
    os << "certified: " << (cert.certified ? "yes" : "no") << "\n";
    os << "alpha_star: " << cert.alpha_star << "\n";
    os << "class: " << to_string(cert.config.cls) << "\n";
    os << "nu: " << cert.config.nu << "\n";
    os << "lambda: " << cert.config.lambda << "\n";
    os << "m: " << cert.m << "\n";
    os << "L: " << cert.L << "\n";
    os << "H: " << cert.multiplier.H << "\n";
    os << "c:";
    for (double v : cert.multiplier.c) os << ' ' << v;
    os << "\n";
    os << "a:";
    for (double v : cert.multiplier.a) os << ' ' << v;
    os << "\n";
    os << "worst_margin: " << cert.worst_margin << "\n";
    os << "storage_dim: " << cert.storage.rows() << "\n";
    for (Eigen::Index i = 0; i < cert.storage.rows(); ++i) {
        os << "storage_row:";
        for (Eigen::Index j = 0; j < cert.storage.cols(); ++j) os << ' ' << cert.storage(i, j);
        os << "\n";
    }
    for (const BracketProbe& probe : cert.bracket_history)
        os << "probe: " << probe.alpha << ' ' << to_string(probe.status) << "\n";
    os << "kappa_note: " << cert.kappa_note << "\n";
    if (!cert.note.empty()) os << "note: " << cert.note << "\n";
    return os.str();
}

}  // namespace iqcrate
