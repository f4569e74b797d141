#include "iqcrate/fields_sim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace iqcrate {

namespace {

// Portable uniforms/normals from raw mt19937_64 output: the distribution
// adapters in <random> are implementation-defined, which would break
// cross-platform determinism of seeded fields.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal01(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Eigen::VectorXd normal_vector(std::mt19937_64& rng, int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = normal01(rng);
    return v;
}

}  // namespace

// ============================================================================
// Scalar fields
// ============================================================================

ScalarField quadratic_field(const Eigen::MatrixXd& hess, const Eigen::VectorXd& y0) {
    const Eigen::Index d = hess.rows();
    if (hess.cols() != d)
        throw std::invalid_argument("quadratic_field: Hessian must be square, got " +
                                    std::to_string(hess.rows()) + "x" +
                                    std::to_string(hess.cols()));
    if (y0.size() != d)
        throw std::invalid_argument("quadratic_field: y0 has size " + std::to_string(y0.size()) +
                                    ", Hessian is " + std::to_string(d) + "x" +
                                    std::to_string(d));
    if (!hess.isApprox(hess.transpose(), 1e-12))
        throw std::invalid_argument("quadratic_field: Hessian must be symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0))
        throw std::invalid_argument("quadratic_field: Hessian must be positive definite, "
                                    "smallest eigenvalue " +
                                    std::to_string(lo));

    ScalarField f;
    f.d = static_cast<int>(d);
    f.gradient = [hess, y0](const Eigen::VectorXd& y) -> Eigen::VectorXd {
        return hess * (y - y0);
    };
    f.value = [hess, y0](const Eigen::VectorXd& y) -> double {
        const Eigen::VectorXd e = y - y0;
        return 0.5 * e.dot(hess * e);
    };
    f.m = lo;
    f.L = hi;
    f.y_opt = y0;
    f.quadratic = true;
    f.radially_symmetric = hess.isApprox(lo * Eigen::MatrixXd::Identity(d, d), 1e-12);
    return f;
}

ScalarField random_quadratic_field(int d, double m, double L, const Eigen::VectorXd& y0,
                                   std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("random_quadratic_field: d must be >= 1");
    if (!(m > 0.0) || m > L)
        throw std::invalid_argument("random_quadratic_field: need 0 < m <= L, got m=" +
                                    std::to_string(m) + " L=" + std::to_string(L));
    std::mt19937_64 rng(seed);
    Eigen::VectorXd eigs(d);
    for (int i = 0; i < d; ++i)
        eigs(i) = std::exp(std::log(m) + uniform01(rng) * (std::log(L) - std::log(m)));

    Eigen::MatrixXd gauss(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) gauss(i, j) = normal01(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd Qb = qr.householderQ();
    Eigen::MatrixXd hess = Qb * eigs.asDiagonal() * Qb.transpose();
    hess = 0.5 * (hess + hess.transpose()).eval();
    ScalarField f = quadratic_field(hess, y0);
    // Report the requested sector, not the sampled eigenvalue range.
    f.m = m;
    f.L = L;
    return f;
}

SectorCheckResult sector_spot_check(const ScalarField& field, int pairs, std::uint64_t seed,
                                    double radius, double tol) {
    if (!field.gradient)
        throw std::invalid_argument("sector_spot_check: field has no gradient oracle");
    if (pairs < 1) throw std::invalid_argument("sector_spot_check: need at least one pair");
    std::mt19937_64 rng(seed);
    Eigen::VectorXd center = Eigen::VectorXd::Zero(field.d);
    if (field.y_opt) center = *field.y_opt;

    SectorCheckResult out;
    out.ok = true;
    bool first = true;
    for (int n = 0; n < pairs; ++n) {
        const Eigen::VectorXd y1 = center + radius * normal_vector(rng, field.d);
        const Eigen::VectorXd y2 = center + radius * normal_vector(rng, field.d);
        const Eigen::VectorXd dy = y1 - y2;
        const double ns = dy.squaredNorm();
        if (ns < 1e-14) continue;
        const double inc = (field.gradient(y1) - field.gradient(y2)).dot(dy);
        const double lower = inc - field.m * ns;
        const double upper = field.L * ns - inc;
        if (first || lower < out.worst_lower) out.worst_lower = lower;
        if (first || upper < out.worst_upper) out.worst_upper = upper;
        first = false;
        const double scale = std::max(1.0, std::max(field.L, std::abs(field.m)) * ns);
        if (lower < -tol * scale || upper < -tol * scale) out.ok = false;
    }
    return out;
}

// ============================================================================
// Composite potentials
// ============================================================================

void CompositePotential::validate() const {
    if (N < 1) throw std::invalid_argument("CompositePotential: N must be >= 1");
    if (d < 1) throw std::invalid_argument("CompositePotential: d must be >= 1");
    if (psi.d != d)
        throw std::invalid_argument("CompositePotential: field dimension " +
                                    std::to_string(psi.d) + " != agent dimension " +
                                    std::to_string(d));
    if (!psi.gradient)
        throw std::invalid_argument("CompositePotential: field has no gradient oracle");
    if (informed.empty())
        throw std::invalid_argument("CompositePotential: informed set must be non-empty");
    for (int i : informed)
        if (i < 0 || i >= N)
            throw std::invalid_argument("CompositePotential: informed agent " +
                                        std::to_string(i + 1) + " out of range for N=" +
                                        std::to_string(N));
    if (kind == InteractionKind::LaplacianQuadratic) {
        if (laplacian.rows() != N || laplacian.cols() != N)
            throw std::invalid_argument("CompositePotential: Laplacian is " +
                                        std::to_string(laplacian.rows()) + "x" +
                                        std::to_string(laplacian.cols()) + ", expected " +
                                        std::to_string(N) + "x" + std::to_string(N));
        if (r.size() != static_cast<Eigen::Index>(N) * d)
            throw std::invalid_argument("CompositePotential: reference r has size " +
                                        std::to_string(r.size()) + ", expected " +
                                        std::to_string(N * d));
    } else {
        for (auto [i, j] : edges)
            if (i < 0 || j < 0 || i >= N || j >= N || i == j)
                throw std::invalid_argument("CompositePotential: bad edge (" +
                                            std::to_string(i + 1) + "," +
                                            std::to_string(j + 1) + ")");
        if (!(k >= 0.0)) throw std::invalid_argument("CompositePotential: edge gain k < 0");
        if (!(dist >= 0.0))
            throw std::invalid_argument("CompositePotential: desired distance < 0");
        if (!(eps > 0.0)) throw std::invalid_argument("CompositePotential: eps must be > 0");
    }
}

CompositePotential formation_potential(const InteractionGraph& g, const Eigen::VectorXd& r,
                                       int d, ScalarField psi) {
    CompositePotential pot;
    pot.kind = InteractionKind::LaplacianQuadratic;
    pot.N = g.N;
    pot.d = d;
    pot.laplacian = laplacian(g);
    pot.r = r;
    pot.informed = g.informed;
    pot.psi = std::move(psi);
    pot.validate();
    return pot;
}

CompositePotential flocking_potential(const InteractionGraph& g, double k, double dist, int d,
                                      ScalarField psi, double eps) {
    CompositePotential pot;
    pot.kind = InteractionKind::SigmaFlocking;
    pot.N = g.N;
    pot.d = d;
    pot.edges = g.edges;
    pot.k = k;
    pot.dist = dist;
    pot.eps = eps;
    pot.informed = g.informed;
    pot.psi = std::move(psi);
    pot.validate();
    return pot;
}

double sigma_norm(const Eigen::VectorXd& z, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("sigma_norm: eps must be > 0");
    return (std::sqrt(1.0 + eps * z.squaredNorm()) - 1.0) / eps;
}

Eigen::VectorXd sigma_norm_gradient(const Eigen::VectorXd& z, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("sigma_norm_gradient: eps must be > 0");
    return z / std::sqrt(1.0 + eps * z.squaredNorm());
}

Eigen::VectorXd grad_V(const CompositePotential& pot, const Eigen::VectorXd& y) {
    pot.validate();
    const Eigen::Index nd = static_cast<Eigen::Index>(pot.N) * pot.d;
    if (y.size() != nd)
        throw std::invalid_argument("grad_V: y has size " + std::to_string(y.size()) +
                                    ", expected " + std::to_string(nd));
    if (pot.kind == InteractionKind::LaplacianQuadratic) {
        const Eigen::MatrixXd lap_d = kron(pot.laplacian, Eigen::MatrixXd::Identity(pot.d, pot.d));
        return lap_d * (y - pot.r);
    }
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nd);
    for (auto [i, j] : pot.edges) {
        const Eigen::VectorXd z = y.segment(static_cast<Eigen::Index>(i) * pot.d, pot.d) -
                                  y.segment(static_cast<Eigen::Index>(j) * pot.d, pot.d);
        const double gap = sigma_norm(z, pot.eps) - pot.dist;
        const Eigen::VectorXd gz = pot.k * gap * sigma_norm_gradient(z, pot.eps);
        g.segment(static_cast<Eigen::Index>(i) * pot.d, pot.d) += gz;
        g.segment(static_cast<Eigen::Index>(j) * pot.d, pot.d) -= gz;
    }
    return g;
}

Eigen::VectorXd grad_f(const CompositePotential& pot, const Eigen::VectorXd& y) {
    Eigen::VectorXd g = grad_V(pot, y);
    for (int i : pot.informed)
        g.segment(static_cast<Eigen::Index>(i) * pot.d, pot.d) +=
            pot.psi.gradient(y.segment(static_cast<Eigen::Index>(i) * pot.d, pot.d));
    return g;
}

double f_value(const CompositePotential& pot, const Eigen::VectorXd& y) {
    pot.validate();
    if (!pot.psi.value)
        throw std::invalid_argument("f_value: field has no value oracle");
    const Eigen::Index nd = static_cast<Eigen::Index>(pot.N) * pot.d;
    if (y.size() != nd)
        throw std::invalid_argument("f_value: y has size " + std::to_string(y.size()) +
                                    ", expected " + std::to_string(nd));
    double v = 0.0;
    if (pot.kind == InteractionKind::LaplacianQuadratic) {
        const Eigen::MatrixXd lap_d = kron(pot.laplacian, Eigen::MatrixXd::Identity(pot.d, pot.d));
        const Eigen::VectorXd e = y - pot.r;
        v = 0.5 * e.dot(lap_d * e);
    } else {
        for (auto [i, j] : pot.edges) {
            const Eigen::VectorXd z = y.segment(static_cast<Eigen::Index>(i) * pot.d, pot.d) -
                                      y.segment(static_cast<Eigen::Index>(j) * pot.d, pot.d);
            const double gap = sigma_norm(z, pot.eps) - pot.dist;
            v += 0.5 * pot.k * gap * gap;
        }
    }
    for (int i : pot.informed)
        v += pot.psi.value(y.segment(static_cast<Eigen::Index>(i) * pot.d, pot.d));
    return v;
}

DescentResult minimize_f(const CompositePotential& pot, const Eigen::VectorXd& y0,
                         int max_iterations, double grad_tol) {
    pot.validate();
    // Damped Newton on grad f = 0 with a finite-difference Jacobian; a plain
    // sufficient-decrease search on f cannot reach 1e-10 gradient norms when
    // f is O(1) at the minimum (the decrease drowns in double rounding).
    DescentResult out;
    out.z = y0;
    const Eigen::Index n = y0.size();
    Eigen::VectorXd g = grad_f(pot, out.z);
    for (int it = 0; it < max_iterations; ++it) {
        out.grad_norm = g.norm();
        out.iterations = it;
        if (out.grad_norm <= grad_tol) {
            out.converged = true;
            break;
        }
        const double h = 1e-6 * std::max(1.0, out.z.cwiseAbs().maxCoeff());
        Eigen::MatrixXd jac(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::VectorXd hi = out.z;
            Eigen::VectorXd lo = out.z;
            hi(j) += h;
            lo(j) -= h;
            jac.col(j) = (grad_f(pot, hi) - grad_f(pot, lo)) / (2.0 * h);
        }
        jac = 0.5 * (jac + jac.transpose()).eval();
        bool accepted = false;
        double mu = 1e-10 * std::max(1.0, jac.cwiseAbs().maxCoeff());
        for (int damp = 0; damp < 40 && !accepted; ++damp) {
            const Eigen::VectorXd step =
                (jac + mu * Eigen::MatrixXd::Identity(n, n)).ldlt().solve(-g);
            if (step.allFinite()) {
                const Eigen::VectorXd cand = out.z + step;
                const Eigen::VectorXd gc = grad_f(pot, cand);
                if (gc.norm() < out.grad_norm) {
                    out.z = cand;
                    g = gc;
                    accepted = true;
                }
            }
            mu = std::max(mu * 10.0, 1e-8);
        }
        if (!accepted) break;  // at the attainable floor
    }
    out.grad_norm = g.norm();
    out.converged = out.grad_norm <= grad_tol;
    out.f = pot.psi.value ? f_value(pot, out.z) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

// ============================================================================
// Minimizer characterizations
// ============================================================================

namespace {

// Frank-Wolfe on min 1/2 |Z theta - target|^2 over the simplex; the linear
// subproblem picks the best column, and the duality gap bounds the optimum
// from below, so "outside the hull" comes with a certificate.
bool in_convex_hull(const Eigen::MatrixXd& Z, const Eigen::VectorXd& target, double tol) {
    const Eigen::Index k = Z.cols();
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    const double tol2 = 0.5 * tol * tol;
    for (int it = 0; it < 200000; ++it) {
        const Eigen::VectorXd resid = Z * theta - target;
        const double val = 0.5 * resid.squaredNorm();
        if (val <= tol2) return true;
        const Eigen::VectorXd lin = Z.transpose() * resid;
        Eigen::Index best;
        lin.minCoeff(&best);
        const double gap = lin.dot(theta) - lin(best);
        if (val - gap > tol2) return false;  // certified infeasible
        Eigen::VectorXd dir = -theta;
        dir(best) += 1.0;
        const Eigen::VectorXd zd = Z * dir;
        const double denom = zd.squaredNorm();
        double gamma = denom > 0.0 ? std::clamp(-resid.dot(zd) / denom, 0.0, 1.0)
                                   : 2.0 / (it + 2.0);
        theta += gamma * dir;
    }
    const double final_val = 0.5 * (Z * theta - target).squaredNorm();
    return final_val <= tol2;
}

}  // namespace

MinimizerReport minimizer_checks(const CompositePotential& pot, const Eigen::VectorXd& z,
                                 double tol) {
    pot.validate();
    const Eigen::Index nd = static_cast<Eigen::Index>(pot.N) * pot.d;
    if (z.size() != nd)
        throw std::invalid_argument("minimizer_checks: z has size " + std::to_string(z.size()) +
                                    ", expected " + std::to_string(nd));
    MinimizerReport rep;
    rep.grad_norm = grad_f(pot, z).norm();
    if (rep.grad_norm > tol)
        throw std::invalid_argument("minimizer_checks: z is not an equilibrium, |grad f| = " +
                                    std::to_string(rep.grad_norm));
    if (!pot.psi.y_opt)
        throw std::invalid_argument("minimizer_checks: field has no known minimizer");
    const Eigen::VectorXd& y_opt = *pot.psi.y_opt;
    const double match_tol = std::max(1e-9, 100.0 * tol);
    std::ostringstream lines;

    const bool formation = pot.kind == InteractionKind::LaplacianQuadratic;
    if (formation && pot.r.norm() == 0.0) {
        rep.consensus_applies = true;
        double worst = 0.0;
        for (int i = 0; i < pot.N; ++i)
            worst = std::max(worst, (z.segment(static_cast<Eigen::Index>(i) * pot.d, pot.d) -
                                     y_opt)
                                        .norm());
        rep.consensus_holds = worst <= match_tol;
        lines << "consensus: z = 1 kron y_opt "
              << (rep.consensus_holds ? "holds" : "FAILS") << " (deviation "
              << worst << ")\n";
    }
    if (formation && pot.informed.size() == 1) {
        rep.single_informed_applies = true;
        const int i = pot.informed.front();
        const Eigen::VectorXd ri = pot.r.segment(static_cast<Eigen::Index>(i) * pot.d, pot.d);
        double worst = 0.0;
        for (int j = 0; j < pot.N; ++j) {
            const Eigen::VectorXd rj =
                pot.r.segment(static_cast<Eigen::Index>(j) * pot.d, pot.d);
            const Eigen::VectorXd want = y_opt + rj - ri;
            worst = std::max(worst, (z.segment(static_cast<Eigen::Index>(j) * pot.d, pot.d) -
                                     want)
                                        .norm());
        }
        rep.single_informed_holds = worst <= match_tol;
        lines << "single informed agent: z_j = y_opt + (r_j - r_i) "
              << (rep.single_informed_holds ? "holds" : "FAILS") << " (deviation " << worst
              << ")\n";
    }
    if (pot.psi.quadratic) {
        rep.quadratic_applies = true;
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(pot.d);
        for (int i : pot.informed)
            mean += z.segment(static_cast<Eigen::Index>(i) * pot.d, pot.d);
        mean /= static_cast<double>(pot.informed.size());
        const double dev = (mean - y_opt).norm();
        rep.quadratic_holds = dev <= match_tol;
        lines << "quadratic field: informed centroid at y_opt "
              << (rep.quadratic_holds ? "holds" : "FAILS") << " (deviation " << dev << ")\n";
    }
    if (pot.psi.radially_symmetric) {
        rep.radial_applies = true;
        Eigen::MatrixXd Z(pot.d, static_cast<Eigen::Index>(pot.informed.size()));
        for (std::size_t c = 0; c < pot.informed.size(); ++c)
            Z.col(static_cast<Eigen::Index>(c)) =
                z.segment(static_cast<Eigen::Index>(pot.informed[c]) * pot.d, pot.d);
        rep.radial_holds = in_convex_hull(Z, y_opt, match_tol);
        lines << "radially symmetric field: y_opt in informed hull "
              << (rep.radial_holds ? "holds" : "FAILS") << "\n";
    }
    if (!rep.consensus_applies && !rep.single_informed_applies && !rep.quadratic_applies &&
        !rep.radial_applies)
        lines << "no special-case characterization applies\n";
    rep.summary = lines.str();
    return rep;
}

}  // namespace iqcrate
