#include "iqcrate/lmi_assembly.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>
#include <string>

namespace iqcrate {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Lifts a scalar-channel plant to k channels; passes a k x k plant through.
StateSpace lift_to_channels(const StateSpace& G, int k) {
    if (G.inputs() == k && G.outputs() == k) return G;
    if (G.inputs() == 1 && G.outputs() == 1) return kron_lift(G, k);
    throw std::invalid_argument(
        "rate LMI: plant must be 1x1 or " + std::to_string(k) + "x" + std::to_string(k) +
        " per channel group, got " + std::to_string(G.outputs()) + "x" +
        std::to_string(G.inputs()));
}

// Declares the multiplier parameters (H, c_i, a_j) with their sign and
// integral-budget constraints, and returns the handles.
void add_multiplier_vars(SdpProblem& p, const PTemplate& tpl, AssembledRateLmi& out) {
    out.H = p.add_scalar("H", VarSign::NonNegative);
    LinearConstraint budget;  // H - sum c_i/lambda^i - sum a_j/lambda^j >= 0
    budget.terms.emplace_back(out.H, 1.0);
    double pw = 1.0;
    for (int i = 0; i < tpl.n_c(); ++i) {
        pw /= tpl.cfg.lambda;
        const VarId v = p.add_scalar("c" + std::to_string(i + 1), VarSign::NonNegative);
        out.c.push_back(v);
        budget.terms.emplace_back(v, -pw);
    }
    pw = 1.0;
    for (int j = 0; j < tpl.n_a(); ++j) {
        pw /= tpl.cfg.lambda;
        const VarId v = p.add_scalar("a" + std::to_string(j + 1), VarSign::NonNegative);
        out.a.push_back(v);
        budget.terms.emplace_back(v, -pw);
    }
    budget.name = "kernel integral <= H";
    if (!budget.terms.empty() && (tpl.n_c() + tpl.n_a()) > 0) p.add_linear(budget);
}

// The block coefficient of one storage-entry basis matrix E in the rate LMI:
// [[A0'E + E A0 + 2 alpha E, E B0], [B0'E, 0]].
Eigen::MatrixXd lyapunov_coefficient(const StateSpace& sys, double alpha,
                                     const Eigen::MatrixXd& E) {
    const Eigen::Index n = sys.states(), mI = sys.inputs();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + mI, n + mI);
    M.topLeftCorner(n, n) =
        sys.A.transpose() * E + E * sys.A + 2.0 * alpha * E;
    M.topRightCorner(n, mI) = E * sys.B;
    M.bottomLeftCorner(mI, n) = sys.B.transpose() * E;
    return M;
}

// The coefficient of one P-basis matrix Bk: [C0 D0]' (Bk kron I_chan) [C0 D0].
Eigen::MatrixXd multiplier_coefficient(const StateSpace& sys, int chan,
                                       const Eigen::MatrixXd& Bk) {
    Eigen::MatrixXd CD(sys.outputs(), sys.states() + sys.inputs());
    CD.leftCols(sys.states()) = sys.C;
    CD.rightCols(sys.inputs()) = sys.D;
    return CD.transpose() * kron(Bk, Eigen::MatrixXd::Identity(chan, chan)) * CD;
}

// Shared core: declares X and multiplier variables, then imposes the rate LMI
// for each composed vertex system.
AssembledRateLmi assemble_core(const std::vector<StateSpace>& composed, int chan, double alpha,
                               const ZFConfig& cfg, const MultiplierRealization& mult) {
    AssembledRateLmi out;
    out.mult = mult;
    out.closed = composed.front();
    out.alpha = alpha;
    out.delta = default_delta();

    const Eigen::Index n0 = composed.front().states();
    for (const auto& sys : composed)
        require(sys.states() == n0 && sys.inputs() == composed.front().inputs(),
                "rate LMI: inconsistent vertex dimensions");

    out.X = out.problem.add_symmetric("X", static_cast<int>(n0));
    const PTemplate tpl(cfg);
    add_multiplier_vars(out.problem, tpl, out);
    const auto basis = p_basis(tpl);

    if (n0 >= 1) {
        // X >= delta I.
        AffineMatrix xpd(n0);
        xpd.constant.setZero();
        out.problem.for_each_basis(out.X,
                                   [&](VarId v, const Eigen::MatrixXd& E) { xpd.add(v, E); });
        out.problem.add_lmi(xpd, LmiSense::Geq, out.delta, "X pos def");

        // tr X = n0 removes the joint scaling freedom of (X, P).  The
        // condition is homogeneous, so this costs no generality, and it keeps
        // infeasibility violations at unit scale instead of collapsing into
        // the delta margin.
        LinearConstraint norm;
        for (Eigen::Index i = 0; i < n0; ++i)
            norm.terms.emplace_back(
                out.problem.entry(out.X, static_cast<int>(i), static_cast<int>(i)), 1.0);
        norm.constant = -static_cast<double>(n0);
        norm.sense = LinSense::Eq;
        norm.name = "storage normalization";
        out.problem.add_linear(norm);
    }

    for (std::size_t vi = 0; vi < composed.size(); ++vi) {
        const StateSpace& sys = composed[vi];
        AffineMatrix lmi(n0 + sys.inputs());
        out.problem.for_each_basis(out.X, [&](VarId v, const Eigen::MatrixXd& E) {
            lmi.add(v, lyapunov_coefficient(sys, alpha, E));
        });
        lmi.add(out.H, multiplier_coefficient(sys, chan, basis[0]));
        for (std::size_t i = 0; i < out.c.size(); ++i)
            lmi.add(out.c[i], multiplier_coefficient(sys, chan, basis[1 + i]));
        for (std::size_t j = 0; j < out.a.size(); ++j)
            lmi.add(out.a[j],
                    multiplier_coefficient(sys, chan, basis[1 + out.c.size() + j]));
        const std::string name =
            composed.size() == 1 ? std::string("rate") : "rate v" + std::to_string(vi);
        out.problem.add_lmi(std::move(lmi), LmiSense::Leq, out.delta, name);
    }
    return out;
}

}  // namespace

AssembledRateLmi assemble_rate_lmi(const StateSpace& G, double m, double L, int d, double alpha,
                                   const ZFConfig& cfg) {
    require(d >= 1, "rate LMI: d must be >= 1");
    require(m > 0.0 && m <= L, "rate LMI: need 0 < m <= L");
    require(alpha >= 0.0, "rate LMI: alpha must be >= 0");
    require(cfg.alpha == alpha, "rate LMI: cfg.alpha must match the rate argument");
    cfg.validate();

    const StateSpace Gd = lift_to_channels(G, d);
    const MultiplierRealization mult = build_multiplier(m, L, d, cfg);
    const StateSpace closed = series(mult.Pi, augment_with_identity(Gd));
    return assemble_core({closed}, d, alpha, cfg, mult);
}

AssembledRateLmi assemble_rate_lmi_full(const StateSpace& G, int N, int d, double m, double L,
                                        double alpha, const ZFConfig& cfg) {
    require(N >= 1, "rate LMI: N must be >= 1");
    // The network loop stacks N copies of the agent plant against the field
    // gradient; the multiplier acts channel-wise, so the full condition is the
    // single-agent assembly at channel width N d with P kron I_{Nd}.
    const StateSpace Gd = lift_to_channels(G, d);
    return assemble_rate_lmi(kron_lift(Gd, N), m, L, N * d, alpha, cfg);
}

AssembledRateLmi assemble_rate_lmi_lpv(const std::vector<StateSpace>& vertices, double m, double L,
                                       int d, double alpha, const ZFConfig& cfg) {
    require(!vertices.empty(), "rate LMI: need at least one vertex");
    require(d >= 1, "rate LMI: d must be >= 1");
    require(m > 0.0 && m <= L, "rate LMI: need 0 < m <= L");
    require(alpha >= 0.0, "rate LMI: alpha must be >= 0");
    require(cfg.alpha == alpha, "rate LMI: cfg.alpha must match the rate argument");
    cfg.validate();

    const MultiplierRealization mult = build_multiplier(m, L, d, cfg);
    std::vector<StateSpace> composed;
    composed.reserve(vertices.size());
    for (const auto& G : vertices)
        composed.push_back(series(mult.Pi, augment_with_identity(lift_to_channels(G, d))));
    return assemble_core(composed, d, alpha, cfg, mult);
}

PValues multiplier_values(const AssembledRateLmi& lmi, const Assignment& a) {
    PValues v;
    v.H = a.scalar(lmi.H);
    for (VarId id : lmi.c) v.c.push_back(a.scalar(id));
    for (VarId id : lmi.a) v.a.push_back(a.scalar(id));
    return v;
}

Eigen::MatrixXd storage_matrix(const AssembledRateLmi& lmi, const Assignment& a) {
    return a.matrix(lmi.problem, lmi.X);
}

// ============================================================================
// Flocking
// ============================================================================

void FlockingModel::validate() const {
    require(d >= 1, "FlockingModel: d must be >= 1");
    require(A.rows() == A.cols() && A.rows() >= 1, "FlockingModel: A must be square");
    require(B_q.rows() == A.rows() && B_q.cols() == d, "FlockingModel: B_q must be n_x x d");
    require(B_p.rows() == A.rows() && B_p.cols() == d, "FlockingModel: B_p must be n_x x d");
    require(C.rows() == d && C.cols() == A.rows(), "FlockingModel: C must be d x n_x");
    require(k_p > 0.0, "FlockingModel: k_p must be > 0");
    require(k_d >= 0.0, "FlockingModel: k_d must be >= 0");
    require((M10 - M10.transpose()).cwiseAbs().maxCoeff() < 1e-12, "FlockingModel: M10 not symmetric");
    require((M20 - M20.transpose()).cwiseAbs().maxCoeff() < 1e-12, "FlockingModel: M20 not symmetric");
    require(c1 > 0.0 && c2 > 0.0, "FlockingModel: c1, c2 must be > 0");
    const TrackingCheck tc = check_tracking_assumption(A, B_q, C);
    require(tc.ok, "FlockingModel: tracking assumption fails (" + tc.reason + ")");
}

AssembledFlockingLmi assemble_flocking_lmi(const FlockingModel& model) {
    model.validate();
    AssembledFlockingLmi out;
    out.model = model;
    out.delta = default_delta();

    const int nx = model.n_x();
    const int d = model.d;
    const int ns = nx + 2 * d;   // states (x, q, p)
    const int nz = ns + 2 * d;   // plus inputs (d1, d2)
    const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(d, d);

    // A0 = [[A, B_q, B_p], [0, 0, I], [0, 0, -k_d I]], B0 = [B_G, -B_G],
    // B_G = [0; 0; -k_p I].
    Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(ns, ns);
    A0.topLeftCorner(nx, nx) = model.A;
    A0.block(0, nx, nx, d) = model.B_q;
    A0.block(0, nx + d, nx, d) = model.B_p;
    A0.block(nx, nx + d, d, d) = Id;
    A0.block(nx + d, nx + d, d, d) = -model.k_d * Id;
    Eigen::MatrixXd B0 = Eigen::MatrixXd::Zero(ns, 2 * d);
    B0.block(nx + d, 0, d, d) = -model.k_p * Id;
    B0.block(nx + d, d, d, d) = model.k_p * Id;

    // Channel selectors on (x, q, p, d1, d2).
    Eigen::MatrixXd S1 = Eigen::MatrixXd::Zero(2 * d, nz);
    S1.block(0, nx, d, d) = Id;              // q
    S1.block(d, ns, d, d) = Id;              // d1
    Eigen::MatrixXd S2 = Eigen::MatrixXd::Zero(2 * d, nz);
    S2.block(0, 0, d, nx) = -model.C;        // q - y
    S2.block(0, nx, d, d) = Id;
    S2.block(d, ns + d, d, d) = Id;          // d2

    SdpProblem& p = out.problem;
    out.R = p.add_symmetric("R", ns, MatCone::Psd);
    out.Q = p.add_symmetric("Q", nx);
    out.mu = p.add_scalar("mu", VarSign::NonNegative);
    out.eps = p.add_scalar("eps", VarSign::NonNegative);
    out.lam1 = p.add_scalar("lambda1", VarSign::NonNegative);
    out.lam2 = p.add_scalar("lambda2", VarSign::NonNegative);

    // Q >= delta I, mu >= delta, eps >= delta.
    AffineMatrix qpd(nx);
    p.for_each_basis(out.Q, [&](VarId v, const Eigen::MatrixXd& E) { qpd.add(v, E); });
    p.add_lmi(qpd, LmiSense::Geq, out.delta, "Q pos def");

    // tr Q = n_x pins the joint scale of (R, Q, mu, eps, lambda); the Z
    // condition is homogeneous in the tuple, so this costs no generality.
    LinearConstraint norm;
    for (int i = 0; i < nx; ++i) norm.terms.emplace_back(p.entry(out.Q, i, i), 1.0);
    norm.constant = -static_cast<double>(nx);
    norm.sense = LinSense::Eq;
    norm.name = "storage normalization";
    p.add_linear(norm);
    LinearConstraint mupos;
    mupos.terms = {{out.mu, 1.0}};
    mupos.constant = -out.delta;
    mupos.name = "mu > 0";
    p.add_linear(mupos);
    LinearConstraint epspos;
    epspos.terms = {{out.eps, 1.0}};
    epspos.constant = -out.delta;
    epspos.name = "eps > 0";
    p.add_linear(epspos);

    // X0(R, Q) = R + [[Q, Q A^{-1} B_q, 0], [*, B_q' A^{-T} Q A^{-1} B_q, 0],
    // [0, 0, I]].  The Q part enters through the congruence W' Q W with
    // W = [I, A^{-1} B_q, 0], which keeps it affine in Q's entries.
    const Eigen::MatrixXd AinvBq = model.A.partialPivLu().solve(model.B_q);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nx, ns);
    W.leftCols(nx).setIdentity();
    W.block(0, nx, nx, d) = AinvBq;

    // Z = [[A0'X0 + X0 A0, X0 B0], [B0'X0, 0]] + middle + sum_i lam_i
    // Si' (Mi0 kron I) Si <= 0.  The constant part collects the I_d block of
    // X0 (the p-block identity), which is variable-free.
    AffineMatrix Z(nz);
    Eigen::MatrixXd X0_const = Eigen::MatrixXd::Zero(ns, ns);
    X0_const.block(nx + d, nx + d, d, d) = Id;
    {
        Eigen::MatrixXd lyap = Eigen::MatrixXd::Zero(nz, nz);
        lyap.topLeftCorner(ns, ns) = A0.transpose() * X0_const + X0_const * A0;
        lyap.block(0, ns, ns, 2 * d) = X0_const * B0;
        lyap.block(ns, 0, 2 * d, ns) = B0.transpose() * X0_const;
        Z.constant = lyap;
    }
    auto add_storage_term = [&](VarId v, const Eigen::MatrixXd& E_full) {
        Eigen::MatrixXd lyap = Eigen::MatrixXd::Zero(nz, nz);
        lyap.topLeftCorner(ns, ns) = A0.transpose() * E_full + E_full * A0;
        lyap.block(0, ns, ns, 2 * d) = E_full * B0;
        lyap.block(ns, 0, 2 * d, ns) = B0.transpose() * E_full;
        Z.add(v, lyap);
    };
    p.for_each_basis(out.R, [&](VarId v, const Eigen::MatrixXd& E) { add_storage_term(v, E); });
    p.for_each_basis(out.Q, [&](VarId v, const Eigen::MatrixXd& E) {
        add_storage_term(v, W.transpose() * E * W);
    });

    // Middle term: eps I at (p, p), mu I at (p, d1) symmetric.
    {
        Eigen::MatrixXd Me = Eigen::MatrixXd::Zero(nz, nz);
        Me.block(nx + d, nx + d, d, d) = Id;
        Z.add(out.eps, Me);
        Eigen::MatrixXd Mm = Eigen::MatrixXd::Zero(nz, nz);
        Mm.block(nx + d, ns, d, d) = Id;
        Mm.block(ns, nx + d, d, d) = Id;
        Z.add(out.mu, Mm);
    }

    // IQC channel terms.
    Z.add(out.lam1, S1.transpose() * kron(model.M10, Id) * S1);
    Z.add(out.lam2, S2.transpose() * kron(model.M20, Id) * S2);

    p.add_lmi(std::move(Z), LmiSense::Leq, 0.0, "Z");
    return out;
}

Eigen::MatrixXd flocking_storage_matrix(const AssembledFlockingLmi& lmi, const Assignment& a) {
    const FlockingModel& m = lmi.model;
    const int nx = m.n_x(), d = m.d, ns = nx + 2 * d;
    const Eigen::MatrixXd R = a.matrix(lmi.problem, lmi.R);
    const Eigen::MatrixXd Q = a.matrix(lmi.problem, lmi.Q);
    const Eigen::MatrixXd AinvBq = m.A.partialPivLu().solve(m.B_q);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nx, ns);
    W.leftCols(nx).setIdentity();
    W.block(0, nx, nx, d) = AinvBq;
    Eigen::MatrixXd X0 = R + W.transpose() * Q * W;
    X0.block(nx + d, nx + d, d, d) += Eigen::MatrixXd::Identity(d, d);
    return X0;
}

double storage_value(const AssembledFlockingLmi& lmi, const Assignment& solution,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& q,
                     const Eigen::VectorXd& p, const Eigen::VectorXd& y_star,
                     double f_value_gap) {
    const FlockingModel& m = lmi.model;
    const int nx = m.n_x(), d = m.d;
    require(x.size() % nx == 0, "storage_value: x size not a multiple of n_x");
    const Eigen::Index N = x.size() / nx;
    require(q.size() == N * d && p.size() == N * d && y_star.size() == N * d,
            "storage_value: q/p/y_* must have size N*d");

    const Eigen::MatrixXd X0 = flocking_storage_matrix(lmi, solution);
    const Eigen::MatrixXd AinvBq = m.A.partialPivLu().solve(m.B_q);

    double quad = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        Eigen::VectorXd eta(nx + 2 * d);
        const Eigen::VectorXd ys = y_star.segment(i * d, d);
        eta.head(nx) = x.segment(i * nx, nx) + AinvBq * ys;  // x - x* with x* = -A^{-1}B_q y*
        eta.segment(nx, d) = q.segment(i * d, d) - ys;
        eta.tail(d) = p.segment(i * d, d);
        quad += eta.dot(X0 * eta);
    }
    return quad + 2.0 * solution.scalar(lmi.mu) * f_value_gap;
}

double ic_small_bound(const AssembledFlockingLmi& lmi, const Assignment& solution) {
    const FlockingModel& m = lmi.model;
    const Eigen::MatrixXd Q = solution.matrix(lmi.problem, lmi.Q);
    const double lam_min_q =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).eigenvalues().minCoeff();
    const double c_norm = m.C.jacobiSvd().singularValues()(0);  // spectral norm
    const double via_q = m.c2 * lam_min_q / (c_norm * c_norm);
    const double via_mu = 2.0 * m.c1 * solution.scalar(lmi.mu);
    return std::min(via_mu, via_q);
}

}  // namespace iqcrate
