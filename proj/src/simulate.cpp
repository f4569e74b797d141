#include "iqcrate/fields_sim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace iqcrate {

void Trajectory::validate() const {
    if (t.size() < 2) throw std::invalid_argument("Trajectory: need at least two samples");
    if (!(dt > 0.0)) throw std::invalid_argument("Trajectory: dt must be > 0");
    if (eta.size() != t.size() || y.size() != t.size() || u.size() != t.size())
        throw std::invalid_argument("Trajectory: sample counts differ (t " +
                                    std::to_string(t.size()) + ", eta " +
                                    std::to_string(eta.size()) + ", y " +
                                    std::to_string(y.size()) + ", u " +
                                    std::to_string(u.size()) + ")");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (std::abs(t[i] - t[i - 1] - dt) > 1e-9 * std::max(1.0, std::abs(t[i])))
            throw std::invalid_argument("Trajectory: non-uniform grid at sample " +
                                        std::to_string(i));
    for (std::size_t i = 0; i < t.size(); ++i)
        if (y[i].size() != y[0].size() || u[i].size() != u[0].size() ||
            eta[i].size() != eta[0].size())
            throw std::invalid_argument("Trajectory: inconsistent vector sizes at sample " +
                                        std::to_string(i));
}

namespace {

// Time-varying loop pieces: eta' = drift(t, eta, u) with u = grad f(output).
struct LoopOps {
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> output;
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, const Eigen::VectorXd&)> drift;
};

Trajectory integrate_loop(const CompositePotential& pot, const LoopOps& ops,
                          const Eigen::VectorXd& eta0, double t_end, double dt,
                          std::string warning) {
    if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be > 0");
    if (!(t_end > 0.0)) throw std::invalid_argument("simulate: t_end must be > 0");
    const auto n_steps = static_cast<std::size_t>(std::llround(t_end / dt));
    if (n_steps < 1) throw std::invalid_argument("simulate: horizon shorter than one step");

    Trajectory traj;
    traj.dt = dt;
    traj.warning = std::move(warning);
    traj.t.reserve(n_steps + 1);
    traj.eta.reserve(n_steps + 1);
    traj.y.reserve(n_steps + 1);
    traj.u.reserve(n_steps + 1);

    const auto loop_f = [&](double t, const Eigen::VectorXd& eta) -> Eigen::VectorXd {
        const Eigen::VectorXd y = ops.output(t, eta);
        return ops.drift(t, eta, grad_f(pot, y));
    };

    Eigen::VectorXd eta = eta0;
    for (std::size_t i = 0; i <= n_steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        if (!eta.allFinite()) {
            traj.blew_up = true;
            traj.blow_up_time = t;
            break;
        }
        const Eigen::VectorXd y = ops.output(t, eta);
        traj.t.push_back(t);
        traj.eta.push_back(eta);
        traj.y.push_back(y);
        traj.u.push_back(grad_f(pot, y));
        if (i == n_steps) break;

        const Eigen::VectorXd k1 = loop_f(t, eta);
        const Eigen::VectorXd k2 = loop_f(t + 0.5 * dt, eta + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = loop_f(t + 0.5 * dt, eta + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = loop_f(t + dt, eta + dt * k3);
        eta += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (traj.t.size() < 2)
        throw std::invalid_argument("simulate: state non-finite at the initial sample");
    return traj;
}

// Lifts the per-agent plant to the network realization (d channels per agent,
// N agents, agent-major grouping).
StateSpace network_realization(const StateSpace& G, int N, int d) {
    if (N < 1) throw std::invalid_argument("simulate_network: N must be >= 1");
    if (d < 1) throw std::invalid_argument("simulate_network: d must be >= 1");
    if (G.D.size() > 0 && G.D.norm() > 0.0)
        throw std::invalid_argument("simulate_network: agent plant must be strictly proper "
                                    "(D = 0), |D| = " +
                                    std::to_string(G.D.norm()));
    StateSpace agent = G;
    if (G.inputs() == 1 && G.outputs() == 1 && d > 1) agent = kron_lift(G, d);
    if (agent.inputs() != d || agent.outputs() != d)
        throw std::invalid_argument("simulate_network: agent plant has " +
                                    std::to_string(G.inputs()) + " inputs / " +
                                    std::to_string(G.outputs()) + " outputs, expected 1x1 or " +
                                    std::to_string(d) + "x" + std::to_string(d));
    return N > 1 ? kron_lift(agent, N) : agent;
}

// Step-size guideline: dt <= 0.1 / max |eig| of the loop linearized at eta0.
std::string step_warning(const CompositePotential& pot, const StateSpace& net,
                         const Eigen::VectorXd& eta0, double dt) {
    if (net.states() > 400) return {};
    const Eigen::VectorXd y0 = net.C * eta0;
    const Eigen::Index nd = y0.size();
    Eigen::MatrixXd jac(nd, nd);
    const double h = 1e-5 * std::max(1.0, y0.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < nd; ++j) {
        Eigen::VectorXd hi = y0;
        Eigen::VectorXd lo = y0;
        hi(j) += h;
        lo(j) -= h;
        jac.col(j) = (grad_f(pot, hi) - grad_f(pot, lo)) / (2.0 * h);
    }
    const Eigen::MatrixXd closed = net.A + net.B * jac * net.C;
    const double max_mag = closed.eigenvalues().cwiseAbs().maxCoeff();
    if (max_mag > 0.0 && dt > 0.1 / max_mag) {
        std::ostringstream os;
        os << "dt = " << dt << " exceeds the guideline 0.1/|eig|_max = " << 0.1 / max_mag
           << " for the loop linearized at the initial state";
        return os.str();
    }
    return {};
}

}  // namespace

Trajectory simulate_network(const StateSpace& G, int N, int d, const CompositePotential& pot,
                            const Eigen::VectorXd& eta0, double t_end, double dt) {
    pot.validate();
    if (pot.N != N || pot.d != d)
        throw std::invalid_argument("simulate_network: potential is for N=" +
                                    std::to_string(pot.N) + ", d=" + std::to_string(pot.d) +
                                    ", loop has N=" + std::to_string(N) + ", d=" +
                                    std::to_string(d));
    const StateSpace net = network_realization(G, N, d);
    if (eta0.size() != net.states())
        throw std::invalid_argument("simulate_network: eta0 has size " +
                                    std::to_string(eta0.size()) + ", network has " +
                                    std::to_string(net.states()) + " states");
    LoopOps ops;
    ops.output = [&net](double, const Eigen::VectorXd& eta) -> Eigen::VectorXd {
        return net.C * eta;
    };
    ops.drift = [&net](double, const Eigen::VectorXd& eta,
                       const Eigen::VectorXd& u) -> Eigen::VectorXd {
        return net.A * eta + net.B * u;
    };
    return integrate_loop(pot, ops, eta0, t_end, dt, step_warning(pot, net, eta0, dt));
}

Trajectory simulate_network(const FlockingModel& model, int N, const CompositePotential& pot,
                            const Eigen::VectorXd& x0, double t_end, double dt) {
    model.validate();
    const int n_x = model.n_x();
    const int d = model.d;
    if (x0.size() != static_cast<Eigen::Index>(N) * n_x)
        throw std::invalid_argument("simulate_network: x0 has size " + std::to_string(x0.size()) +
                                    ", expected " + std::to_string(N * n_x) +
                                    " stacked vehicle states");

    const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_x + 2 * d, n_x + 2 * d);
    A.topLeftCorner(n_x, n_x) = model.A;
    A.block(0, n_x, n_x, d) = model.B_q;
    A.block(0, n_x + d, n_x, d) = model.B_p;
    A.block(n_x, n_x + d, d, d) = Id;
    A.bottomRightCorner(d, d) = -model.k_d * Id;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n_x + 2 * d, d);
    B.bottomRows(d) = -model.k_p * Id;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, n_x + 2 * d);
    C.leftCols(n_x) = model.C;
    const StateSpace agent(A, B, C, Eigen::MatrixXd::Zero(d, d));

    Eigen::VectorXd eta0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N) * (n_x + 2 * d));
    for (int i = 0; i < N; ++i) {
        const Eigen::VectorXd xi = x0.segment(static_cast<Eigen::Index>(i) * n_x, n_x);
        eta0.segment(static_cast<Eigen::Index>(i) * (n_x + 2 * d), n_x) = xi;
        eta0.segment(static_cast<Eigen::Index>(i) * (n_x + 2 * d) + n_x, d) = model.C * xi;
        // p_i(0) = 0 by construction.
    }
    return simulate_network(agent, N, d, pot, eta0, t_end, dt);
}

Trajectory simulate_lpv(const std::vector<StateSpace>& vertices,
                        const std::vector<double>& rho_values,
                        const std::function<double(double)>& rho, int N, int d,
                        const CompositePotential& pot, const Eigen::VectorXd& eta0, double t_end,
                        double dt) {
    pot.validate();
    if (vertices.size() != 2 || rho_values.size() != 2)
        throw std::invalid_argument("simulate_lpv: exactly two vertices are supported, got " +
                                    std::to_string(vertices.size()) + " systems / " +
                                    std::to_string(rho_values.size()) + " parameter values");
    if (!(rho_values[0] < rho_values[1]))
        throw std::invalid_argument("simulate_lpv: vertex parameters must be ascending");
    if (!rho) throw std::invalid_argument("simulate_lpv: scheduling signal is empty");
    if (pot.N != N || pot.d != d)
        throw std::invalid_argument("simulate_lpv: potential is for N=" + std::to_string(pot.N) +
                                    ", d=" + std::to_string(pot.d) + ", loop has N=" +
                                    std::to_string(N) + ", d=" + std::to_string(d));

    const StateSpace lo = network_realization(vertices[0], N, d);
    const StateSpace hi = network_realization(vertices[1], N, d);
    if (lo.states() != hi.states())
        throw std::invalid_argument("simulate_lpv: vertex realizations have " +
                                    std::to_string(lo.states()) + " and " +
                                    std::to_string(hi.states()) + " states");
    if (eta0.size() != lo.states())
        throw std::invalid_argument("simulate_lpv: eta0 has size " + std::to_string(eta0.size()) +
                                    ", network has " + std::to_string(lo.states()) + " states");

    const double span = rho_values[1] - rho_values[0];
    const auto theta_at = [&](double t) -> double {
        const double value = rho(t);
        const double theta = (value - rho_values[0]) / span;
        if (theta < -1e-9 || theta > 1.0 + 1e-9)
            throw std::invalid_argument("simulate_lpv: rho(" + std::to_string(t) + ") = " +
                                        std::to_string(value) + " outside the vertex interval [" +
                                        std::to_string(rho_values[0]) + ", " +
                                        std::to_string(rho_values[1]) + "]");
        return std::clamp(theta, 0.0, 1.0);
    };

    LoopOps ops;
    ops.output = [&](double t, const Eigen::VectorXd& eta) -> Eigen::VectorXd {
        const double th = theta_at(t);
        return ((1.0 - th) * lo.C + th * hi.C) * eta;
    };
    ops.drift = [&](double t, const Eigen::VectorXd& eta,
                    const Eigen::VectorXd& u) -> Eigen::VectorXd {
        const double th = theta_at(t);
        return ((1.0 - th) * lo.A + th * hi.A) * eta + ((1.0 - th) * lo.B + th * hi.B) * u;
    };
    return integrate_loop(pot, ops, eta0, t_end, dt, step_warning(pot, lo, eta0, dt));
}

FlockingState split_flocking_state(const FlockingModel& model, int N, const Eigen::VectorXd& eta) {
    const int n_x = model.n_x();
    const int d = model.d;
    const Eigen::Index per = n_x + 2 * d;
    if (eta.size() != static_cast<Eigen::Index>(N) * per)
        throw std::invalid_argument("split_flocking_state: eta has size " +
                                    std::to_string(eta.size()) + ", expected " +
                                    std::to_string(N * per));
    FlockingState s;
    s.x.resize(static_cast<Eigen::Index>(N) * n_x);
    s.q.resize(static_cast<Eigen::Index>(N) * d);
    s.p.resize(static_cast<Eigen::Index>(N) * d);
    for (int i = 0; i < N; ++i) {
        s.x.segment(static_cast<Eigen::Index>(i) * n_x, n_x) = eta.segment(i * per, n_x);
        s.q.segment(static_cast<Eigen::Index>(i) * d, d) = eta.segment(i * per + n_x, d);
        s.p.segment(static_cast<Eigen::Index>(i) * d, d) = eta.segment(i * per + n_x + d, d);
    }
    return s;
}

std::string trajectory_csv(const Trajectory& traj) {
    traj.validate();
    const Eigen::Index nd = traj.y[0].size();
    std::ostringstream os;
    os << std::setprecision(12);
    os << 't';
    for (Eigen::Index j = 0; j < nd; ++j) os << ",y_" << j + 1;
    for (Eigen::Index j = 0; j < nd; ++j) os << ",u_" << j + 1;
    os << '\n';
    for (std::size_t i = 0; i < traj.samples(); ++i) {
        os << traj.t[i];
        for (Eigen::Index j = 0; j < nd; ++j) os << ',' << traj.y[i](j);
        for (Eigen::Index j = 0; j < nd; ++j) os << ',' << traj.u[i](j);
        os << '\n';
    }
    return os.str();
}

// ============================================================================
// Rate estimation
// ============================================================================

RateFit estimate_rate(const Trajectory& traj, const Eigen::VectorXd& y_star) {
    traj.validate();
    if (y_star.size() != traj.y[0].size())
        throw std::invalid_argument("estimate_rate: y_star has size " +
                                    std::to_string(y_star.size()) + ", outputs have size " +
                                    std::to_string(traj.y[0].size()));
    RateFit fit;
    const std::size_t n = traj.samples();
    std::vector<double> err(n);
    for (std::size_t i = 0; i < n; ++i) err[i] = (traj.y[i] - y_star).norm();

    const double e0 = err[0];
    if (!(e0 > 0.0)) {
        fit.reason = "initial error is zero";
        return fit;
    }
    const double floor_level = 1e-6 * e0;
    const double ceil_level = 1e-1 * e0;
    if (*std::min_element(err.begin(), err.end()) > floor_level) {
        fit.reason = "error does not decay below 1e-6 of its initial value within the horizon";
        return fit;
    }

    std::vector<std::size_t> window;
    for (std::size_t i = 0; i < n; ++i)
        if (err[i] >= floor_level && err[i] <= ceil_level) window.push_back(i);
    if (window.size() < 2) {
        fit.reason = "fit window contains fewer than two samples";
        return fit;
    }

    // Oscillatory decay: fit the envelope through local maxima when enough of
    // them land inside the window.
    std::vector<std::size_t> peaks;
    for (std::size_t i : window)
        if (i > 0 && i + 1 < n && err[i] > err[i - 1] && err[i] >= err[i + 1]) peaks.push_back(i);
    const std::vector<std::size_t>& pts = peaks.size() >= 5 ? peaks : window;
    fit.peak_fit = peaks.size() >= 5;

    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t count = 0;
    for (std::size_t i : pts) {
        if (!(err[i] > 0.0)) continue;
        const double ti = traj.t[i];
        const double li = std::log(err[i]);
        st += ti;
        sy += li;
        stt += ti * ti;
        sty += ti * li;
        ++count;
    }
    if (count < 2) {
        fit.reason = "fit window degenerate";
        return fit;
    }
    const double denom = static_cast<double>(count) * stt - st * st;
    if (std::abs(denom) < 1e-300) {
        fit.reason = "fit window degenerate";
        return fit;
    }
    const double slope = (static_cast<double>(count) * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t i : pts) {
        if (!(err[i] > 0.0)) continue;
        const double r = std::log(err[i]) - (intercept + slope * traj.t[i]);
        ss += r * r;
    }
    fit.ok = true;
    fit.alpha_emp = -slope;
    fit.kappa_emp = std::exp(intercept);
    fit.residual = std::sqrt(ss / static_cast<double>(count));
    fit.samples_used = static_cast<int>(count);
    return fit;
}

// ============================================================================
// Empirical multiplier audit
// ============================================================================

ZfAuditResult empirical_zf_check(const Trajectory& traj, const Eigen::VectorXd& y_star, double m,
                                 double L, const PTemplate& tpl, const PValues& values,
                                 const std::vector<double>& T_grid) {
    traj.validate();
    if (y_star.size() != traj.y[0].size())
        throw std::invalid_argument("empirical_zf_check: y_star has size " +
                                    std::to_string(y_star.size()) + ", outputs have size " +
                                    std::to_string(traj.y[0].size()));
    if (!(m <= L))
        throw std::invalid_argument("empirical_zf_check: need m <= L");
    if (!tpl.satisfies(values, 1e-7))
        throw std::invalid_argument("empirical_zf_check: multiplier values violate the "
                                    "template constraints");
    const double alpha = tpl.cfg.alpha;
    const double dt = traj.dt;
    const std::size_t n = traj.samples();
    const Eigen::Index nd = traj.y[0].size();

    // Shifted signals and the sector pair (p, q).
    std::vector<Eigen::VectorXd> p(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd yt = traj.y[i] - y_star;
        const Eigen::VectorXd& ut = traj.u[i];
        p[i] = ut - m * yt;
        q[i] = L * yt - ut;
    }

    // Deterministic sector spot-check on subsampled pairs before any
    // quadrature; a violating pair cannot come from a field in S(m, L).
    {
        const std::size_t stride = std::max<std::size_t>(1, n / 64);
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
        for (std::size_t aa = 0; aa < idx.size(); ++aa)
            for (std::size_t bb = aa + 1; bb < idx.size(); ++bb) {
                const Eigen::VectorXd dy =
                    (traj.y[idx[aa]] - y_star) - (traj.y[idx[bb]] - y_star);
                const double ns = dy.squaredNorm();
                if (ns < 1e-14) continue;
                const double inc = (traj.u[idx[aa]] - traj.u[idx[bb]]).dot(dy);
                const double tol = 1e-7 * std::max(1.0, std::max(std::abs(m), L) * ns);
                if (inc < m * ns - tol || inc > L * ns + tol)
                    throw std::invalid_argument(
                        "empirical_zf_check: trajectory pair at t = " +
                        std::to_string(traj.t[idx[aa]]) + ", " +
                        std::to_string(traj.t[idx[bb]]) +
                        " violates the declared sector [" + std::to_string(m) + ", " +
                        std::to_string(L) + "]");
            }
    }

    // Horizons snap to the grid.
    std::vector<double> grid = T_grid;
    if (grid.empty()) {
        const double total = traj.t.back();
        for (int j = 1; j <= 10; ++j) grid.push_back(total * j / 10.0);
    }
    std::vector<std::size_t> horizon;
    for (double T : grid) {
        const auto k = static_cast<long long>(std::llround(T / dt));
        if (k < 1 || static_cast<std::size_t>(k) >= n)
            throw std::invalid_argument("empirical_zf_check: horizon T = " + std::to_string(T) +
                                        " outside the trajectory grid");
        horizon.push_back(static_cast<std::size_t>(k));
    }
    const std::size_t kmax = *std::max_element(horizon.begin(), horizon.end());

    // Kernel samples with the exponential weight folded in: g1 carries the
    // causal branch h(s), g2 the anti-causal branch h(-s), both for s >= 0.
    std::vector<double> g1(kmax + 1), g2(kmax + 1);
    for (std::size_t s = 0; s <= kmax; ++s) {
        const double ts = static_cast<double>(s) * dt;
        const double w = std::exp(-2.0 * alpha * ts);
        g1[s] = w * impulse_h(tpl, values, ts);
        const double neg = s == 0 ? -std::numeric_limits<double>::denorm_min() : -ts;
        g2[s] = w * impulse_h(tpl, values, neg);
    }
    const bool has_g1 = std::any_of(g1.begin(), g1.end(), [](double v) { return v != 0.0; });
    const bool has_g2 = std::any_of(g2.begin(), g2.end(), [](double v) { return v != 0.0; });

    // Trapezoid convolutions on the trajectory grid, channel by channel.
    std::vector<Eigen::VectorXd> w1(kmax + 1, Eigen::VectorXd::Zero(nd));
    std::vector<Eigen::VectorXd> w2(kmax + 1, Eigen::VectorXd::Zero(nd));
    if (has_g1 || has_g2) {
        for (Eigen::Index ch = 0; ch < nd; ++ch) {
            std::vector<double> qc(kmax + 1), pc(kmax + 1);
            for (std::size_t i = 0; i <= kmax; ++i) {
                qc[i] = q[i](ch);
                pc[i] = p[i](ch);
            }
            for (std::size_t i = 1; i <= kmax; ++i) {
                if (has_g1) {
                    double acc = 0.5 * (g1[i] * qc[0] + g1[0] * qc[i]);
                    for (std::size_t j = 1; j < i; ++j) acc += g1[i - j] * qc[j];
                    w1[i](ch) = dt * acc;
                }
                if (has_g2) {
                    double acc = 0.5 * (g2[i] * pc[0] + g2[0] * pc[i]);
                    for (std::size_t j = 1; j < i; ++j) acc += g2[i - j] * pc[j];
                    w2[i](ch) = dt * acc;
                }
            }
        }
    }

    // Cumulative trapezoid of the weighted integrand and of the energy.
    std::vector<double> weight(kmax + 1), integrand(kmax + 1);
    for (std::size_t i = 0; i <= kmax; ++i) {
        weight[i] = std::exp(2.0 * alpha * traj.t[i]);
        integrand[i] =
            weight[i] * (values.H * p[i].dot(q[i]) - p[i].dot(w1[i]) - q[i].dot(w2[i]));
    }
    std::vector<double> cumulative(kmax + 1, 0.0);
    double energy_acc = 0.0;
    for (std::size_t i = 1; i <= kmax; ++i) {
        cumulative[i] = cumulative[i - 1] + 0.5 * dt * (integrand[i - 1] + integrand[i]);
        const double e_prev = weight[i - 1] * (p[i - 1].squaredNorm() + q[i - 1].squaredNorm());
        const double e_here = weight[i] * (p[i].squaredNorm() + q[i].squaredNorm());
        energy_acc += 0.5 * dt * (e_prev + e_here);
    }

    ZfAuditResult out;
    out.energy = energy_acc;
    bool first = true;
    for (std::size_t k : horizon) {
        if (first || cumulative[k] < out.min_integral) {
            out.min_integral = cumulative[k];
            out.worst_T = static_cast<double>(k) * dt;
        }
        first = false;
    }

    // Companion kernel inequality over a 21-point tau grid spanning [-T, 2T].
    first = true;
    for (std::size_t k : horizon) {
        const double T = static_cast<double>(k) * dt;
        for (int j = 0; j <= 20; ++j) {
            const double tau_raw = -T + 3.0 * T * j / 20.0;
            const auto shift = static_cast<long long>(std::llround(tau_raw / dt));
            const double tau = static_cast<double>(shift) * dt;
            const double beta = std::min(1.0, std::exp(-2.0 * alpha * tau));
            std::vector<double> lemma_term(k + 1);
            for (std::size_t i = 0; i <= k; ++i) {
                const long long src = static_cast<long long>(i) - shift;
                Eigen::VectorXd qT = Eigen::VectorXd::Zero(nd);
                if (src >= 0 && src <= static_cast<long long>(k)) qT = q[src];
                lemma_term[i] = weight[i] * p[i].dot(q[i] - beta * qT);
            }
            double val = 0.0;
            for (std::size_t i = 1; i <= k; ++i)
                val += 0.5 * dt * (lemma_term[i - 1] + lemma_term[i]);
            if (first || val < out.min_lemma) {
                out.min_lemma = val;
                out.worst_lemma_T = T;
                out.worst_lemma_tau = tau;
            }
            first = false;
        }
    }
    return out;
}

}  // namespace iqcrate
