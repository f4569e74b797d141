#include "iqcrate/sdp.hpp"
#include "sdp_internal.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace iqcrate {

namespace detail {

namespace {

constexpr double kScaleFloor = 1e-12;

// x-space staging block before substitution/scaling.
struct StagedBlock {
    Eigen::MatrixXd F0;
    std::vector<std::pair<int, Eigen::MatrixXd>> terms;
    std::string name;
};

struct StagedRow {
    double f0 = 0.0;
    std::vector<std::pair<int, double>> terms;
    std::string name;
};

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& M) {
    return 0.5 * (M + M.transpose());
}

}  // namespace

Eigen::VectorXd Lowered::recover(const Eigen::VectorXd& u) const {
    const int mz = nvars - 1;
    Eigen::VectorXd z(mz);
    for (int k = 0; k < mz; ++k) z[k] = u[k] / dscale[k];
    if (direct) return x0.size() ? (x0 + z).eval() : z;
    return x0 + N * z;
}

Lowered lower(const SdpProblem& p, double box_radius) {
    Lowered out;
    const int M = p.num_vars();

    // ---- Equality elimination: x = x0 + N z --------------------------------
    std::vector<const LinearConstraint*> eqs;
    for (const auto& lc : p.linear())
        if (lc.sense == LinSense::Eq) eqs.push_back(&lc);

    int mz = M;
    if (!eqs.empty()) {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(eqs.size()), M);
        Eigen::VectorXd e(static_cast<Eigen::Index>(eqs.size()));
        for (std::size_t i = 0; i < eqs.size(); ++i) {
            for (const auto& [v, c] : eqs[i]->terms) E(static_cast<Eigen::Index>(i), v) += c;
            e[static_cast<Eigen::Index>(i)] = -eqs[i]->constant;
        }
        out.x0 = E.colPivHouseholderQr().solve(e);
        const double resid = (E * out.x0 - e).cwiseAbs().maxCoeff();
        if (resid > 1e-8 * (1.0 + e.cwiseAbs().maxCoeff())) {
            out.abort_reason = "equality constraints are inconsistent (residual " +
                               std::to_string(resid) + ")";
            return out;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(E);
        lu.setThreshold(1e-10);
        const Eigen::MatrixXd kernel = lu.kernel();  // M x (M - rank); zero-width if none
        if (kernel.cols() == 0 || (kernel.cols() == 1 && kernel.isZero(0))) {
            out.fixed_point = true;
            return out;
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel);
        out.N = qr.householderQ() * Eigen::MatrixXd::Identity(M, kernel.cols());
        out.direct = false;
        mz = static_cast<int>(kernel.cols());
    } else {
        out.x0 = Eigen::VectorXd::Zero(M);
        out.direct = true;
    }

    // ---- Stage constraints in x-space --------------------------------------
    std::vector<StagedBlock> staged;
    for (const auto& lmi : p.lmis()) {
        StagedBlock blk;
        blk.name = lmi.name;
        const double sgn = (lmi.sense == LmiSense::Leq) ? -1.0 : 1.0;
        blk.F0 = sgn * symmetrized(lmi.expr.constant) -
                 lmi.delta * Eigen::MatrixXd::Identity(lmi.expr.dim, lmi.expr.dim);
        for (const auto& [v, F] : lmi.expr.coeff) blk.terms.emplace_back(v, sgn * symmetrized(F));
        staged.push_back(std::move(blk));
    }
    for (std::size_t mi = 0; mi < p.matrix_vars().size(); ++mi) {
        const auto& mv = p.matrix_vars()[mi];
        if (mv.cone != MatCone::Psd) continue;
        StagedBlock blk;
        blk.name = mv.name + " >= 0";
        blk.F0 = Eigen::MatrixXd::Zero(mv.n, mv.n);
        for (int r = 0; r < mv.n; ++r)
            for (int s = r; s < mv.n; ++s) {
                Eigen::MatrixXd E = Eigen::MatrixXd::Zero(mv.n, mv.n);
                E(r, s) = E(s, r) = 1.0;
                blk.terms.emplace_back(p.entry(MatVarId{static_cast<int>(mi)}, r, s), E);
            }
        staged.push_back(std::move(blk));
    }

    std::vector<StagedRow> staged_rows;
    for (VarId v = 0; v < M; ++v)
        if (p.var_sign(v) == VarSign::NonNegative)
            staged_rows.push_back({0.0, {{v, 1.0}}, p.var_name(v) + " >= 0"});
    for (const auto& lc : p.linear()) {
        if (lc.sense != LinSense::Geq) continue;
        StagedRow row;
        row.f0 = lc.constant;
        for (const auto& [v, c] : lc.terms) row.terms.emplace_back(v, c);
        row.name = lc.name;
        staged_rows.push_back(std::move(row));
    }

    // ---- Substitute x = x0 + N z and row-scale -----------------------------
    auto substitute_block = [&](const StagedBlock& blk) {
        DenseBlock db;
        db.name = blk.name;
        db.F0 = blk.F0;
        for (const auto& [v, F] : blk.terms) db.F0 += out.x0[v] * F;
        if (out.direct) {
            for (const auto& [v, F] : blk.terms) db.terms.emplace_back(v, F);
        } else {
            for (int k = 0; k < mz; ++k) {
                Eigen::MatrixXd Fk = Eigen::MatrixXd::Zero(blk.F0.rows(), blk.F0.cols());
                bool nonzero = false;
                for (const auto& [v, F] : blk.terms) {
                    const double w = out.N(v, k);
                    if (w != 0.0) {
                        Fk += w * F;
                        nonzero = true;
                    }
                }
                if (nonzero && Fk.cwiseAbs().maxCoeff() > kScaleFloor)
                    db.terms.emplace_back(k, std::move(Fk));
            }
        }
        double scale = db.F0.cwiseAbs().maxCoeff();
        for (const auto& [k, F] : db.terms) scale = std::max(scale, F.cwiseAbs().maxCoeff());
        scale = std::max(scale, kScaleFloor);
        db.F0 /= scale;
        for (auto& [k, F] : db.terms) F /= scale;
        return db;
    };
    for (const auto& blk : staged) out.dense.push_back(substitute_block(blk));

    for (const auto& row : staged_rows) {
        DiagRow dr;
        dr.name = row.name;
        dr.f0 = row.f0;
        for (const auto& [v, c] : row.terms) dr.f0 += out.x0[v] * c;
        if (out.direct) {
            for (const auto& [v, c] : row.terms) dr.terms.emplace_back(v, c);
        } else {
            for (int k = 0; k < mz; ++k) {
                double ck = 0.0;
                for (const auto& [v, c] : row.terms) ck += out.N(v, k) * c;
                if (std::abs(ck) > kScaleFloor) dr.terms.emplace_back(k, ck);
            }
        }
        double scale = std::abs(dr.f0);
        for (const auto& [k, c] : dr.terms) scale = std::max(scale, std::abs(c));
        scale = std::max(scale, kScaleFloor);
        dr.f0 /= scale;
        for (auto& [k, c] : dr.terms) c /= scale;
        out.rows.push_back(std::move(dr));
    }

    // ---- Column scaling ----------------------------------------------------
    out.dscale = Eigen::VectorXd::Ones(mz);
    for (int k = 0; k < mz; ++k) {
        double mag = 0.0;
        for (const auto& db : out.dense)
            for (const auto& [kk, F] : db.terms)
                if (kk == k) mag = std::max(mag, F.cwiseAbs().maxCoeff());
        for (const auto& dr : out.rows)
            for (const auto& [kk, c] : dr.terms)
                if (kk == k) mag = std::max(mag, std::abs(c));
        out.dscale[k] = std::clamp(mag, 1e-8, 1e8);
    }
    for (auto& db : out.dense)
        for (auto& [k, F] : db.terms) F /= out.dscale[k];
    for (auto& dr : out.rows)
        for (auto& [k, c] : dr.terms) c /= out.dscale[k];

    // ---- Box rows and the slack variable -----------------------------------
    out.box_radius = Eigen::VectorXd(mz);
    for (int k = 0; k < mz; ++k) out.box_radius[k] = box_radius * out.dscale[k];
    const int t = mz;  // slack index
    for (int k = 0; k < mz; ++k) {
        const double R = out.box_radius[k];
        const double s = std::max(R, 1.0);
        out.rows.push_back({R / s, {{k, -1.0 / s}}, "box+"});
        out.rows.push_back({R / s, {{k, 1.0 / s}}, "box-"});
    }
    for (auto& db : out.dense) {
        db.terms.emplace_back(
            t, -Eigen::MatrixXd::Identity(db.F0.rows(), db.F0.cols()));
    }
    for (auto& dr : out.rows) dr.terms.emplace_back(t, -1.0);

    out.nvars = mz + 1;
    return out;
}

}  // namespace detail

namespace {

using detail::DenseBlock;
using detail::DiagRow;
using detail::Lowered;

double dot(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    return A.cwiseProduct(B).sum();
}

// Largest step alpha <= 1 keeping base + alpha * delta positive (semi)definite,
// backed off by the fraction-to-boundary factor tau.
double dense_step_max(const Eigen::MatrixXd& base, const Eigen::MatrixXd& delta, double tau) {
    Eigen::LLT<Eigen::MatrixXd> llt(base);
    if (llt.info() != Eigen::Success) return 0.0;
    const Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd W = L.triangularView<Eigen::Lower>().solve(delta);
    W = L.triangularView<Eigen::Lower>().solve(W.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (W + W.transpose()),
                                                      Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= 0.0) return 1.0;
    return std::min(1.0, -tau / lmin);
}

struct IpmState {
    Eigen::VectorXd u;
    std::vector<Eigen::MatrixXd> X, Z;
    Eigen::VectorXd Xr, Zr;  // diagonal-row counterparts
};

Eigen::MatrixXd eval_block(const DenseBlock& db, const Eigen::VectorXd& u) {
    Eigen::MatrixXd Z = db.F0;
    for (const auto& [k, F] : db.terms) Z += u[k] * F;
    return Z;
}

double eval_row(const DiagRow& dr, const Eigen::VectorXd& u) {
    double z = dr.f0;
    for (const auto& [k, c] : dr.terms) z += u[k] * c;
    return z;
}

}  // namespace

FeasibilityResult solve_feasibility(const SdpProblem& p, const SolveOptions& opts) {
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    FeasibilityResult result;
    auto finish = [&](SolveStatus status, std::string note) {
        result.status = status;
        result.stats.note = std::move(note);
        result.stats.solve_seconds = elapsed();
        return result;
    };

    if (opts.dump_sdpa && !opts.sdpa_path.empty()) write_sdpa(p, opts.sdpa_path, opts);

    // Best iterate seen so far, by true (verified) worst margin.
    Eigen::VectorXd best_x;
    double best_margin = -std::numeric_limits<double>::infinity();

    // Verifies a candidate point; promotes it to the result on success.
    auto try_accept = [&](const Eigen::VectorXd& x, double need) -> bool {
        Assignment a{x};
        const VerificationReport rep = verify_solution(p, a, opts.verify_tol);
        if (rep.worst_margin > best_margin) {
            best_margin = rep.worst_margin;
            best_x = x;
        }
        if (rep.worst_margin >= need) {
            result.assignment = std::move(a);
            result.max_violation = std::max(0.0, -rep.worst_margin);
            return true;
        }
        return false;
    };

    Lowered low = detail::lower(p, opts.box_radius);
    if (!low.abort_reason.empty()) return finish(SolveStatus::Infeasible, low.abort_reason);
    if (low.fixed_point) {
        if (try_accept(low.x0, -opts.verify_tol))
            return finish(SolveStatus::Feasible, "equalities pin a verified point");
        return finish(SolveStatus::Infeasible, "equalities pin a single infeasible point");
    }
    if (p.num_vars() == 0) {
        if (try_accept(Eigen::VectorXd(0), -opts.verify_tol))
            return finish(SolveStatus::Feasible, "constant problem verified");
        return finish(SolveStatus::Infeasible, "constant problem violated");
    }

    const int nv = low.nvars;
    const int t_idx = nv - 1;
    const std::size_t nblocks = low.dense.size();
    const std::size_t nrows = low.rows.size();
    double n_tot = 0.0;
    for (const auto& db : low.dense) n_tot += static_cast<double>(db.F0.rows());
    n_tot += static_cast<double>(nrows);

    // ---- Initialization: u = 0 except a slack low enough to make Z >= I ----
    IpmState s;
    s.u = Eigen::VectorXd::Zero(nv);
    double t0 = 0.0;
    for (const auto& db : low.dense) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(db.F0, Eigen::EigenvaluesOnly);
        t0 = std::min(t0, es.eigenvalues().minCoeff());
    }
    for (const auto& dr : low.rows) t0 = std::min(t0, dr.f0);
    s.u[t_idx] = t0 - 1.0;
    s.X.resize(nblocks);
    s.Z.resize(nblocks);
    for (std::size_t j = 0; j < nblocks; ++j) {
        s.X[j] = Eigen::MatrixXd::Identity(low.dense[j].F0.rows(), low.dense[j].F0.rows());
        s.Z[j] = eval_block(low.dense[j], s.u);
    }
    s.Xr = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(nrows));
    s.Zr = Eigen::VectorXd(static_cast<Eigen::Index>(nrows));
    for (std::size_t r = 0; r < nrows; ++r)
        s.Zr[static_cast<Eigen::Index>(r)] = eval_row(low.rows[r], s.u);

    const double R2 = low.box_radius.norm();
    double best_bound = std::numeric_limits<double>::infinity();
    const double tau = 0.98;

    Eigen::MatrixXd B(nv, nv);
    Eigen::VectorXd b = Eigen::VectorXd::Unit(nv, t_idx);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        result.stats.iterations = iter;
        result.stats.slack = s.u[t_idx];

        if (opts.trace) {
            const VerificationReport rep =
                verify_solution(p, Assignment{low.recover(s.u)}, opts.verify_tol);
            std::fprintf(stderr, "[sdp] iter %3d  t=% .3e  margin=% .3e  bound=% .3e\n", iter,
                         s.u[t_idx], rep.worst_margin, best_bound);
        }

        // Early exit: does the recovered point already verify feasible?
        if (try_accept(low.recover(s.u), opts.feasible_margin_stop))
            return finish(SolveStatus::Feasible, "interior point verified");

        // Residual r_k = b_k + sum_j <F_jk, X_j>, duality measure, slack bound.
        Eigen::VectorXd r = b;
        for (std::size_t j = 0; j < nblocks; ++j)
            for (const auto& [k, F] : low.dense[j].terms) r[k] += dot(F, s.X[j]);
        for (std::size_t rr = 0; rr < nrows; ++rr)
            for (const auto& [k, c] : low.rows[rr].terms)
                r[k] += c * s.Xr[static_cast<Eigen::Index>(rr)];

        double theta = 0.0, T = 0.0, mu = 0.0;
        for (std::size_t j = 0; j < nblocks; ++j) {
            theta += dot(low.dense[j].F0, s.X[j]);
            T += s.X[j].trace();
            mu += dot(s.X[j], s.Z[j]);
        }
        for (std::size_t rr = 0; rr < nrows; ++rr) {
            const auto i = static_cast<Eigen::Index>(rr);
            theta += low.rows[rr].f0 * s.Xr[i];
            T += s.Xr[i];
            mu += s.Xr[i] * s.Zr[i];
        }
        mu /= n_tot;

        if (T > 1e-12) {
            Eigen::VectorXd rz = r;
            rz[t_idx] = 0.0;
            best_bound = std::min(best_bound, (theta + R2 * rz.norm()) / T);
            if (best_bound < -opts.infeasible_bound_stop) {
                result.stats.slack = s.u[t_idx];
                result.stats.slack_bound = best_bound;
                return finish(SolveStatus::Infeasible,
                              "dual certificate bounds the slack below zero");
            }
        }

        if (mu < 1e-12 && r.cwiseAbs().maxCoeff() < 1e-9) break;

        // ---- Schur complement -------------------------------------------------
        B.setZero();
        std::vector<Eigen::LLT<Eigen::MatrixXd>> chol(nblocks);
        bool chol_ok = true;
        for (std::size_t j = 0; j < nblocks; ++j) {
            chol[j].compute(s.Z[j]);
            if (chol[j].info() != Eigen::Success) {
                chol_ok = false;
                break;
            }
            for (const auto& [l, Fl] : low.dense[j].terms) {
                const Eigen::MatrixXd Ml = chol[j].solve(Fl) * s.X[j];
                for (const auto& [k, Fk] : low.dense[j].terms)
                    B(k, l) += dot(Fk, 0.5 * (Ml + Ml.transpose()));
            }
        }
        if (!chol_ok) {
            if (opts.trace) std::fprintf(stderr, "[sdp]          dual factorization failed\n");
            break;
        }
        for (std::size_t rr = 0; rr < nrows; ++rr) {
            const auto i = static_cast<Eigen::Index>(rr);
            const double w = s.Xr[i] / s.Zr[i];
            for (const auto& [k, ck] : low.rows[rr].terms)
                for (const auto& [l, cl] : low.rows[rr].terms) B(k, l) += ck * cl * w;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> Blu(B);

        // ---- Predictor --------------------------------------------------------
        const Eigen::VectorXd du_a = Blu.solve(b);
        std::vector<Eigen::MatrixXd> dZ_a(nblocks), dX_a(nblocks);
        Eigen::VectorXd dzr_a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nrows));
        Eigen::VectorXd dxr_a(static_cast<Eigen::Index>(nrows));
        for (std::size_t j = 0; j < nblocks; ++j) {
            dZ_a[j].setZero(low.dense[j].F0.rows(), low.dense[j].F0.rows());
            for (const auto& [k, F] : low.dense[j].terms) dZ_a[j] += du_a[k] * F;
            const Eigen::MatrixXd W = chol[j].solve(dZ_a[j]) * s.X[j];
            dX_a[j] = -s.X[j] - 0.5 * (W + W.transpose());
        }
        for (std::size_t rr = 0; rr < nrows; ++rr) {
            const auto i = static_cast<Eigen::Index>(rr);
            for (const auto& [k, c] : low.rows[rr].terms) dzr_a[i] += du_a[k] * c;
            dxr_a[i] = -s.Xr[i] - dzr_a[i] / s.Zr[i] * s.Xr[i];
        }

        auto step_max = [&](const std::vector<Eigen::MatrixXd>& base,
                            const std::vector<Eigen::MatrixXd>& delta,
                            const Eigen::VectorXd& base_r, const Eigen::VectorXd& delta_r) {
            double a = 1.0;
            for (std::size_t j = 0; j < nblocks; ++j)
                a = std::min(a, dense_step_max(base[j], delta[j], tau));
            for (Eigen::Index i = 0; i < base_r.size(); ++i)
                if (delta_r[i] < 0.0) a = std::min(a, -tau * base_r[i] / delta_r[i]);
            return a;
        };

        const double ap_a = step_max(s.X, dX_a, s.Xr, dxr_a);
        const double ad_a = step_max(s.Z, dZ_a, s.Zr, dzr_a);

        double mu_aff = 0.0;
        for (std::size_t j = 0; j < nblocks; ++j)
            mu_aff += dot(s.X[j] + ap_a * dX_a[j], s.Z[j] + ad_a * dZ_a[j]);
        for (std::size_t rr = 0; rr < nrows; ++rr) {
            const auto i = static_cast<Eigen::Index>(rr);
            mu_aff += (s.Xr[i] + ap_a * dxr_a[i]) * (s.Zr[i] + ad_a * dzr_a[i]);
        }
        mu_aff = std::max(mu_aff / n_tot, 0.0);
        const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-8, 1.0);

        // ---- Corrector --------------------------------------------------------
        Eigen::VectorXd g = b;
        std::vector<Eigen::MatrixXd> S(nblocks);
        for (std::size_t j = 0; j < nblocks; ++j) {
            const Eigen::Index n = low.dense[j].F0.rows();
            const Eigen::MatrixXd Rc =
                sigma * mu * Eigen::MatrixXd::Identity(n, n) - dZ_a[j] * dX_a[j];
            const Eigen::MatrixXd Sj = chol[j].solve(Rc);
            S[j] = 0.5 * (Sj + Sj.transpose());
            for (const auto& [k, F] : low.dense[j].terms) g[k] += dot(F, S[j]);
        }
        Eigen::VectorXd sr(static_cast<Eigen::Index>(nrows));
        for (std::size_t rr = 0; rr < nrows; ++rr) {
            const auto i = static_cast<Eigen::Index>(rr);
            sr[i] = (sigma * mu - dzr_a[i] * dxr_a[i]) / s.Zr[i];
            for (const auto& [k, c] : low.rows[rr].terms) g[k] += c * sr[i];
        }

        const Eigen::VectorXd du = Blu.solve(g);
        std::vector<Eigen::MatrixXd> dZ(nblocks), dX(nblocks);
        Eigen::VectorXd dzr = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nrows));
        Eigen::VectorXd dxr(static_cast<Eigen::Index>(nrows));
        for (std::size_t j = 0; j < nblocks; ++j) {
            dZ[j].setZero(low.dense[j].F0.rows(), low.dense[j].F0.rows());
            for (const auto& [k, F] : low.dense[j].terms) dZ[j] += du[k] * F;
            const Eigen::MatrixXd W = chol[j].solve(dZ[j]) * s.X[j];
            dX[j] = S[j] - s.X[j] - 0.5 * (W + W.transpose());
        }
        for (std::size_t rr = 0; rr < nrows; ++rr) {
            const auto i = static_cast<Eigen::Index>(rr);
            for (const auto& [k, c] : low.rows[rr].terms) dzr[i] += du[k] * c;
            dxr[i] = sr[i] - s.Xr[i] - dzr[i] / s.Zr[i] * s.Xr[i];
        }

        double ap = step_max(s.X, dX, s.Xr, dxr);
        double ad = step_max(s.Z, dZ, s.Zr, dzr);

        if (opts.trace)
            std::fprintf(stderr, "[sdp]          mu=%.3e sigma=%.3e ap=%.3e ad=%.3e\n", mu, sigma,
                         ap, ad);

        if (ap < 1e-8 && ad < 1e-8) break;  // stalled at the central-path limit

        // ---- Update (retry with shorter steps if positivity is lost) ---------
        bool advanced = false;
        for (int attempt = 0; attempt <= 6 && !advanced; ++attempt) {
            IpmState trial = s;
            trial.u += ad * du;
            bool ok = true;
            for (std::size_t j = 0; j < nblocks && ok; ++j) {
                trial.X[j] = 0.5 * ((s.X[j] + ap * dX[j]) +
                                    (s.X[j] + ap * dX[j]).transpose().eval());
                trial.Z[j] = eval_block(low.dense[j], trial.u);
                ok = Eigen::LLT<Eigen::MatrixXd>(trial.X[j]).info() == Eigen::Success &&
                     Eigen::LLT<Eigen::MatrixXd>(trial.Z[j]).info() == Eigen::Success;
            }
            if (ok) {
                trial.Xr = s.Xr + ap * dxr;
                for (std::size_t rr = 0; rr < nrows; ++rr) {
                    const auto i = static_cast<Eigen::Index>(rr);
                    trial.Zr[i] = eval_row(low.rows[rr], trial.u);
                    if (trial.Xr[i] <= 0.0 || trial.Zr[i] <= 0.0) ok = false;
                }
            }
            if (ok) {
                s = std::move(trial);
                advanced = true;
            } else {
                ap *= 0.5;
                ad *= 0.5;
            }
        }
        if (!advanced) break;  // stalled; fall through to the final decision
    }

    // ---- Final decision ------------------------------------------------------
    result.stats.slack = s.u[t_idx];
    result.stats.slack_bound = best_bound;
    if (try_accept(low.recover(s.u), -opts.verify_tol) ||
        (best_x.size() > 0 && try_accept(best_x, -opts.verify_tol)))
        return finish(SolveStatus::Feasible, "converged point verified");
    if (best_bound < -opts.infeasible_bound_stop)
        return finish(SolveStatus::Infeasible, "dual certificate bounds the slack below zero");
    return finish(SolveStatus::Inconclusive, "no verified point and no infeasibility certificate");
}

}  // namespace iqcrate
