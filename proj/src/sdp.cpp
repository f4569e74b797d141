#include "iqcrate/sdp.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace iqcrate {

void AffineMatrix::add(VarId v, const Eigen::MatrixXd& M) {
    if (M.rows() != dim || M.cols() != dim)
        throw std::invalid_argument("AffineMatrix::add: coefficient is " +
                                    std::to_string(M.rows()) + "x" + std::to_string(M.cols()) +
                                    ", expected " + std::to_string(dim) + "x" +
                                    std::to_string(dim));
    auto [it, inserted] = coeff.try_emplace(v, M);
    if (!inserted) it->second += M;
}

Eigen::MatrixXd AffineMatrix::eval(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd M = constant;
    for (const auto& [v, F] : coeff) M += x[v] * F;
    return M;
}

double LinearConstraint::eval(const Eigen::VectorXd& x) const {
    double val = constant;
    for (const auto& [v, c] : terms) val += c * x[v];
    return val;
}

VarId SdpProblem::add_scalar(std::string name, VarSign sign) {
    vars_.push_back({std::move(name), sign});
    return static_cast<VarId>(vars_.size()) - 1;
}

MatVarId SdpProblem::add_symmetric(std::string name, int n, MatCone cone) {
    if (n < 1) throw std::invalid_argument("add_symmetric: dimension must be >= 1");
    MatrixVarInfo info;
    info.name = std::move(name);
    info.n = n;
    info.cone = cone;
    info.base = static_cast<VarId>(vars_.size());
    for (int r = 0; r < n; ++r)
        for (int s = r; s < n; ++s)
            vars_.push_back({info.name + "(" + std::to_string(r) + "," + std::to_string(s) + ")",
                             VarSign::Free});
    mats_.push_back(std::move(info));
    return MatVarId{static_cast<int>(mats_.size()) - 1};
}

const SdpProblem::MatrixVarInfo& SdpProblem::matrix_var(int idx) const {
    if (idx < 0 || idx >= static_cast<int>(mats_.size()))
        throw std::invalid_argument("SdpProblem: unknown matrix variable");
    return mats_[static_cast<std::size_t>(idx)];
}

VarId SdpProblem::entry(MatVarId X, int r, int s) const {
    const auto& mv = matrix_var(X.idx);
    if (r < 0 || s < 0 || r >= mv.n || s >= mv.n)
        throw std::invalid_argument("SdpProblem::entry: index out of range");
    if (r > s) std::swap(r, s);
    // Offset of (r, s) in the row-major upper triangle.
    const int offset = r * mv.n - r * (r - 1) / 2 + (s - r);
    return mv.base + offset;
}

int SdpProblem::matrix_dim(MatVarId X) const { return matrix_var(X.idx).n; }

void SdpProblem::add_lmi(AffineMatrix expr, LmiSense sense, double delta, std::string name) {
    if (delta < 0.0) throw std::invalid_argument("add_lmi: delta must be >= 0");
    for (const auto& [v, F] : expr.coeff)
        if (v < 0 || v >= num_vars())
            throw std::invalid_argument("add_lmi: undeclared variable id " + std::to_string(v));
    lmis_.push_back({std::move(expr), sense, delta, std::move(name)});
}

void SdpProblem::add_linear(LinearConstraint lc) {
    for (const auto& [v, c] : lc.terms)
        if (v < 0 || v >= num_vars())
            throw std::invalid_argument("add_linear: undeclared variable id " + std::to_string(v));
    lins_.push_back(std::move(lc));
}

void SdpProblem::pin(VarId v, double value, std::string name) {
    LinearConstraint lc;
    lc.terms = {{v, 1.0}};
    lc.constant = -value;
    lc.sense = LinSense::Eq;
    lc.name = std::move(name) + ":" + var_name(v);
    add_linear(std::move(lc));
}

Eigen::MatrixXd Assignment::matrix(const SdpProblem& p, MatVarId X) const {
    const int n = p.matrix_dim(X);
    Eigen::MatrixXd M(n, n);
    for (int r = 0; r < n; ++r)
        for (int s = r; s < n; ++s) M(r, s) = M(s, r) = x[p.entry(X, r, s)];
    return M;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Feasible: return "feasible";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Inconclusive: return "inconclusive";
    }
    return "?";
}

VerificationReport verify_solution(const SdpProblem& p, const Assignment& a, double /*tol*/) {
    VerificationReport report;
    report.worst_margin = std::numeric_limits<double>::infinity();
    auto record = [&](std::string name, double margin) {
        report.items.push_back({std::move(name), margin});
        report.worst_margin = std::min(report.worst_margin, margin);
    };

    for (const auto& lmi : p.lmis()) {
        Eigen::MatrixXd M = lmi.expr.eval(a.x);
        M = 0.5 * (M + M.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        const double margin = (lmi.sense == LmiSense::Leq)
                                  ? -lmi.delta - es.eigenvalues().maxCoeff()
                                  : es.eigenvalues().minCoeff() - lmi.delta;
        record(lmi.name, margin);
    }
    for (const auto& mv : p.matrix_vars()) {
        if (mv.cone != MatCone::Psd) continue;
        Eigen::MatrixXd M(mv.n, mv.n);
        for (int r = 0; r < mv.n; ++r)
            for (int s = r; s < mv.n; ++s) {
                const int offset = r * mv.n - r * (r - 1) / 2 + (s - r);
                M(r, s) = M(s, r) = a.x[mv.base + offset];
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        record(mv.name + " >= 0", es.eigenvalues().minCoeff());
    }
    for (VarId v = 0; v < p.num_vars(); ++v)
        if (p.var_sign(v) == VarSign::NonNegative) record(p.var_name(v) + " >= 0", a.x[v]);
    for (const auto& lc : p.linear()) {
        const double val = lc.eval(a.x);
        record(lc.name, lc.sense == LinSense::Geq ? val : -std::abs(val));
    }

    if (report.items.empty()) report.worst_margin = 0.0;  // vacuously verified
    return report;
}

double default_delta() {
    if (const char* env = std::getenv("IQCRATE_DELTA")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end != env && std::isfinite(v) && v >= 0.0) return v;
    }
    return 1e-8;
}

}  // namespace iqcrate
