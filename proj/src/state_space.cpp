#include "iqcrate/state_space.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <sstream>
#include <stdexcept>

namespace iqcrate {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::string dims(const Eigen::MatrixXd& M) {
    std::ostringstream os;
    os << M.rows() << "x" << M.cols();
    return os.str();
}

}  // namespace

StateSpace::StateSpace(Eigen::MatrixXd A_in, Eigen::MatrixXd B_in,
                       Eigen::MatrixXd C_in, Eigen::MatrixXd D_in)
    : A(std::move(A_in)), B(std::move(B_in)), C(std::move(C_in)), D(std::move(D_in)) {
    require(A.rows() == A.cols(), "StateSpace: A must be square, got " + dims(A));
    require(B.rows() == A.rows(),
            "StateSpace: rows(B)=" + std::to_string(B.rows()) + " must equal states=" +
                std::to_string(A.rows()));
    require(C.cols() == A.rows(),
            "StateSpace: cols(C)=" + std::to_string(C.cols()) + " must equal states=" +
                std::to_string(A.rows()));
    require(D.rows() == C.rows() && D.cols() == B.cols(),
            "StateSpace: D is " + dims(D) + ", expected " + std::to_string(C.rows()) + "x" +
                std::to_string(B.cols()));
    require(A.allFinite() && B.allFinite() && C.allFinite() && D.allFinite(),
            "StateSpace: all entries must be finite");
}

StateSpace static_gain(const Eigen::MatrixXd& D) {
    const Eigen::Index p = D.rows(), m = D.cols();
    return StateSpace(Eigen::MatrixXd::Zero(0, 0), Eigen::MatrixXd::Zero(0, m),
                      Eigen::MatrixXd::Zero(p, 0), D);
}

StateSpace identity_system(Eigen::Index k) {
    return static_gain(Eigen::MatrixXd::Identity(k, k));
}

StateSpace from_transfer_function(const std::vector<double>& num,
                                  const std::vector<double>& den) {
    require(!den.empty() && den.front() != 0.0,
            "from_transfer_function: denominator needs a nonzero leading coefficient");
    require(!num.empty(), "from_transfer_function: empty numerator");
    const auto n = static_cast<Eigen::Index>(den.size()) - 1;
    require(static_cast<Eigen::Index>(num.size()) <= n + 1,
            "from_transfer_function: improper transfer function (deg num > deg den)");

    // Normalize to a monic denominator s^n + a_{n-1} s^{n-1} + ... + a_0.
    std::vector<double> a(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) a[i] = den[i] / den[0];
    std::vector<double> b(n + 1, 0.0);  // numerator, highest power first, padded
    const auto offset = n + 1 - static_cast<Eigen::Index>(num.size());
    for (std::size_t i = 0; i < num.size(); ++i) b[offset + static_cast<Eigen::Index>(i)] = num[i] / den[0];

    if (n == 0) return static_gain(Eigen::MatrixXd::Constant(1, 1, b[0]));

    const double d0 = b[0];  // direct feed-through when degrees match
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    A.topRightCorner(n - 1, n - 1).setIdentity();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 1);
    B(n - 1, 0) = 1.0;
    Eigen::MatrixXd C(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(n - 1, i) = -a[n - i];
        C(0, i) = b[n - i] - d0 * a[n - i];
    }
    return StateSpace(A, B, C, Eigen::MatrixXd::Constant(1, 1, d0));
}

StateSpace series(const StateSpace& outer, const StateSpace& inner) {
    require(inner.outputs() == outer.inputs(),
            "series: inner outputs=" + std::to_string(inner.outputs()) +
                " must match outer inputs=" + std::to_string(outer.inputs()));
    const Eigen::Index n1 = inner.states(), n2 = outer.states();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = inner.A;
    A.bottomLeftCorner(n2, n1) = outer.B * inner.C;
    A.bottomRightCorner(n2, n2) = outer.A;
    Eigen::MatrixXd B(n1 + n2, inner.inputs());
    B.topRows(n1) = inner.B;
    B.bottomRows(n2) = outer.B * inner.D;
    Eigen::MatrixXd C(outer.outputs(), n1 + n2);
    C.leftCols(n1) = outer.D * inner.C;
    C.rightCols(n2) = outer.C;
    return StateSpace(A, B, C, outer.D * inner.D);
}

StateSpace augment_with_identity(const StateSpace& G) {
    const Eigen::Index p = G.outputs(), m = G.inputs(), n = G.states();
    Eigen::MatrixXd C(p + m, n);
    C.topRows(p) = G.C;
    C.bottomRows(m).setZero();
    Eigen::MatrixXd D(p + m, m);
    D.topRows(p) = G.D;
    D.bottomRows(m) = Eigen::MatrixXd::Identity(m, m);
    return StateSpace(G.A, G.B, C, D);
}

StateSpace kron_lift(const StateSpace& G, int k) {
    require(k >= 1, "kron_lift: copy count must be >= 1, got " + std::to_string(k));
    if (k == 1) return G;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
    return StateSpace(kron(I, G.A), kron(I, G.B), kron(I, G.C), kron(I, G.D));
}

double spectral_abscissa(const StateSpace& G) {
    if (G.states() == 0) return -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<Eigen::MatrixXd> es(G.A, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff();
}

Eigen::MatrixXcd frequency_response(const StateSpace& G, double omega) {
    const std::complex<double> s(0.0, omega);
    if (G.states() == 0) return G.D.cast<std::complex<double>>();
    const Eigen::MatrixXcd resolvent =
        (s * Eigen::MatrixXcd::Identity(G.states(), G.states()) - G.A.cast<std::complex<double>>())
            .partialPivLu()
            .solve(G.B.cast<std::complex<double>>());
    return G.C.cast<std::complex<double>>() * resolvent + G.D.cast<std::complex<double>>();
}

TrackingCheck check_tracking_assumption(const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& B_q,
                                        const Eigen::MatrixXd& C) {
    require(A.rows() == A.cols(), "check_tracking_assumption: A must be square, got " + dims(A));
    require(B_q.rows() == A.rows() && C.cols() == A.rows(),
            "check_tracking_assumption: B_q " + dims(B_q) + " / C " + dims(C) +
                " inconsistent with A " + dims(A));

    TrackingCheck result;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) {
        result.residual = std::numeric_limits<double>::infinity();
        result.reason = "A is singular";
        return result;
    }
    const Eigen::MatrixXd gain = -C * lu.solve(B_q);
    require(gain.rows() == gain.cols(),
            "check_tracking_assumption: -C A^{-1} B_q must be square, got " + dims(gain));
    result.residual =
        (gain - Eigen::MatrixXd::Identity(gain.rows(), gain.cols())).cwiseAbs().maxCoeff();
    if (result.residual > 1e-9) {
        result.reason = "-C A^{-1} B_q differs from identity";
        return result;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    if (es.eigenvalues().real().maxCoeff() >= 0.0) {
        result.reason = "A is not Hurwitz";
        return result;
    }
    result.ok = true;
    return result;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

}  // namespace iqcrate
