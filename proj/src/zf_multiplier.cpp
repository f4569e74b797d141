#include "iqcrate/zf_multiplier.hpp"

#include <cmath>
#include <stdexcept>

namespace iqcrate {

std::string to_string(MultiplierClass cls) {
    switch (cls) {
        case MultiplierClass::CC: return "CC";
        case MultiplierClass::Causal: return "causal";
        case MultiplierClass::Anticausal: return "anticausal";
        case MultiplierClass::Noncausal: return "noncausal";
    }
    return "?";
}

std::optional<MultiplierClass> multiplier_class_from_string(const std::string& s) {
    if (s == "CC" || s == "cc") return MultiplierClass::CC;
    if (s == "causal") return MultiplierClass::Causal;
    if (s == "anticausal") return MultiplierClass::Anticausal;
    if (s == "noncausal") return MultiplierClass::Noncausal;
    return std::nullopt;
}

void ZFConfig::validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("ZFConfig: lambda must be > 0");
    if (alpha < 0.0) throw std::invalid_argument("ZFConfig: alpha must be >= 0");
    if (cls == MultiplierClass::CC) {
        if (nu != 0) throw std::invalid_argument("ZFConfig: class CC requires nu = 0");
    } else {
        if (nu < 1) throw std::invalid_argument("ZFConfig: dynamic classes require nu >= 1");
    }
}

PTemplate::PTemplate(ZFConfig config) : cfg(config) { cfg.validate(); }

int PTemplate::n_c() const {
    return (cfg.cls == MultiplierClass::Causal || cfg.cls == MultiplierClass::Noncausal)
               ? cfg.nu
               : 0;
}

int PTemplate::n_a() const {
    return (cfg.cls == MultiplierClass::Anticausal || cfg.cls == MultiplierClass::Noncausal)
               ? cfg.nu
               : 0;
}

double PTemplate::kernel_integral(const PValues& v) const {
    // int_0^inf t^{i-1} e^{-lambda t}/(i-1)! dt = 1/lambda^i, same on each side.
    double total = 0.0;
    double pow_l = 1.0;
    for (int i = 0; i < n_c(); ++i) {
        pow_l *= cfg.lambda;
        total += v.c[static_cast<std::size_t>(i)] / pow_l;
    }
    pow_l = 1.0;
    for (int j = 0; j < n_a(); ++j) {
        pow_l *= cfg.lambda;
        total += v.a[static_cast<std::size_t>(j)] / pow_l;
    }
    return total;
}

bool PTemplate::satisfies(const PValues& v, double tol) const {
    if (static_cast<int>(v.c.size()) != n_c() || static_cast<int>(v.a.size()) != n_a())
        return false;
    for (double ci : v.c)
        if (ci < -tol) return false;
    for (double aj : v.a)
        if (aj < -tol) return false;
    return kernel_integral(v) <= v.H + tol;
}

StateSpace sector_transform(double m, double L, int d) {
    if (!(m > 0.0) || m > L)
        throw std::invalid_argument("sector_transform: need 0 < m <= L, got m=" +
                                    std::to_string(m) + " L=" + std::to_string(L));
    if (d < 1) throw std::invalid_argument("sector_transform: d must be >= 1");
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd D(2 * d, 2 * d);
    D.topLeftCorner(d, d) = -m * I;
    D.topRightCorner(d, d) = I;
    D.bottomLeftCorner(d, d) = L * I;
    D.bottomRightCorner(d, d) = -I;
    return static_gain(D);
}

MultiplierRealization build_multiplier(double m, double L, int d, const ZFConfig& cfg) {
    cfg.validate();
    const StateSpace sector = sector_transform(m, L, d);

    MultiplierRealization out;
    out.d = d;
    out.m = m;
    out.L = L;
    out.cfg = cfg;

    if (cfg.cls == MultiplierClass::CC) {
        out.Pi = sector;
        return out;
    }

    const int nu = cfg.nu;
    const double beta = cfg.lambda + 2.0 * cfg.alpha;  // common filter pole magnitude
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    const Eigen::Index n = 2 * static_cast<Eigen::Index>(nu) * d;  // q-chain then p-chain
    const Eigen::Index nz = (2 + 2 * static_cast<Eigen::Index>(nu)) * d;

    // States: s_q1..s_qnu, s_p1..s_pnu; each chain integrates its predecessor:
    //   s_1' = -beta s_1 + input,   s_i' = -beta s_i + s_{i-1}.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 2 * d);
    for (int chain = 0; chain < 2; ++chain) {
        const Eigen::Index base = chain * nu * d;
        for (int i = 0; i < nu; ++i) {
            A.block(base + i * d, base + i * d, d, d) = -beta * I;
            if (i > 0) A.block(base + i * d, base + (i - 1) * d, d, d) = I;
        }
        // Chain 0 is fed by q = L y~ - u~, chain 1 by p = -m y~ + u~.
        B.block(base, 0, d, 2 * d) = sector.D.block(chain == 0 ? d : 0, 0, d, 2 * d);
    }

    // Outputs: p and q pass through statically; filter states are read directly.
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nz, n);
    C.block(2 * d, 0, 2 * static_cast<Eigen::Index>(nu) * d, n).setIdentity();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nz, 2 * d);
    D.topRows(2 * d) = sector.D;

    out.Pi = StateSpace(A, B, C, D);
    return out;
}

std::vector<Eigen::MatrixXd> p_basis(const PTemplate& tpl) {
    const int nu = tpl.cfg.nu;
    const int nb = 2 + 2 * nu;
    std::vector<Eigen::MatrixXd> basis;
    basis.reserve(static_cast<std::size_t>(1 + tpl.n_c() + tpl.n_a()));

    // H p'q: symmetric coupling of blocks 0 (p) and 1 (q).
    Eigen::MatrixXd BH = Eigen::MatrixXd::Zero(nb, nb);
    BH(0, 1) = BH(1, 0) = 0.5;
    basis.push_back(BH);

    // -c_i p'phi_i[q]: blocks 0 and 1+i.
    for (int i = 1; i <= tpl.n_c(); ++i) {
        Eigen::MatrixXd Bc = Eigen::MatrixXd::Zero(nb, nb);
        Bc(0, 1 + i) = Bc(1 + i, 0) = -0.5;
        basis.push_back(Bc);
    }
    // -a_j q'phi_j[p]: blocks 1 and 1+nu+j.
    for (int j = 1; j <= tpl.n_a(); ++j) {
        Eigen::MatrixXd Ba = Eigen::MatrixXd::Zero(nb, nb);
        Ba(1, 1 + nu + j) = Ba(1 + nu + j, 1) = -0.5;
        basis.push_back(Ba);
    }
    return basis;
}

Eigen::MatrixXd p_quadratic_form(const PTemplate& tpl, const PValues& v) {
    if (!tpl.satisfies(v))
        throw std::invalid_argument("p_quadratic_form: values violate the template constraints");
    const auto basis = p_basis(tpl);
    Eigen::MatrixXd P = v.H * basis[0];
    for (int i = 0; i < tpl.n_c(); ++i)
        P += v.c[static_cast<std::size_t>(i)] * basis[static_cast<std::size_t>(1 + i)];
    for (int j = 0; j < tpl.n_a(); ++j)
        P += v.a[static_cast<std::size_t>(j)] *
             basis[static_cast<std::size_t>(1 + tpl.n_c() + j)];
    return P;
}

double impulse_h(const PTemplate& tpl, const PValues& v, double t) {
    double h = 0.0;
    if (t >= 0.0) {
        double term = std::exp(-tpl.cfg.lambda * t);  // t^{i-1}/(i-1)! e^{-lambda t}
        for (int i = 0; i < tpl.n_c(); ++i) {
            h += v.c[static_cast<std::size_t>(i)] * term;
            term *= t / static_cast<double>(i + 1);
        }
    } else {
        double term = std::exp(tpl.cfg.lambda * t);
        for (int j = 0; j < tpl.n_a(); ++j) {
            h += v.a[static_cast<std::size_t>(j)] * term;
            term *= (-t) / static_cast<double>(j + 1);
        }
    }
    return h;
}

}  // namespace iqcrate
