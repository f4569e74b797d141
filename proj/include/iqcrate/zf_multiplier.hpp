#pragma once

#include "iqcrate/state_space.hpp"

#include <optional>
#include <string>
#include <vector>

namespace iqcrate {

// ============================================================================
// Zames–Falb alpha-IQC multipliers
// ============================================================================
// The multiplier is parameterized by a kernel
//     h(t) = sum_i c_i t^{i-1} e^{-lambda t}/(i-1)!          for t > 0,
//     h(t) = sum_j a_j (-t)^{j-1} e^{+lambda t}/(j-1)!       for t < 0,
// with c_i, a_j >= 0 and integral bound
//     sum_i c_i/lambda^i + sum_j a_j/lambda^j <= H,
// which guarantees h >= 0 everywhere and int h <= H.  The quadratic form
//     H p'q - p'w_1 - q'w_2
// is realized on the filtered signal stack z~ produced by the filter Pi.
// The class restricts kernel support: causal keeps only c (h supported on
// t >= 0, so w_2 = 0), anticausal keeps only a, CC is the static sector IQC
// (h = 0), and noncausal keeps both sides.

enum class MultiplierClass { CC, Causal, Anticausal, Noncausal };

[[nodiscard]] std::string to_string(MultiplierClass cls);
[[nodiscard]] std::optional<MultiplierClass> multiplier_class_from_string(const std::string& s);

struct ZFConfig {
    int nu = 0;           // filter order; 0 exactly for the CC class
    double lambda = 1.0;  // basis pole, > 0
    double alpha = 0.0;   // exponential rate weight, >= 0
    MultiplierClass cls = MultiplierClass::CC;

    // Throws std::invalid_argument on an inconsistent combination.
    void validate() const;
};

// Values for the free parameters of the quadratic form.  c and a carry
// exactly the number of coefficients active for the class (n_c / n_a below).
struct PValues {
    double H = 0.0;
    std::vector<double> c;
    std::vector<double> a;
};

// The free-parameter template: which coefficients exist for the configured
// class and the linear constraints they must satisfy.
struct PTemplate {
    ZFConfig cfg;

    explicit PTemplate(ZFConfig config);

    [[nodiscard]] int n_c() const;  // active causal coefficients
    [[nodiscard]] int n_a() const;  // active anti-causal coefficients

    // sum_i c_i/lambda^i + sum_j a_j/lambda^j (the kernel integral).
    [[nodiscard]] double kernel_integral(const PValues& v) const;

    // Checks sizes, coefficient nonnegativity, and kernel_integral <= H.
    [[nodiscard]] bool satisfies(const PValues& v, double tol = 1e-9) const;
};

struct MultiplierRealization {
    StateSpace Pi;  // maps [y~; u~] (2d inputs) to z~ ((2+2nu)d outputs)
    int d = 1;
    double m = 0.0;
    double L = 0.0;
    ZFConfig cfg;

    // z~ blocks, each d wide: 0 = p, 1 = q, 2..nu+1 = phi_i[q],
    // nu+2..2nu+1 = phi_j[p].
    [[nodiscard]] int z_blocks() const { return 2 + 2 * cfg.nu; }
};

// Static sector transform [y~; u~] -> [p; q] = [[-mI, I], [LI, -I]].
[[nodiscard]] StateSpace sector_transform(double m, double L, int d);

// Builds the filter Pi: the sector transform followed by the chained
// first-order filters phi_i with all poles at -(lambda + 2 alpha).
[[nodiscard]] MultiplierRealization build_multiplier(double m, double L, int d,
                                                     const ZFConfig& cfg);

// Symmetric (2+2nu) x (2+2nu) block-coefficient matrix P with
//   z~' (P kron I_d) z~ = H p'q - sum_i c_i p'phi_i[q] - sum_j a_j q'phi_j[p].
// Rejects values violating the template constraints.
[[nodiscard]] Eigen::MatrixXd p_quadratic_form(const PTemplate& tpl, const PValues& v);

// Basis expansion of the same matrix in the free parameters, ordered
// (H, c_1..c_{n_c}, a_1..a_{n_a}):  P(v) = H B[0] + sum c_i B[i] + sum a_j B[n_c+j].
[[nodiscard]] std::vector<Eigen::MatrixXd> p_basis(const PTemplate& tpl);

// Kernel value h(t); t >= 0 evaluates the causal branch.
[[nodiscard]] double impulse_h(const PTemplate& tpl, const PValues& v, double t);

}  // namespace iqcrate
