#pragma once

#include <array>
#include <vector>

#include "slelab/rational.hpp"

namespace slelab {

enum class Side { Left, Right };

/**
 * Parameters of a SLE(kappa, rho_1..rho_k) process together with its starting
 * configuration: driving value w and force-point positions z_1..z_k.
 *
 * Sign convention: a left process keeps w >= z_i for every force point, a
 * right process keeps w <= z_i. validate() enforces kappa > 0, the existence
 * condition rho > -2 for a single force point started at coincidence, and the
 * side-consistent ordering of the start configuration.
 */
struct SleParameters {
    double kappa = 6.0;
    std::vector<double> rhos;
    Side side = Side::Right;
    double w0 = 0.0;
    std::vector<double> z0;

    void validate() const;
    std::size_t force_point_count() const { return rhos.size(); }
    double rho_sum() const;
};

/// Constants derived from (kappa, rho): drift-cancellation coefficients,
/// restriction exponent, Bessel dimension and the duality image.
struct DerivedConstants {
    double a = 0.0;        // (6-kappa)/(2 kappa)
    double b = 0.0;        // rho (rho+4-kappa)/(4 kappa)
    double c = 0.0;        // rho/kappa
    double lambda = 0.0;   // (8-3 kappa)(6-kappa)/(2 kappa)
    double alpha = 0.0;    // a+b+c = (rho+2)(rho+6-kappa)/(4 kappa)
    double bessel_dim = 0.0;  // 1 + 2(rho+2)/kappa
    double dual_kappa = 0.0;  // 16/kappa
    double dual_rho = 0.0;    // (dual_kappa-4)/2
};

/// Exact-rational variant of DerivedConstants (defined whenever the inputs
/// are rational).
struct DerivedConstantsExact {
    Rational a, b, c, lambda, alpha, bessel_dim, dual_kappa, dual_rho;
};

DerivedConstants derive_constants(double kappa, double rho);
DerivedConstantsExact derive_constants_exact(const Rational& kappa, const Rational& rho);

double alpha_exponent(double kappa, double rho);
Rational alpha_exponent_exact(const Rational& kappa, const Rational& rho);

double bessel_dimension(double kappa, double rho);
Rational bessel_dimension_exact(const Rational& kappa, const Rational& rho);

/**
 * The five bracketed drift coefficients of dM_t/M_t for the single-force-point
 * local martingale, as polynomials in (a, b, c, kappa, rho):
 *
 *   [0]  a(rho - c kappa)                       x  h''(W) / (h'(W)(W-O))
 *   [1]  c(kappa/2 - 3) + c a kappa             x  h''(W) / (h(W)-h(O))
 *   [2]  2b + c(kappa-rho-2) + c(c-1)kappa/2    x  1 / (W-O)^2
 *   [3]  -2b + 2c + c(c-1)kappa/2               x  h'(W)^2 / (h(W)-h(O))^2
 *   [4]  c(rho-kappa) - c(c-1)kappa             x  h'(W) / ((W-O)(h(W)-h(O)))
 *
 * All five vanish exactly at the canonical (a, b, c). The grouping is
 * re-derived in docs/drift_cancellation.md; the k=1 specialization test of
 * lemma4_drift_residual guards against transcription error.
 */
std::array<Rational, 5> lemma1_drift_coefficients(const Rational& kappa, const Rational& rho,
                                                  const Rational& a, const Rational& b,
                                                  const Rational& c);

/**
 * Evaluation point for the multi-force-point drift residual: consistent exact
 * values of the driving configuration and of the hull map's jet data at it.
 * h3w (the third derivative at W) never enters the drift when the empty-index
 * factor carries the canonical exponent pair, so it is not a field.
 */
struct DriftEvalPoint {
    Rational w;                  // driving value W
    std::vector<Rational> z;     // force points Z^(i)
    Rational hw;                 // h(W)
    std::vector<Rational> hz;    // h(Z^(i))
    Rational h1w;                // h'(W), nonzero
    std::vector<Rational> h1z;   // h'(Z^(i)), positive (validation only)
    Rational h2w;                // h''(W)
};

/**
 * Exponent set of the multi-force-point local martingale
 *   M = h'(W)^{alpha_k} e^{...} prod_i h'(Z^i)^{b_i} U_i^{c_i} prod_{i<j} U_ij^{e_ij},
 * where U_i and U_ij are difference ratios. canonical() fills in the values
 * that make the drift vanish; tests perturb individual entries.
 */
struct Lemma4Exponents {
    std::vector<Rational> b;              // per-point derivative exponents
    std::vector<Rational> c;              // per-point ratio exponents
    std::vector<std::vector<Rational>> e; // pair exponents, e[i][j] for i<j

    static Lemma4Exponents canonical(const Rational& kappa, const std::vector<Rational>& rhos);
};

/**
 * Full drift of dM_t/M_t at the evaluation point, assembled from the Ito
 * expansions of every factor plus all quadratic covariation cross terms.
 * Zero (exactly) for the canonical exponents; nonzero for generic
 * perturbations. Rejects degenerate points (coincident arguments).
 */
Rational lemma4_drift_residual(const Rational& kappa, const std::vector<Rational>& rhos,
                               const DriftEvalPoint& pt, const Lemma4Exponents& exps);

Rational lemma4_drift_residual(const Rational& kappa, const std::vector<Rational>& rhos,
                               const DriftEvalPoint& pt);

/// Sum of every exponent in the multi-force-point martingale; equals
/// alpha(kappa, rho_1 + ... + rho_k) identically.
Rational lemma4_exponent_sum(const Rational& kappa, const std::vector<Rational>& rhos);
double lemma4_exponent_sum(double kappa, const std::vector<double>& rhos);

}  // namespace slelab
