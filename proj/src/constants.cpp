#include "slelab/constants.hpp"

#include <cmath>
#include <stdexcept>

namespace slelab {

void SleParameters::validate() const {
    if (!(kappa > 0.0)) throw std::invalid_argument("SleParameters: kappa must be positive");
    if (rhos.size() != z0.size())
        throw std::invalid_argument("SleParameters: rho/force point count mismatch");
    int coincident = 0;
    for (std::size_t i = 0; i < z0.size(); ++i) {
        if (w0 == z0[i] && ++coincident > 0 && !(rhos[i] > -2.0))
            throw std::invalid_argument("SleParameters: coincident start requires rho > -2");
    }
    if (coincident > 1)
        throw std::invalid_argument("SleParameters: more than one coincident force point");
    // The side label pins the single-force construction; a multi-point start
    // only needs each gap to keep its initial sign, which may straddle W.
    if (rhos.size() == 1) {
        const double gap = w0 - z0[0];
        if (side == Side::Left ? gap < 0.0 : gap > 0.0)
            throw std::invalid_argument("SleParameters: force point on the wrong side");
    }
}

double SleParameters::rho_sum() const {
    double s = 0.0;
    for (double r : rhos) s += r;
    return s;
}

DerivedConstants derive_constants(double kappa, double rho) {
    if (!(kappa > 0.0)) throw std::invalid_argument("derive_constants: kappa must be positive");
    DerivedConstants d;
    d.a = (6.0 - kappa) / (2.0 * kappa);
    d.b = rho * (rho + 4.0 - kappa) / (4.0 * kappa);
    d.c = rho / kappa;
    d.lambda = (8.0 - 3.0 * kappa) * (6.0 - kappa) / (2.0 * kappa);
    d.alpha = d.a + d.b + d.c;
    d.bessel_dim = 1.0 + 2.0 * (rho + 2.0) / kappa;
    d.dual_kappa = 16.0 / kappa;
    d.dual_rho = (d.dual_kappa - 4.0) / 2.0;
    return d;
}

DerivedConstantsExact derive_constants_exact(const Rational& kappa, const Rational& rho) {
    if (!(kappa.sign() > 0))
        throw std::invalid_argument("derive_constants: kappa must be positive");
    DerivedConstantsExact d;
    d.a = (Rational(6) - kappa) / (Rational(2) * kappa);
    d.b = rho * (rho + Rational(4) - kappa) / (Rational(4) * kappa);
    d.c = rho / kappa;
    d.lambda = (Rational(8) - Rational(3) * kappa) * (Rational(6) - kappa) / (Rational(2) * kappa);
    d.alpha = d.a + d.b + d.c;
    d.bessel_dim = Rational(1) + Rational(2) * (rho + Rational(2)) / kappa;
    d.dual_kappa = Rational(16) / kappa;
    d.dual_rho = (d.dual_kappa - Rational(4)) / Rational(2);
    return d;
}

double alpha_exponent(double kappa, double rho) {
    if (!(kappa > 0.0)) throw std::invalid_argument("alpha_exponent: kappa must be positive");
    return (rho + 2.0) * (rho + 6.0 - kappa) / (4.0 * kappa);
}

Rational alpha_exponent_exact(const Rational& kappa, const Rational& rho) {
    if (!(kappa.sign() > 0))
        throw std::invalid_argument("alpha_exponent: kappa must be positive");
    return (rho + Rational(2)) * (rho + Rational(6) - kappa) / (Rational(4) * kappa);
}

double bessel_dimension(double kappa, double rho) {
    if (!(kappa > 0.0)) throw std::invalid_argument("bessel_dimension: kappa must be positive");
    return 1.0 + 2.0 * (rho + 2.0) / kappa;
}

Rational bessel_dimension_exact(const Rational& kappa, const Rational& rho) {
    if (!(kappa.sign() > 0))
        throw std::invalid_argument("bessel_dimension: kappa must be positive");
    return Rational(1) + Rational(2) * (rho + Rational(2)) / kappa;
}

std::array<Rational, 5> lemma1_drift_coefficients(const Rational& kappa, const Rational& rho,
                                                  const Rational& a, const Rational& b,
                                                  const Rational& c) {
    if (!(kappa.sign() > 0))
        throw std::invalid_argument("lemma1_drift_coefficients: kappa must be positive");
    const Rational half(1, 2);
    const Rational cc1k = c * (c - Rational(1)) * kappa;
    std::array<Rational, 5> out;
    out[0] = a * (rho - c * kappa);
    out[1] = c * (kappa * half - Rational(3)) + c * a * kappa;
    out[2] = Rational(2) * b + c * (kappa - rho - Rational(2)) + half * cc1k;
    out[3] = Rational(-2) * b + Rational(2) * c + half * cc1k;
    out[4] = c * (rho - kappa) - cc1k;
    return out;
}

Lemma4Exponents Lemma4Exponents::canonical(const Rational& kappa,
                                           const std::vector<Rational>& rhos) {
    const std::size_t k = rhos.size();
    Lemma4Exponents x;
    x.b.resize(k);
    x.c.resize(k);
    x.e.assign(k, std::vector<Rational>(k, Rational(0)));
    for (std::size_t i = 0; i < k; ++i) {
        x.b[i] = rhos[i] * (rhos[i] + Rational(4) - kappa) / (Rational(4) * kappa);
        x.c[i] = rhos[i] / kappa;
        for (std::size_t j = i + 1; j < k; ++j)
            x.e[i][j] = rhos[i] * rhos[j] / (Rational(2) * kappa);
    }
    return x;
}

namespace {

void check_eval_point(const std::vector<Rational>& rhos, const DriftEvalPoint& pt) {
    const std::size_t k = rhos.size();
    if (pt.z.size() != k || pt.hz.size() != k || pt.h1z.size() != k)
        throw std::invalid_argument("lemma4_drift_residual: size mismatch");
    if (pt.h1w.is_zero())
        throw std::invalid_argument("lemma4_drift_residual: h'(W) must be nonzero");
    for (std::size_t i = 0; i < k; ++i) {
        if ((pt.w - pt.z[i]).is_zero() || (pt.hw - pt.hz[i]).is_zero())
            throw std::invalid_argument("lemma4_drift_residual: degenerate evaluation point");
        for (std::size_t j = i + 1; j < k; ++j)
            if ((pt.z[i] - pt.z[j]).is_zero() || (pt.hz[i] - pt.hz[j]).is_zero())
                throw std::invalid_argument("lemma4_drift_residual: degenerate evaluation point");
    }
}

}  // namespace

Rational lemma4_drift_residual(const Rational& kappa, const std::vector<Rational>& rhos,
                               const DriftEvalPoint& pt, const Lemma4Exponents& exps) {
    if (!(kappa.sign() > 0))
        throw std::invalid_argument("lemma4_drift_residual: kappa must be positive");
    check_eval_point(rhos, pt);
    const std::size_t k = rhos.size();
    const Rational alpha_k = (Rational(6) - kappa) / (Rational(2) * kappa);
    const Rational half(1, 2);
    const Rational one(1);

    // D_i = W - Z^i, N_i = h(W) - h(Z^i); F is the full drift of W.
    std::vector<Rational> D(k), N(k), invD(k), invN(k);
    Rational F(0);
    for (std::size_t i = 0; i < k; ++i) {
        D[i] = pt.w - pt.z[i];
        N[i] = pt.hw - pt.hz[i];
        invD[i] = one / D[i];
        invN[i] = one / N[i];
        F += rhos[i] * invD[i];
    }
    const Rational hratio = pt.h2w / pt.h1w;  // h''(W)/h'(W)
    const Rational h1sq = pt.h1w * pt.h1w;

    // Noise coefficients: dM^0/M^0 carries alpha_k h''/h' sqrt(k) dB, each
    // combined per-point factor carries c_i (h'(W)/N_i - 1/D_i) sqrt(k) dB.
    std::vector<Rational> sigma(k);
    for (std::size_t i = 0; i < k; ++i) sigma[i] = pt.h1w * invN[i] - invD[i];

    // Drift of the empty-index factor (canonical exponent pair, so the
    // Schwarzian exponential cancels everything except the dW cross term).
    Rational drift = alpha_k * hratio * F;

    for (std::size_t i = 0; i < k; ++i) {
        const Rational& bi = exps.b[i];
        const Rational& ci = exps.c[i];
        // d h'(Z^i) / h'(Z^i)
        drift += bi * Rational(2) * (invD[i] * invD[i] - h1sq * invN[i] * invN[i]);
        // d U_i / U_i, Ito part of the ratio (h(W)-h(Z^i))/(W-Z^i)
        drift += ci * (pt.h1w * F * invN[i] + (kappa * half - Rational(3)) * pt.h2w * invN[i] +
                       Rational(2) * h1sq * invN[i] * invN[i] - F * invD[i] -
                       Rational(2) * invD[i] * invD[i] + kappa * invD[i] * invD[i] -
                       kappa * pt.h1w * invN[i] * invD[i]);
        // quadratic variation of U_i^{c_i}
        drift += half * ci * (ci - one) * kappa * sigma[i] * sigma[i];
        // covariation with the empty-index factor
        drift += kappa * alpha_k * ci * hratio * sigma[i];
        for (std::size_t j = i + 1; j < k; ++j) {
            // pair factor U_ij^{e_ij} (finite variation, no noise)
            drift += Rational(2) * exps.e[i][j] *
                     (invD[i] * invD[j] - h1sq * invN[i] * invN[j]);
            // covariation between the i and j combined factors
            drift += kappa * ci * exps.c[j] * sigma[i] * sigma[j];
        }
    }
    return drift;
}

Rational lemma4_drift_residual(const Rational& kappa, const std::vector<Rational>& rhos,
                               const DriftEvalPoint& pt) {
    return lemma4_drift_residual(kappa, rhos, pt, Lemma4Exponents::canonical(kappa, rhos));
}

Rational lemma4_exponent_sum(const Rational& kappa, const std::vector<Rational>& rhos) {
    if (!(kappa.sign() > 0))
        throw std::invalid_argument("lemma4_exponent_sum: kappa must be positive");
    Rational s = (Rational(6) - kappa) / (Rational(2) * kappa);  // alpha_kappa
    const Lemma4Exponents x = Lemma4Exponents::canonical(kappa, rhos);
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        s += x.b[i] + x.c[i];
        for (std::size_t j = i + 1; j < rhos.size(); ++j) s += x.e[i][j];
    }
    return s;
}

double lemma4_exponent_sum(double kappa, const std::vector<double>& rhos) {
    if (!(kappa > 0.0)) throw std::invalid_argument("lemma4_exponent_sum: kappa must be positive");
    double s = (6.0 - kappa) / (2.0 * kappa);
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        s += rhos[i] * (rhos[i] + 4.0 - kappa) / (4.0 * kappa) + rhos[i] / kappa;
        for (std::size_t j = i + 1; j < rhos.size(); ++j)
            s += rhos[i] * rhos[j] / (2.0 * kappa);
    }
    return s;
}

}  // namespace slelab
