#include "slelab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace slelab {

namespace {

// Kronrod 15 abscissae/weights on [-1,1] and the embedded Gauss 7 weights.
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct GkResult {
    double value;
    double error;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double resg = 0.0, resk = 0.0;
    const double fc = f(c);
    resk = kWgk[7] * fc;
    resg = kWg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double x = h * kXgk[i];
        const double f1 = f(c - x);
        const double f2 = f(c + x);
        resk += kWgk[i] * (f1 + f2);
        if (i % 2 == 1) resg += kWg[i / 2] * (f1 + f2);
    }
    return {resk * h, std::abs((resk - resg) * h)};
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth,
             int max_depth) {
    const GkResult r = gk15(f, a, b);
    if (r.error <= tol || depth >= max_depth) return r.value;
    const double c = 0.5 * (a + b);
    return adapt(f, a, c, 0.5 * tol, depth + 1, max_depth) +
           adapt(f, c, b, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, double rel_tol, int max_depth) {
    if (a == b) return 0.0;
    const GkResult whole = gk15(f, a, b);
    const double tol = std::max(abs_tol, rel_tol * std::abs(whole.value));
    if (whole.error <= tol) return whole.value;
    return adapt(f, a, b, tol, 0, max_depth);
}

namespace {

// int_a^b u^{-q} (1-u)^{-q} du for 0 <= a <= b <= 1/2 via w = u^{1-q}:
// the integrand becomes (1 - w^{1/(1-q)})^{-q} / (1-q), smooth on the whole
// panel, so the endpoint singularity is gone rather than just weakened.
double lower_half_integral(double a, double b, double q) {
    const double s = 1.0 - q;
    auto f = [q, s](double w) { return std::pow(1.0 - std::pow(w, 1.0 / s), -q) / s; };
    return integrate_adaptive(f, std::pow(a, s), std::pow(b, s), 1e-14, 1e-11, 40);
}

// int_a^b over the full range, split at 1/2 and mirrored (the integrand is
// symmetric about 1/2).
double h_weight_integral(double a, double b, double kappa) {
    const double q = 4.0 / kappa;
    double total = 0.0;
    if (a < 0.5) total += lower_half_integral(a, std::min(b, 0.5), q);
    if (b > 0.5) total += lower_half_integral(1.0 - b, std::min(1.0 - a, 0.5), q);
    return total;
}

}  // namespace

double h_normalization(double kappa) {
    if (!(kappa > 4.0)) throw std::invalid_argument("h_normalization: needs kappa > 4");
    return h_weight_integral(0.0, 1.0, kappa);
}

double h_function(double z, double kappa) {
    if (!(kappa > 4.0)) throw std::invalid_argument("h_function: needs kappa > 4");
    if (z <= 0.0) return 1.0;
    if (z >= 1.0) return 0.0;
    return h_weight_integral(z, 1.0, kappa) / h_normalization(kappa);
}

}  // namespace slelab
