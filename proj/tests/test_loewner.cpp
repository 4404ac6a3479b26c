#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "slelab/loewner.hpp"

using namespace slelab;

namespace {

DriverPath zero_driver(double dt, std::size_t n) {
    DriverPath d;
    d.grid = TimeGrid(dt, n);
    d.W.assign(n + 1, 0.0);
    return d;
}

// Third-order complex finite differences for the jet oracle.
MapJet fd_jet(const LoewnerChain& chain, Complex z, double h) {
    auto f = [&](Complex p) { return chain.flow(p).value; };
    MapJet j;
    j.f = f(z);
    j.f1 = (f(z + h) - f(z - h)) / (2.0 * h);
    j.f2 = (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h);
    j.f3 = (f(z + 2.0 * h) - 2.0 * f(z + h) + 2.0 * f(z - h) - f(z - 2.0 * h)) / (2.0 * h * h * h);
    return j;
}

}  // namespace

TEST_CASE("empty chain is the identity") {
    const LoewnerChain chain;
    const Complex z(0.3, 1.7);
    CHECK(chain.flow(z).value == z);
    CHECK(chain.capacity() == 0.0);
    const MapJet j = chain.jet(z);
    CHECK(j.f == z);
    CHECK(j.f1 == Complex(1.0, 0.0));
    CHECK(j.f2 == Complex(0.0, 0.0));
}

TEST_CASE("constant zero driver gives the vertical slit map") {
    const double T = 1.0;
    const auto d = zero_driver(1e-3, 1000);
    const LoewnerChain chain = chain_from_driver(d);
    CHECK(chain.capacity() == doctest::Approx(2.0 * T).epsilon(1e-12));

    SUBCASE("real points flow to sqrt(x^2 + 4T) and are never swallowed") {
        for (double x : {0.5, 1.0, 3.0, -2.0}) {
            const FlowResult r = chain.flow_real(x);
            REQUIRE_FALSE(r.swallowed);
            const double expect = (x > 0 ? 1.0 : -1.0) * std::sqrt(x * x + 4.0 * T);
            CHECK(r.value.real() == doctest::Approx(expect).epsilon(1e-12));
            CHECK_FALSE(chain.swallow_time(x).has_value());
        }
    }
    SUBCASE("interior slit points are swallowed before T") {
        const Complex inside(0.0, 2.0 * std::sqrt(T) * 0.9);
        const FlowResult r = chain.flow(inside);
        CHECK(r.swallowed);
        CHECK(r.swallowed_at < T);
        // Points beside the slit survive.
        CHECK_FALSE(chain.flow(Complex(0.5, 0.5)).swallowed);
    }
    SUBCASE("complex flow matches the closed form") {
        const Complex z(1.0, 2.0);
        const Complex expect = std::sqrt(z * z + 4.0 * T);
        CHECK(std::abs(chain.flow(z).value - expect) < 1e-12);
        const Complex zneg(-1.0, 2.0);
        const Complex expect_neg = -std::sqrt(zneg * zneg + 4.0 * T);
        CHECK(std::abs(chain.flow(zneg).value - expect_neg) < 1e-12);
    }
    SUBCASE("trace approximates the vertical segment") {
        const TracePath trace = trace_points(chain, d, 0.0, 100);
        for (std::size_t j = 1; j < trace.points.size(); ++j) {
            REQUIRE(trace.valid[j]);
            const double t = trace.times[j];
            CHECK(std::abs(trace.points[j] - Complex(0.0, 2.0 * std::sqrt(t))) <
                  2e-2 + 2.0 * std::sqrt(1e-3));
        }
    }
}

TEST_CASE("atom tip maps to the driving value") {
    const SlitMapAtom atom{0.7, 0.01};
    const Complex tip(0.7, 2.0 * std::sqrt(0.01));
    // Exact in exact arithmetic; the square-root collision leaves sqrt(ulp).
    CHECK(std::abs(atom.apply(tip) - Complex(0.7, 0.0)) < 1e-7);
    // Single-atom derivative: g'(z) = (z-w)/sqrt((z-w)^2+4 dt).
    const Complex z(1.5, 0.8);
    const MapJet j = atom.jet(z);
    const Complex zeta = z - 0.7;
    CHECK(std::abs(j.f1 - zeta / std::sqrt(zeta * zeta + 0.04)) < 1e-14);
}

TEST_CASE("jets match finite differences on a rough chain") {
    std::vector<SlitMapAtom> atoms = {{0.0, 0.01}, {0.3, 0.02}, {-0.2, 0.015}, {0.1, 0.005}};
    const LoewnerChain chain(std::move(atoms));
    for (const Complex z : {Complex(1.5, 1.0), Complex(-2.0, 0.5), Complex(0.4, 2.5)}) {
        const MapJet jet = chain.jet(z);
        // Step sizes balance truncation against cancellation per order.
        const MapJet fd1 = fd_jet(chain, z, 1e-5);
        const MapJet fd2 = fd_jet(chain, z, 1e-4);
        const MapJet fd3 = fd_jet(chain, z, 1e-3);
        CHECK(std::abs(jet.f1 - fd1.f1) / std::abs(fd1.f1) < 1e-6);
        CHECK(std::abs(jet.f2 - fd2.f2) / std::max(1.0, std::abs(fd2.f2)) < 1e-5);
        CHECK(std::abs(jet.f3 - fd3.f3) / std::max(1.0, std::abs(fd3.f3)) < 1e-4);
    }
    CHECK_THROWS_AS(chain.jet(Complex(0.0, 0.0)), std::domain_error);
}

TEST_CASE("hydrodynamic normalization at large argument") {
    std::vector<SlitMapAtom> atoms;
    for (int i = 0; i < 200; ++i) atoms.push_back({std::sin(0.1 * i), 5e-3});
    const LoewnerChain chain(std::move(atoms));
    const double cap = chain.capacity();
    for (const Complex z : {Complex(1e6, 1e6), Complex(-1e6, 2e6), Complex(0.0, 1e6)}) {
        const Complex err = chain.flow(z).value - z - cap / z;
        // Per-atom rounding random-walks at scale |z| eps sqrt(n); the
        // analytic remainder alone obeys the capacity^2 bound.
        const double roundoff = 10.0 * std::abs(z) * 1e-16 * std::sqrt(200.0);
        CHECK(std::abs(err) <= 10.0 * cap * cap / std::norm(z) + roundoff);
    }
}

TEST_CASE("split chains compose exactly") {
    std::vector<SlitMapAtom> atoms;
    for (int i = 0; i < 50; ++i) atoms.push_back({0.3 * std::cos(0.2 * i), 2e-3});
    const LoewnerChain whole(atoms);
    for (std::size_t split : {1u, 17u, 49u}) {
        const LoewnerChain head(std::vector<SlitMapAtom>(atoms.begin(), atoms.begin() + split));
        const LoewnerChain tail(std::vector<SlitMapAtom>(atoms.begin() + split, atoms.end()));
        const Complex z(0.9, 1.3);
        const Complex via_split = tail.flow(head.flow(z).value).value;
        CHECK(via_split == whole.flow(z).value);
        CHECK(head.capacity() + tail.capacity() == doctest::Approx(whole.capacity()).epsilon(1e-15));
    }
}

TEST_CASE("monotone order of surviving real points") {
    DriverPath d;
    d.grid = TimeGrid(1e-3, 2000);
    d.W.resize(2001);
    double w = 0.0;
    for (std::size_t j = 0; j <= 2000; ++j) {
        d.W[j] = w;
        w += 0.04 * std::sin(0.05 * static_cast<double>(j));
    }
    const LoewnerChain chain = chain_from_driver(d);
    double prev = -1e18;
    for (double x : {2.0, 2.5, 3.0, 4.0, 6.0}) {
        const FlowResult r = chain.flow_real(x);
        REQUIRE_FALSE(r.swallowed);
        CHECK(r.value.real() > prev);
        prev = r.value.real();
    }
}

TEST_CASE("kappa > 4 swallows fixed boundary points at the Bessel hitting rate") {
    // The gap (g_t(x) - W_t)/sqrt(kappa) is a Bessel process of dimension
    // 1 + 4/kappa < 2, absorbed at 0 at time x^2/(2 kappa G) with G a
    // Gamma((2-d)/2) variable, so P(tau_x <= T) has a closed form. This both
    // bounds the swallowing probability and checks its growth in T.
    const double kappa = 6.0;
    const double nu = 0.5 * (2.0 - (1.0 + 4.0 / kappa));  // 1/6
    auto p_swallowed = [&](double T) {
        const double arg = 1.0 / (2.0 * kappa * T);
        // gamma(nu, arg)/Gamma(nu) via the small-argument series.
        double term = std::pow(arg, nu) / nu;
        double sum = term;
        for (int k = 1; k < 8; ++k) {
            term *= -arg * (nu + k - 1) / (static_cast<double>(k) * (nu + k));
            sum += term;
        }
        return 1.0 - sum / std::tgamma(nu);
    };

    const double dt = 1e-3;
    const int n = 400;
    auto mc_swallowed = [&](double T) {
        const auto steps = static_cast<std::size_t>(T / dt);
        int swallowed = 0;
        for (int r = 0; r < n; ++r) {
            RngStream rng(1234, static_cast<std::uint64_t>(r));
            double w = 0.0, x = 1.0;
            bool gone = false;
            for (std::size_t j = 0; j < steps && !gone; ++j) {
                const SlitMapAtom atom{w, dt};
                const double gap = x - w;
                if (std::abs(gap) <= atom.swallow_guard() || gap < 0.0) {
                    gone = true;
                    break;
                }
                x = atom.apply_real(x);
                w += std::sqrt(kappa * dt) * rng.next_gaussian();
            }
            if (gone) ++swallowed;
        }
        return static_cast<double>(swallowed) / n;
    };

    const double p25 = mc_swallowed(25.0);
    const double p100 = mc_swallowed(100.0);
    CHECK(p100 > p25);  // monotone in the horizon
    CHECK(p25 == doctest::Approx(p_swallowed(25.0)).epsilon(0.12));
    CHECK(p100 == doctest::Approx(p_swallowed(100.0)).epsilon(0.12));
    CHECK(p100 > 0.6);
}

TEST_CASE("trace of a simple-phase path stays in the open half-plane") {
    // kappa = 8/3 driver; interior trace points keep a positive height.
    RngStream rng(77, 0);
    DriverPath d;
    d.grid = TimeGrid(1e-3, 1000);
    d.W.resize(1001);
    d.W[0] = 0.0;
    for (std::size_t j = 1; j <= 1000; ++j)
        d.W[j] = d.W[j - 1] + std::sqrt(8.0 / 3.0 * 1e-3) * rng.next_gaussian();
    const LoewnerChain chain = chain_from_driver(d);
    const TracePath trace = trace_points(chain, d, 0.0, 100);
    for (std::size_t j = 0; j < trace.points.size(); ++j) {
        REQUIRE(trace.valid[j]);
        if (trace.times[j] >= 0.1) CHECK(trace.points[j].imag() > 0.0);
    }
}
