#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "slelab/hulls.hpp"

using namespace slelab;

namespace {

PolylineHull semicircle_polyline(const SemidiskHull& disk, int n) {
    PolylineHull poly;
    for (int i = 0; i <= n; ++i) {
        const double th = M_PI * (1.0 - static_cast<double>(i) / n);
        poly.boundary.emplace_back(disk.x + disk.r * std::cos(th), disk.r * std::sin(th));
    }
    poly.boundary.front() = {disk.x - disk.r, 0.0};
    poly.boundary.back() = {disk.x + disk.r, 0.0};
    return poly;
}

double fd1(const HullMap& m, double x, double h) {
    return (m.map_real(x + h) - m.map_real(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("semidisk closed form") {
    const SemidiskHull disk{1.0, 0.3};
    const MapJet j = semidisk_map_jet_real(disk, 0.0);
    CHECK(j.f.real() == doctest::Approx(-0.09).epsilon(1e-14));
    CHECK(j.f1.real() == doctest::Approx(0.91).epsilon(1e-14));
    CHECK(j.f2.real() == doctest::Approx(-0.18).epsilon(1e-14));
    CHECK(j.f3.real() == doctest::Approx(-0.54).epsilon(1e-14));

    // Schwarzian at the origin, frozen from the closed-form jet arithmetic.
    const double expect = -0.54 / 0.91 - 1.5 * std::pow(0.18 / 0.91, 2);
    CHECK(j.schwarzian().real() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(j.schwarzian().real() == doctest::Approx(-0.6521).epsilon(8e-4));

    // Boundary maps to the real line; the top maps to the center.
    const MapJet top = semidisk_map_jet(disk, Complex(1.0, 0.3));
    CHECK(std::abs(top.f - Complex(1.0, 0.0)) < 1e-14);

    // Normalization at large |z|.
    const Complex far(2e5, 3e5);
    CHECK(std::abs(semidisk_map_jet(disk, far).f - far) < 1e-6);

    CHECK_THROWS_AS(semidisk_map_jet(disk, Complex(1.05, 0.1)), std::domain_error);
    CHECK_THROWS_AS(semidisk_map_jet_real(disk, 0.9), std::domain_error);
    CHECK_THROWS_AS((SemidiskHull{0.2, 0.3}.validate()), std::invalid_argument);

    CHECK(disk.hcap() == doctest::Approx(0.045).epsilon(1e-15));
    CHECK(HullMap::from_semidisk(disk).hcap() == doctest::Approx(0.045).epsilon(1e-15));
    CHECK(HullMap::empty().hcap() == 0.0);
}

TEST_CASE("zipper fit reproduces the semidisk map") {
    const SemidiskHull disk{1.0, 0.3};
    const PolylineHull poly = semicircle_polyline(disk, 200);
    const double seg = M_PI * disk.r / 200.0;
    const HullMap fit = fit_hull_map(poly, seg);
    const MapJet exact = semidisk_map_jet_real(disk, 0.0);
    const MapJet fitted = fit.jet_real(0.0);
    CHECK(std::abs(fitted.f1.real() - exact.f1.real()) < 1e-3);
    CHECK(std::abs(fit.hcap() - disk.hcap()) < 2e-3);

    SUBCASE("halving the resolution improves the derivative") {
        const HullMap fine = fit_hull_map(poly, seg / 2.0);
        const double e0 = std::abs(fitted.f1.real() - exact.f1.real());
        const double e1 = std::abs(fine.jet_real(0.0).f1.real() - exact.f1.real());
        CHECK(e1 * 1.5 <= e0);
    }
    SUBCASE("normalization of the fitted map") {
        const Complex far(0.0, 1e6);
        CHECK(std::abs(fit.jet(far).f - far) <= 1e-3 * fit.hcap());
    }
    SUBCASE("derivative monotonicity left of the hull") {
        double prev = 1.0;
        for (double x : {-3.0, -1.0, 0.0, 0.3, 0.55}) {
            const double d = fit.jet_real(x).f1.real();
            CHECK(d <= prev + 1e-6);
            CHECK(d > 0.0);
            prev = d;
        }
        // Exact on the closed form.
        prev = 1.0;
        for (double x : {-3.0, -1.0, 0.0, 0.3, 0.55}) {
            const double d = semidisk_map_jet_real(disk, x).f1.real();
            CHECK(d <= prev);
            CHECK(d > 0.0);
            prev = d;
        }
    }
    SUBCASE("Schwarzian is negative left of the hull") {
        for (double x : {-2.0, -0.5, 0.0, 0.4}) {
            CHECK(fit.jet_real(x).schwarzian().real() < 0.0);
            CHECK(semidisk_map_jet_real(disk, x).schwarzian().real() < 0.0);
        }
    }
}

TEST_CASE("tiny slit polyline has capacity h^2/4") {
    const double x0 = 1.0, h = 0.05;
    PolylineHull slit;
    for (int i = 0; i <= 20; ++i) slit.boundary.emplace_back(x0, h * i / 20.0);
    for (int i = 19; i >= 0; --i) slit.boundary.emplace_back(x0 + 1e-9, h * i / 20.0);
    const HullMap fit = fit_hull_map(slit, h);
    CHECK(fit.hcap() == doctest::Approx(h * h / 4.0).epsilon(1e-6));
}

TEST_CASE("fitted jets match finite differences at random real points") {
    const SemidiskHull disk{1.0, 0.3};
    const HullMap fit = fit_hull_map(semicircle_polyline(disk, 150), M_PI * 0.3 / 150.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> left(-3.0, 0.6);
    for (int i = 0; i < 20; ++i) {
        const double x = left(rng);
        const MapJet j = fit.jet_real(x);
        CHECK(std::abs(j.f1.real() - fd1(fit, x, 1e-6)) / std::abs(j.f1.real()) < 1e-6);
    }
}

TEST_CASE("composition") {
    const SemidiskHull d1{1.0, 0.25};
    const SemidiskHull d2{2.5, 0.3};
    const HullMap m1 = HullMap::from_semidisk(d1);
    const HullMap m2 = HullMap::from_semidisk(d2);

    SUBCASE("empty element is the identity") {
        const HullMap both = compose_hulls(m1, HullMap::empty());
        const Complex z(0.2, 1.0);
        CHECK(both.map(z) == m1.map(z));
        CHECK(both.hcap() == m1.hcap());
    }
    SUBCASE("composed jets obey the chain rule") {
        // d2 in image coordinates of phi_{d1}: valid since they are disjoint
        // and far apart (the image hull stays right of the base of d2's).
        const HullMap both = compose_hulls(m1, m2);
        const double x = -0.5;
        const MapJet j = both.jet_real(x);
        CHECK(std::abs(j.f1.real() - fd1(both, x, 1e-6)) / j.f1.real() < 1e-6);
        CHECK(both.hcap() == doctest::Approx(m1.hcap() + m2.hcap()).epsilon(1e-15));
    }
    SUBCASE("overlapping hulls are rejected") {
        const HullMap overlap = HullMap::from_semidisk(SemidiskHull{1.1, 0.3});
        CHECK_THROWS_AS(compose_hulls(m1, overlap), std::invalid_argument);
    }
    SUBCASE("either admissible order gives the same union map") {
        // The union hull's map, assembled in both orders: the second hull is
        // pushed into image coordinates and refitted at high resolution, so
        // the two routes must agree wherever both are defined.
        auto union_map = [](const SemidiskHull& first, const SemidiskHull& second) {
            const HullMap mf = HullMap::from_semidisk(first);
            PolylineHull img;
            for (const Complex& z : semidisk_boundary_samples(second, 1200))
                img.boundary.push_back(mf.map(z));
            img.boundary.front() = {img.boundary.front().real(), 0.0};
            img.boundary.back() = {img.boundary.back().real(), 0.0};
            const double seg = M_PI * second.r / 1200.0;
            return compose_hulls(mf, fit_hull_map(img, seg));
        };
        const HullMap ab = union_map(d1, d2);
        const HullMap ba = union_map(d2, d1);
        for (int i = 0; i < 10; ++i) {
            const Complex z(-1.0 + 0.3 * i, 3.0 + 0.4 * i);
            CHECK(std::abs(ab.map(z) - ba.map(z)) < 1e-4);
        }
        CHECK(std::abs(ab.hcap() - ba.hcap()) < 1e-4);
    }
}

TEST_CASE("mirror symmetry") {
    const SemidiskHull disk{1.0, 0.3};
    const SemidiskHull mirrored{-1.0, 0.3};
    SUBCASE("closed form is exactly odd") {
        for (double x : {-0.5, 0.0, 0.4, 2.0}) {
            CHECK(semidisk_map_jet_real(mirrored, -x).f.real() ==
                  doctest::Approx(-semidisk_map_jet_real(disk, x).f.real()).epsilon(1e-15));
        }
    }
    SUBCASE("fitted maps are odd to high accuracy") {
        // Mirror the polyline without reversing it, so the zipper absorbs the
        // mirrored vertices in the mirrored order and the atoms pair exactly.
        const PolylineHull poly = semicircle_polyline(disk, 150);
        PolylineHull poly_m;
        for (const Complex& b : poly.boundary) poly_m.boundary.emplace_back(-b.real(), b.imag());
        const double seg = M_PI * 0.3 / 150.0;
        const HullMap fit = fit_hull_map(poly, seg);
        const HullMap fit_m = fit_hull_map(poly_m, seg);
        for (double x : {-0.5, 0.0, 0.5}) {
            CHECK(fit_m.map_real(-x) == doctest::Approx(-fit.map_real(x)).epsilon(1e-8));
        }
    }
}

TEST_CASE("boundary samples cluster at the base") {
    const SemidiskHull disk{1.0, 0.3};
    const auto pts = semidisk_boundary_samples(disk, 48);
    CHECK(pts.size() == 48);
    CHECK(pts.front() == Complex(0.7, 0.0));
    CHECK(pts.back() == Complex(1.3, 0.0));
    // End spacing tighter than middle spacing.
    const double end_gap = std::abs(pts[1] - pts[0]);
    const double mid_gap = std::abs(pts[24] - pts[23]);
    CHECK(end_gap < 0.5 * mid_gap);
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) CHECK(pts[i].imag() > 0.0);
}

TEST_CASE("pushforward through a chain") {
    const SemidiskHull disk{3.0, 0.4};
    SUBCASE("identity chain returns the samples") {
        const LoewnerChain id;
        const Pushforward p = pushforward_hull(id, disk, 32);
        CHECK_FALSE(p.swallowed);
        CHECK(p.image.boundary.size() == 32);
        CHECK(std::abs(p.image.boundary[10] - semidisk_boundary_samples(disk, 32)[10]) < 1e-15);
    }
    SUBCASE("zero driver flows points by the closed form") {
        std::vector<SlitMapAtom> atoms(100, SlitMapAtom{0.0, 1e-2});
        const LoewnerChain chain(std::move(atoms));
        const Pushforward p = pushforward_hull(chain, disk, 32);
        REQUIRE_FALSE(p.swallowed);
        const auto samples = semidisk_boundary_samples(disk, 32);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const Complex expect = std::sqrt(samples[i] * samples[i] + 4.0);
            CHECK(std::abs(p.image.boundary[i] - expect) < 1e-9);
        }
    }
    SUBCASE("a chain reaching the hull reports swallowed") {
        // Slits marching rightward faster than the base points can flee.
        std::vector<SlitMapAtom> atoms;
        for (int i = 0; i <= 90; ++i) atoms.push_back({i * 0.05, 1e-3});
        const LoewnerChain chain(std::move(atoms));
        const Pushforward p = pushforward_hull(chain, disk, 32);
        CHECK(p.swallowed);
    }
}

TEST_CASE("polyline csv and validation") {
    std::istringstream csv("0.5,0\n0.6,0.2\n0.8,0.25\n1.0,0\n");
    const PolylineHull hull = read_polyline_csv(csv);
    CHECK(hull.boundary.size() == 4);
    CHECK(hull.base_lo() == doctest::Approx(0.5));
    CHECK(hull.base_hi() == doctest::Approx(1.0));

    PolylineHull bad;
    bad.boundary = {{0.5, 0.0}, {1.0, 0.3}, {0.6, 0.3}, {0.9, -0.0}};
    bad.boundary.emplace_back(1.2, 0.0);
    // Crossing legs: (0.5,0)->(1,0.3) and (0.6,0.3)->(0.9,0) intersect.
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    PolylineHull straddle;
    straddle.boundary = {{-0.5, 0.0}, {0.2, 0.4}, {0.7, 0.0}};
    CHECK_THROWS_AS(straddle.validate(), std::invalid_argument);
}
