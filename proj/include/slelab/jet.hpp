#pragma once

#include <complex>

namespace slelab {

using Complex = std::complex<double>;

/**
 * Value and first three derivatives of an analytic map at a point: the
 * currency for h', h'' and the Schwarzian derivative. At a real point outside
 * a hull's base the value is real and f1 > 0.
 */
struct MapJet {
    Complex f{0.0, 0.0};
    Complex f1{1.0, 0.0};
    Complex f2{0.0, 0.0};
    Complex f3{0.0, 0.0};

    static MapJet identity(Complex z) { return {z, {1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}; }

    /// Jet of outer applied after *this (outer must be the jet of the outer
    /// map at this->f). Third-order chain rule.
    MapJet then(const MapJet& outer) const {
        MapJet r;
        r.f = outer.f;
        r.f1 = outer.f1 * f1;
        r.f2 = outer.f2 * f1 * f1 + outer.f1 * f2;
        r.f3 = outer.f3 * f1 * f1 * f1 + 3.0 * outer.f2 * f1 * f2 + outer.f1 * f3;
        return r;
    }

    /// S f = f'''/f' - (3/2)(f''/f')^2.
    Complex schwarzian() const {
        const Complex q = f2 / f1;
        return f3 / f1 - 1.5 * q * q;
    }
};

}  // namespace slelab
