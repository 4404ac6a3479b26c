#include "slelab/hulls.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace slelab {

void SemidiskHull::validate() const {
    if (!(r > 0.0)) throw std::invalid_argument("SemidiskHull: radius must be positive");
    if (!(std::abs(x) - r > 0.0))
        throw std::invalid_argument("SemidiskHull: base must avoid the origin (|x| > r)");
}

MapJet semidisk_map_jet(const SemidiskHull& hull, Complex z) {
    if (hull.contains(z)) throw std::domain_error("semidisk_map_jet: point inside hull");
    const Complex d = z - hull.x;
    const double r2 = hull.r * hull.r;
    const Complex d2 = d * d;
    MapJet j;
    j.f = z + r2 / d;
    j.f1 = 1.0 - r2 / d2;
    j.f2 = 2.0 * r2 / (d2 * d);
    j.f3 = -6.0 * r2 / (d2 * d2);
    return j;
}

MapJet semidisk_map_jet_real(const SemidiskHull& hull, double x) {
    if (std::abs(x - hull.x) < hull.r)
        throw std::domain_error("semidisk_map_jet_real: point inside hull base");
    const double d = x - hull.x;
    const double r2 = hull.r * hull.r;
    const double d2 = d * d;
    MapJet j;
    j.f = x + r2 / d;
    j.f1 = 1.0 - r2 / d2;
    j.f2 = 2.0 * r2 / (d2 * d);
    j.f3 = -6.0 * r2 / (d2 * d2);
    return j;
}

namespace {

bool segments_intersect(Complex a, Complex b, Complex c, Complex d) {
    auto cross = [](Complex u, Complex v) { return u.real() * v.imag() - u.imag() * v.real(); };
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

// Real-arithmetic slit-atom jet at a real point off the slit base. A point
// inside the fold interval [w - 2 sqrt(dt), w + 2 sqrt(dt)] is a preimage of
// the removed slit, i.e. hull material at this stage of the composition.
MapJet atom_jet_real(const SlitMapAtom& a, double x) {
    const double zeta = x - a.w;
    if (std::abs(zeta) < 2.0 * std::sqrt(a.dt))
        throw std::domain_error("hull map: point inside hull base");
    const double s0 = std::sqrt(zeta * zeta + 4.0 * a.dt);
    const double s = zeta >= 0.0 ? s0 : -s0;
    MapJet j;
    j.f = a.w + s;
    j.f1 = zeta / s;
    const double s3 = s * s * s;
    j.f2 = 4.0 * a.dt / s3;
    j.f3 = -12.0 * a.dt * zeta / (s3 * s * s);
    return j;
}

MapJet semidisk_jet_at(const SemidiskHull& disk, const MapJet& base, bool real_path) {
    if (real_path) return base.then(semidisk_map_jet_real(disk, base.f.real()));
    return base.then(semidisk_map_jet(disk, base.f));
}

}  // namespace

void PolylineHull::validate(bool check_simple) const {
    if (boundary.size() < 3)
        throw std::invalid_argument("PolylineHull: need at least three boundary points");
    const Complex a = boundary.front();
    const Complex b = boundary.back();
    if (a.imag() != 0.0 || b.imag() != 0.0)
        throw std::invalid_argument("PolylineHull: endpoints must be real");
    const bool pos = a.real() > 0.0 && b.real() > 0.0;
    const bool neg = a.real() < 0.0 && b.real() < 0.0;
    if (!pos && !neg)
        throw std::invalid_argument("PolylineHull: base must sit strictly on one side of 0");
    for (std::size_t i = 1; i + 1 < boundary.size(); ++i)
        if (!(boundary[i].imag() > 0.0))
            throw std::invalid_argument("PolylineHull: interior points must be in the open half-plane");
    if (check_simple) {
        for (std::size_t i = 0; i + 1 < boundary.size(); ++i)
            for (std::size_t j = i + 2; j + 1 < boundary.size(); ++j)
                if (segments_intersect(boundary[i], boundary[i + 1], boundary[j], boundary[j + 1]))
                    throw std::invalid_argument("PolylineHull: boundary is self-intersecting");
    }
}

HullMap HullMap::from_semidisk(const SemidiskHull& hull) {
    hull.validate();
    HullMap m;
    Piece p;
    p.is_disk = true;
    p.disk = hull;
    m.pieces_.push_back(p);
    m.hcap_ = hull.hcap();
    m.base_lo_ = hull.x - hull.r;
    m.base_hi_ = hull.x + hull.r;
    return m;
}

HullMap HullMap::from_atoms(std::vector<SlitMapAtom> atoms, double base_lo, double base_hi) {
    HullMap m;
    m.pieces_.reserve(atoms.size());
    for (const auto& a : atoms) {
        Piece p;
        p.atom = a;
        m.pieces_.push_back(p);
        m.hcap_ += a.dt;
    }
    m.base_lo_ = base_lo;
    m.base_hi_ = base_hi;
    return m;
}

Complex HullMap::map(Complex z) const { return jet(z).f; }
double HullMap::map_real(double x) const { return jet_real(x).f.real(); }

MapJet HullMap::jet(Complex z) const {
    MapJet j = MapJet::identity(z);
    for (const auto& p : pieces_)
        j = p.is_disk ? semidisk_jet_at(p.disk, j, false) : j.then(p.atom.jet(j.f));
    return j;
}

MapJet HullMap::jet_real(double x) const {
    // Hull membership is decided per piece: the fold interval of each atom
    // and the closed semidisk both reject their own preimages. An aggregate
    // footprint test would be too crude once a fit carries near-flat slits.
    MapJet j = MapJet::identity(Complex(x, 0.0));
    for (const auto& p : pieces_)
        j = p.is_disk ? semidisk_jet_at(p.disk, j, true) : j.then(atom_jet_real(p.atom, j.f.real()));
    return j;
}

double hull_capacity(const HullMap& map) { return map.hcap(); }

std::vector<SlitMapAtom> zipper_fit(std::vector<Complex> pts) {
    std::vector<SlitMapAtom> atoms;
    atoms.reserve(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Complex q = pts[k];
        const double y = q.imag();
        // A vertex at (numerically) zero height is already absorbed.
        if (y <= 1e-13 * (1.0 + std::abs(q.real()))) continue;
        const SlitMapAtom a{q.real(), 0.25 * y * y};
        atoms.push_back(a);
        for (std::size_t j = k + 1; j < pts.size(); ++j) {
            Complex z = a.apply(pts[j]);
            if (z.imag() < 0.0) z = {z.real(), 0.0};
            pts[j] = z;
        }
    }
    return atoms;
}

HullMap fit_hull_map(const PolylineHull& hull, double resolution) {
    if (!(resolution > 0.0)) throw std::invalid_argument("fit_hull_map: resolution must be positive");
    hull.validate();
    std::vector<Complex> pts;
    pts.reserve(hull.boundary.size() * 2);
    for (std::size_t i = 0; i + 1 < hull.boundary.size(); ++i) {
        const Complex a = hull.boundary[i];
        const Complex b = hull.boundary[i + 1];
        const double len = std::abs(b - a);
        const auto pieces = static_cast<std::size_t>(std::ceil(len / resolution));
        for (std::size_t p = (i == 0 ? 1 : 1); p <= std::max<std::size_t>(pieces, 1); ++p) {
            const double u = static_cast<double>(p) / static_cast<double>(std::max<std::size_t>(pieces, 1));
            pts.push_back(a + u * (b - a));
        }
    }
    return HullMap::from_atoms(zipper_fit(std::move(pts)), hull.base_lo(), hull.base_hi());
}

MapJet hull_map_jet(const HullMap& map, double x) { return map.jet_real(x); }

HullMap compose_hulls(const HullMap& a, const HullMap& b) {
    // phi_{A.B} = phi_B o phi_A: apply a's pieces first. b must live in the
    // image plane of phi_A; its base may not cross a's image base footprint.
    if (!a.is_empty() && !b.is_empty()) {
        const double ia_lo = a.map_real(a.base_lo() - 1e-12 * (1.0 + std::abs(a.base_lo())));
        const double ia_hi = a.map_real(a.base_hi() + 1e-12 * (1.0 + std::abs(a.base_hi())));
        if (b.base_lo() < ia_hi && b.base_hi() > ia_lo)
            throw std::invalid_argument("compose_hulls: hulls overlap");
    }
    HullMap m;
    m.pieces_ = a.pieces_;
    m.pieces_.insert(m.pieces_.end(), b.pieces_.begin(), b.pieces_.end());
    m.hcap_ = a.hcap_ + b.hcap_;
    if (a.is_empty()) {
        m.base_lo_ = b.base_lo_;
        m.base_hi_ = b.base_hi_;
    } else if (b.is_empty()) {
        m.base_lo_ = a.base_lo_;
        m.base_hi_ = a.base_hi_;
    } else {
        m.base_lo_ = a.base_lo_;
        m.base_hi_ = a.base_hi_;
    }
    return m;
}

std::vector<Complex> semidisk_boundary_samples(const SemidiskHull& hull, std::size_t n) {
    hull.validate();
    if (n < 3) throw std::invalid_argument("semidisk_boundary_samples: need n >= 3");
    const std::size_t m = n - 1;  // intervals
    std::vector<double> w(m);
    for (std::size_t j = 0; j < m; ++j)
        w[j] = std::min({std::pow(1.2, static_cast<double>(j)),
                         std::pow(1.2, static_cast<double>(m - 1 - j)), 30.0});
    double total = 0.0;
    for (double v : w) total += v;
    std::vector<Complex> pts(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = i == 0 ? 0.0 : (i == n - 1 ? 1.0 : acc / total);
        const double theta = M_PI * (1.0 - u);
        pts[i] = Complex(hull.x + hull.r * std::cos(theta), hull.r * std::sin(theta));
        if (i < m) acc += w[i];
    }
    pts.front() = Complex(hull.x - hull.r, 0.0);
    pts.back() = Complex(hull.x + hull.r, 0.0);
    return pts;
}

std::vector<Complex> resample_polyline(const PolylineHull& hull, std::size_t n) {
    hull.validate(false);
    if (n < 3) throw std::invalid_argument("resample_polyline: need n >= 3");
    std::vector<double> cum(hull.boundary.size(), 0.0);
    for (std::size_t i = 1; i < hull.boundary.size(); ++i)
        cum[i] = cum[i - 1] + std::abs(hull.boundary[i] - hull.boundary[i - 1]);
    const double total_len = cum.back();
    const std::size_t m = n - 1;
    std::vector<double> w(m);
    for (std::size_t j = 0; j < m; ++j)
        w[j] = std::min({std::pow(1.2, static_cast<double>(j)),
                         std::pow(1.2, static_cast<double>(m - 1 - j)), 30.0});
    double total_w = 0.0;
    for (double v : w) total_w += v;
    std::vector<Complex> pts(n);
    double acc = 0.0;
    std::size_t seg = 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = i == 0 ? 0.0 : (i == n - 1 ? 1.0 : acc / total_w);
        const double s = u * total_len;
        while (seg + 1 < cum.size() && cum[seg] < s) ++seg;
        const double s0 = cum[seg - 1];
        const double s1 = cum[seg];
        const double frac = s1 > s0 ? (s - s0) / (s1 - s0) : 0.0;
        pts[i] = hull.boundary[seg - 1] + frac * (hull.boundary[seg] - hull.boundary[seg - 1]);
        if (i < m) acc += w[i];
    }
    pts.front() = hull.boundary.front();
    pts.back() = hull.boundary.back();
    return pts;
}

Pushforward pushforward_hull(const LoewnerChain& chain, const std::vector<Complex>& samples) {
    Pushforward out;
    out.image.boundary.reserve(samples.size());
    for (const Complex& z : samples) {
        const FlowResult r = chain.flow(z);
        if (r.swallowed) {
            out.swallowed = true;
            out.swallowed_at = r.swallowed_at;
            return out;
        }
        out.image.boundary.push_back(r.value);
    }
    if (!out.image.boundary.empty()) {
        auto& b = out.image.boundary;
        b.front() = Complex(b.front().real(), 0.0);
        b.back() = Complex(b.back().real(), 0.0);
    }
    return out;
}

Pushforward pushforward_hull(const LoewnerChain& chain, const SemidiskHull& hull, std::size_t n) {
    return pushforward_hull(chain, semidisk_boundary_samples(hull, n));
}

Pushforward pushforward_hull(const LoewnerChain& chain, const PolylineHull& hull, std::size_t n) {
    return pushforward_hull(chain, resample_polyline(hull, n));
}

PolylineHull read_polyline_csv(std::istream& is) {
    PolylineHull hull;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double re = 0.0, im = 0.0;
        if (ss >> re >> im) hull.boundary.emplace_back(re, im);
    }
    hull.validate();
    return hull;
}

}  // namespace slelab
