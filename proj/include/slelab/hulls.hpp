#pragma once

#include <iosfwd>
#include <vector>

#include "slelab/jet.hpp"
#include "slelab/loewner.hpp"

namespace slelab {

/**
 * Half-disk hull with base on the real axis: the closed-form "+ hull".
 * x - r > 0 puts the base in the strictly positive axis; the mirrored
 * variant (x + r < 0) serves left-side experiments.
 */
struct SemidiskHull {
    double x = 1.0;
    double r = 0.3;

    void validate() const;
    bool mirrored() const { return x < 0.0; }
    bool contains(Complex z) const { return z.imag() >= 0.0 && std::abs(z - Complex(x, 0)) < r; }
    double hcap() const { return 0.5 * r * r; }
};

/// phi(z) = z + r^2/(z-x) and its first three derivatives; rejects points
/// inside the closed semidisk.
MapJet semidisk_map_jet(const SemidiskHull& hull, Complex z);
MapJet semidisk_map_jet_real(const SemidiskHull& hull, double x);

/**
 * Hull bounded by a simple polyline from a real start to a real end through
 * the open upper half-plane (both endpoints strictly positive, or strictly
 * negative for the mirrored variant).
 */
struct PolylineHull {
    std::vector<Complex> boundary;

    void validate(bool check_simple = true) const;
    double base_lo() const { return std::min(boundary.front().real(), boundary.back().real()); }
    double base_hi() const { return std::max(boundary.front().real(), boundary.back().real()); }
};

/**
 * Normalized hull map phi_A: closed form for a semidisk, or a slit-map atom
 * chain fitted to a polyline (the hull's own Loewner parametrization).
 * Pieces apply in order; hcap accumulates exactly piece by piece.
 */
class HullMap {
public:
    struct Piece {
        bool is_disk = false;
        SemidiskHull disk;
        SlitMapAtom atom;
    };

    static HullMap empty() { return HullMap(); }
    static HullMap from_semidisk(const SemidiskHull& hull);
    static HullMap from_atoms(std::vector<SlitMapAtom> atoms, double base_lo, double base_hi);

    Complex map(Complex z) const;
    double map_real(double x) const;
    MapJet jet(Complex z) const;
    /// Real-arithmetic jet at a real point outside the base interval.
    MapJet jet_real(double x) const;

    double hcap() const { return hcap_; }
    double base_lo() const { return base_lo_; }
    double base_hi() const { return base_hi_; }
    bool is_empty() const { return pieces_.empty(); }
    const std::vector<Piece>& pieces() const { return pieces_; }

    friend HullMap compose_hulls(const HullMap& a, const HullMap& b);

private:
    std::vector<Piece> pieces_;
    double hcap_ = 0.0;
    double base_lo_ = 0.0;
    double base_hi_ = 0.0;
};

double hull_capacity(const HullMap& map);

/**
 * Fit the normalized map of a polyline hull by absorbing boundary vertices
 * one at a time with vertical slit atoms. Segments are subdivided to the
 * requested resolution first; the composed chain removes a hull within that
 * distance of the polyline hull.
 */
HullMap fit_hull_map(const PolylineHull& hull, double resolution);

/// Zipper core without validation: absorbs the given boundary points in
/// order. Exposed for the hot refit path.
std::vector<SlitMapAtom> zipper_fit(std::vector<Complex> pts);

MapJet hull_map_jet(const HullMap& map, double x);

HullMap compose_hulls(const HullMap& a, const HullMap& b);

/**
 * Boundary samples of a semidisk, parameter-uniform with geometric
 * densification (ratio 1.2) toward the two real base points, where
 * swallowing begins. First and last samples are the base endpoints.
 */
std::vector<Complex> semidisk_boundary_samples(const SemidiskHull& hull, std::size_t n);

/// Resample a polyline by arclength with the same end-clustered spacing.
std::vector<Complex> resample_polyline(const PolylineHull& hull, std::size_t n);

struct Pushforward {
    bool swallowed = false;
    double swallowed_at = 0.0;
    PolylineHull image;
};

/// Flow boundary samples through the chain; swallowed means the chain's hull
/// has met the sampled hull at this resolution.
Pushforward pushforward_hull(const LoewnerChain& chain, const std::vector<Complex>& samples);
Pushforward pushforward_hull(const LoewnerChain& chain, const SemidiskHull& hull, std::size_t n);
Pushforward pushforward_hull(const LoewnerChain& chain, const PolylineHull& hull, std::size_t n);

/// CSV with one "re,im" pair per line.
PolylineHull read_polyline_csv(std::istream& is);

}  // namespace slelab
