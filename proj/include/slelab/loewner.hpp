#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "slelab/drivers.hpp"
#include "slelab/jet.hpp"

namespace slelab {

/**
 * Elementary slit map: the exact solution of the chordal Loewner equation
 * over one step with the driving value held at w. Removes the vertical
 * segment [w, w + 2i sqrt(dt)] and satisfies g(z) = z + 2 dt/z + O(1/z^2).
 */
struct SlitMapAtom {
    double w = 0.0;
    double dt = 0.0;

    /// Forward map, branch taking the upper half-plane to itself.
    Complex apply(Complex z) const {
        const Complex zeta = z - w;
        Complex s = std::sqrt(zeta * zeta + 4.0 * dt);
        if (zeta.real() < 0.0) s = -s;
        return w + s;
    }

    /// Forward map restricted to the real line (side-preserving branch).
    double apply_real(double x) const {
        const double zeta = x - w;
        const double s = std::sqrt(zeta * zeta + 4.0 * dt);
        return zeta >= 0.0 ? w + s : w - s;
    }

    /// Inverse map, branch into the upper half-plane.
    Complex apply_inverse(Complex z) const {
        const Complex zeta = z - w;
        Complex s = std::sqrt(zeta * zeta - 4.0 * dt);
        if (zeta.real() < 0.0) s = -s;
        return w + s;
    }

    /// Third-order jet of the forward map at z (z not on the slit).
    MapJet jet(Complex z) const {
        const Complex zeta = z - w;
        Complex s = std::sqrt(zeta * zeta + 4.0 * dt);
        if (zeta.real() < 0.0) s = -s;
        MapJet j;
        j.f = w + s;
        j.f1 = zeta / s;
        const Complex s3 = s * s * s;
        j.f2 = 4.0 * dt / s3;
        j.f3 = -12.0 * dt * zeta / (s3 * s * s);
        return j;
    }

    /// A real point within this distance of the driving value counts as
    /// swallowed; the merge is a square-root collision and this guard is
    /// validated on the W = 0 closed form.
    double swallow_guard() const { return 1e-9 + 2.0 * std::sqrt(dt) * 1e-3; }

    /// Complex pre-images entering the removed slit's base disk are swallowed.
    double base_disk_radius() const { return 2.0 * std::sqrt(dt); }
};

/// Outcome of flowing a point through a chain.
struct FlowResult {
    Complex value{0.0, 0.0};
    bool swallowed = false;
    double swallowed_at = 0.0;   // chain time of the swallowing atom's start
    std::size_t atom_index = 0;  // index of that atom

    static FlowResult alive(Complex v) { return {v, false, 0.0, 0}; }
    static FlowResult gone(double t, std::size_t idx) { return {{0.0, 0.0}, true, t, idx}; }
};

/**
 * Ordered composition of slit-map atoms: g_t = (last atom) o ... o (first).
 * Immutable once built; every evaluation is pure, so chains can be shared
 * across threads freely. Capacity is additive under concatenation.
 */
class LoewnerChain {
public:
    LoewnerChain() = default;
    explicit LoewnerChain(std::vector<SlitMapAtom> atoms) : atoms_(std::move(atoms)) {}

    const std::vector<SlitMapAtom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }
    void push_back(const SlitMapAtom& a) { atoms_.push_back(a); }
    void append(const LoewnerChain& other) {
        atoms_.insert(atoms_.end(), other.atoms_.begin(), other.atoms_.end());
    }

    double duration() const {
        double t = 0.0;
        for (const auto& a : atoms_) t += a.dt;
        return t;
    }
    double capacity() const { return 2.0 * duration(); }

    FlowResult flow(Complex z) const;
    FlowResult flow_real(double x) const;
    /// Swallow time of a real point, or nullopt if it survives the chain.
    std::optional<double> swallow_time(double x) const;
    /// Third-order jet of the composed map; throws if z is swallowed.
    MapJet jet(Complex z) const;

private:
    std::vector<SlitMapAtom> atoms_;
};

/// One atom per driver step, w frozen at the step's left endpoint.
LoewnerChain chain_from_driver(const DriverPath& driver);

/// Approximate trace points: gamma_{t_j} for j = 0, stride, 2*stride, ...
struct TracePath {
    std::vector<double> times;
    std::vector<Complex> points;
    std::vector<bool> valid;
};

/**
 * Trace via inverse atoms applied in reverse order to W_j + i*lift. A branch
 * landing below the real axis is retried with a doubled lift up to three
 * times, then marked invalid. lift defaults to sqrt(dt)/10 when <= 0.
 */
TracePath trace_points(const LoewnerChain& chain, const DriverPath& driver, double lift = 0.0,
                       std::size_t stride = 1);

void write_trace_csv(std::ostream& os, const TracePath& trace);
void write_chain_txt(std::ostream& os, const LoewnerChain& chain);

}  // namespace slelab
