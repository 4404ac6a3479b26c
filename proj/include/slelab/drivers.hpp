#pragma once

#include <cmath>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slelab/constants.hpp"
#include "slelab/rng.hpp"

namespace slelab {

/// Uniform time grid t_j = j*dt, j = 0..n_steps.
struct TimeGrid {
    double dt = 1e-3;
    std::size_t n_steps = 0;

    TimeGrid() = default;
    TimeGrid(double step, std::size_t n) : dt(step), n_steps(n) {
        if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
        if (n_steps == 0) throw std::invalid_argument("TimeGrid: need at least one step");
    }
    double duration() const { return dt * static_cast<double>(n_steps); }
    double time(std::size_t j) const { return dt * static_cast<double>(j); }
};

/**
 * Options shared by every sampler.
 *
 * zero_noise is the deterministic test hook: all Gaussian increments are
 * forced to 0, so samplers integrate the drift skeleton of their SDE. It is
 * an explicit flag here, never a global.
 *
 * coarsen couples runs across step sizes: increments are generated at
 * dt/coarsen and summed, so a run at dt with coarsen=2 and a run at dt/2 with
 * coarsen=1 from the same stream see identical underlying noise.
 */
struct SdeOptions {
    bool zero_noise = false;
    int coarsen = 1;
};

/// Brownian increments over steps of a fixed size, honoring SdeOptions.
class NoiseSource {
public:
    NoiseSource(RngStream rng, SdeOptions opts = {}) : rng_(rng), opts_(opts) {
        if (opts_.coarsen < 1) throw std::invalid_argument("NoiseSource: coarsen must be >= 1");
    }

    /// One Brownian increment with variance dt.
    double increment(double dt) {
        if (opts_.zero_noise) return 0.0;
        if (opts_.coarsen == 1) return std::sqrt(dt) * rng_.next_gaussian();
        const double sub = std::sqrt(dt / opts_.coarsen);
        double sum = 0.0;
        for (int i = 0; i < opts_.coarsen; ++i) sum += sub * rng_.next_gaussian();
        return sum;
    }

    bool zero_noise() const { return opts_.zero_noise; }
    RngStream& raw() { return rng_; }

private:
    RngStream rng_;
    SdeOptions opts_;
};

/**
 * Sampled driving data: time grid, driving values W_j and force-point
 * trajectories Z_j^(i). The sign of W_j - Z_j^(i) is constant in j for each i.
 */
struct DriverPath {
    TimeGrid grid;
    std::vector<double> W;                 // length n_steps+1
    std::vector<std::vector<double>> Z;    // k trajectories, each n_steps+1
    Side side = Side::Right;

    std::size_t force_point_count() const { return Z.size(); }
    void check_sign_invariant() const;
};

/// Raised when the multi-force-point scheme cannot preserve the sign
/// condition even after maximal substep refinement.
struct CollisionError : std::runtime_error {
    double time;
    double gap;
    CollisionError(double t, double g)
        : std::runtime_error("force-point collision at t=" + std::to_string(t) +
                             " (gap " + std::to_string(g) + ")"),
          time(t), gap(g) {}
};

/// Standard Brownian path on the grid, B_0 = 0.
std::vector<double> sample_brownian(const TimeGrid& grid, RngStream rng, SdeOptions opts = {});

enum class BesselScheme {
    SquaredEuler,     // Euler on the squared process, full truncation at 0
    ExactTransition,  // noncentral chi-squared transitions (d > 1 only)
};

struct BesselPath {
    std::vector<double> values;  // dimensionless Bessel(d) path, length n_steps+1
    bool best_effort = false;    // set when d < 2
};

/**
 * Bessel(d) path started from z0 >= 0. Guaranteed-accuracy range is d >= 2;
 * smaller dimensions are sampled best-effort (the truncation at 0 stands in
 * for an unspecified reflection rule) and flagged.
 */
BesselPath sample_bessel(double dimension, double z0, const TimeGrid& grid, RngStream rng,
                         SdeOptions opts = {}, BesselScheme scheme = BesselScheme::SquaredEuler);

/**
 * Incremental single-force-point driver. The gap |W - O| is sqrt(kappa) times
 * a Bessel(1 + 2(rho+2)/kappa) path sampled by the squared-process Euler
 * scheme; O accumulates -2 du / (W-O) by the trapezoidal rule on the same
 * grid. Right processes are mirror images of left ones, computed through a
 * single left-side code path.
 */
class SingleForceSim {
public:
    SingleForceSim(double kappa, double rho, double w0, double o0, Side side);

    void step(double dt, NoiseSource& noise);
    double w() const { return side_ == Side::Left ? w_ : -w_; }
    double o() const { return side_ == Side::Left ? o_ : -o_; }
    double gap() const { return gap_; }  // |W - O|
    double time() const { return t_; }

private:
    Side side_;
    double kappa_, dim_;
    double x_;    // squared dimensionless Bessel value (may dip below 0 pre-truncation)
    double gap_;  // sqrt(kappa * max(x,0))
    double w_, o_;
    double t_ = 0.0;
};

/**
 * Incremental multi-force-point driver: Euler-Maruyama on the k-point system
 * with substep refinement whenever a gap falls under guard_mult*sqrt(kappa dt),
 * and step rejection + halving when a proposed substep would flip a sign.
 * Aborts with CollisionError after max_halvings rejections.
 */
class MultiForceSim {
public:
    MultiForceSim(const SleParameters& params);

    void step(double dt, NoiseSource& noise);
    double w() const { return w_; }
    const std::vector<double>& z() const { return z_; }
    double time() const { return t_; }
    double min_gap() const;

    double guard_mult = 4.0;
    int max_halvings = 48;

private:
    int separation_direction(std::size_t i) const;

    double kappa_;
    std::vector<double> rho_;
    Side side_;
    double w_;
    std::vector<double> z_;
    std::vector<int> gap_sign_;
    double t_ = 0.0;
};

DriverPath sle_single_force_driver(const SleParameters& params, const TimeGrid& grid,
                                   RngStream rng, SdeOptions opts = {});

DriverPath sle_multi_force_driver(const SleParameters& params, const TimeGrid& grid,
                                  RngStream rng, SdeOptions opts = {});

/**
 * Uniform incremental interface over the three driver kinds: plain Brownian
 * (k=0), Bessel-constructed single force point (k=1), Euler-Maruyama
 * multi-point (k>=2).
 */
class DriverSim {
public:
    explicit DriverSim(const SleParameters& params);

    void step(double dt, NoiseSource& noise);
    double w() const;
    /// Current force-point positions (k entries).
    std::vector<double> z() const;
    double time() const { return t_; }
    std::size_t force_point_count() const { return k_; }

private:
    std::size_t k_;
    double sqrt_kappa_ = 0.0;
    double w_plain_ = 0.0;
    std::optional<SingleForceSim> single_;
    std::optional<MultiForceSim> multi_;
    double t_ = 0.0;
};

/// Columns: t, W, Z_1..Z_k.
void write_driver_csv(std::ostream& os, const DriverPath& path);

}  // namespace slelab
