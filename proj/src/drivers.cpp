#include "slelab/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace slelab {

void DriverPath::check_sign_invariant() const {
    for (std::size_t i = 0; i < Z.size(); ++i) {
        // A coincident start acquires its sign on the first step.
        double g0 = W[0] - Z[i][0];
        for (std::size_t j = 0; j <= grid.n_steps; ++j) {
            const double g = W[j] - Z[i][j];
            if (g0 == 0.0) g0 = g;
            if (g * g0 < 0.0) throw std::logic_error("DriverPath: sign invariant violated");
            if (Z.size() == 1 && (side == Side::Left ? g < 0.0 : g > 0.0))
                throw std::logic_error("DriverPath: side condition violated");
        }
    }
}

std::vector<double> sample_brownian(const TimeGrid& grid, RngStream rng, SdeOptions opts) {
    NoiseSource noise(rng, opts);
    std::vector<double> b(grid.n_steps + 1);
    b[0] = 0.0;
    for (std::size_t j = 0; j < grid.n_steps; ++j) b[j + 1] = b[j] + noise.increment(grid.dt);
    return b;
}

namespace {

// One full-truncation Euler step of the squared Bessel process
// dX = d dt + 2 sqrt(X) dB.
inline double sqb_euler_step(double x, double dim, double dt, double dB) {
    const double xp = std::max(x, 0.0);
    return x + dim * dt + 2.0 * std::sqrt(xp) * dB;
}

// Exact squared-Bessel transition over dt: X' = dt * ncx2(d, X/dt), using the
// (N(0,1)+sqrt(lambda))^2 + chi2(d-1) decomposition, valid for d > 1.
inline double sqb_exact_step(double x, double dim, double dt, RngStream& rng) {
    const double lambda = std::max(x, 0.0) / dt;
    const double g = rng.next_gaussian() + std::sqrt(lambda);
    return dt * (g * g + rng.next_chi_squared(dim - 1.0));
}

}  // namespace

BesselPath sample_bessel(double dimension, double z0, const TimeGrid& grid, RngStream rng,
                         SdeOptions opts, BesselScheme scheme) {
    if (z0 < 0.0) throw std::invalid_argument("sample_bessel: z0 must be nonnegative");
    if (!(dimension > 0.0)) throw std::invalid_argument("sample_bessel: dimension must be positive");
    if (scheme == BesselScheme::ExactTransition && dimension <= 1.0)
        throw std::invalid_argument("sample_bessel: exact transitions need d > 1");

    BesselPath path;
    path.best_effort = dimension < 2.0;
    path.values.resize(grid.n_steps + 1);
    path.values[0] = z0;

    if (opts.zero_noise) {
        // Drift skeleton of dR = dB + (d-1)/(2R) dt: R^2 = z0^2 + (d-1) t.
        for (std::size_t j = 1; j <= grid.n_steps; ++j)
            path.values[j] = std::sqrt(z0 * z0 + (dimension - 1.0) * grid.time(j));
        return path;
    }

    double x = z0 * z0;
    if (scheme == BesselScheme::ExactTransition) {
        for (std::size_t j = 1; j <= grid.n_steps; ++j) {
            x = sqb_exact_step(x, dimension, grid.dt, rng);
            path.values[j] = std::sqrt(x);
        }
        return path;
    }

    NoiseSource noise(rng, opts);
    for (std::size_t j = 1; j <= grid.n_steps; ++j) {
        x = sqb_euler_step(x, dimension, grid.dt, noise.increment(grid.dt));
        path.values[j] = std::sqrt(std::max(x, 0.0));
    }
    return path;
}

SingleForceSim::SingleForceSim(double kappa, double rho, double w0, double o0, Side side)
    : side_(side), kappa_(kappa) {
    if (!(kappa > 0.0)) throw std::invalid_argument("SingleForceSim: kappa must be positive");
    if (!(rho > -2.0)) throw std::invalid_argument("SingleForceSim: rho must exceed -2");
    dim_ = bessel_dimension(kappa, rho);
    // Mirror right processes onto the left code path.
    const double wl = side == Side::Left ? w0 : -w0;
    const double ol = side == Side::Left ? o0 : -o0;
    if (wl < ol) throw std::invalid_argument("SingleForceSim: start violates side condition");
    gap_ = wl - ol;
    x_ = gap_ * gap_ / kappa_;
    w_ = wl;
    o_ = ol;
}

void SingleForceSim::step(double dt, NoiseSource& noise) {
    const double gap_old = gap_;
    if (noise.zero_noise()) {
        x_ += (dim_ - 1.0) * dt;  // skeleton of the Bessel-form SDE
    } else {
        x_ = sqb_euler_step(x_, dim_, dt, noise.increment(dt));
    }
    gap_ = std::sqrt(kappa_ * std::max(x_, 0.0));
    // O_t = O_0 - 2 int du/(W-O), trapezoid on the step endpoints. An endpoint
    // below the step's own diffusive scale sqrt(kappa dt) is floored there:
    // over one step a near-zero Bessel path sits at that scale, so the
    // floored reciprocal matches the true integral's magnitude while the raw
    // trapezoid would diverge.
    const double floor_ = 0.5 * std::sqrt(kappa_ * dt);
    o_ -= dt * (1.0 / std::max(gap_old, floor_) + 1.0 / std::max(gap_, floor_));
    w_ = o_ + gap_;
    t_ += dt;
}

MultiForceSim::MultiForceSim(const SleParameters& params)
    : kappa_(params.kappa), rho_(params.rhos), side_(params.side), w_(params.w0), z_(params.z0) {
    params.validate();
    if (params.rhos.empty())
        throw std::invalid_argument("MultiForceSim: need at least one force point");
    gap_sign_.resize(z_.size());
    for (std::size_t i = 0; i < z_.size(); ++i) {
        const double g = w_ - z_[i];
        gap_sign_[i] = g > 0.0 ? 1 : (g < 0.0 ? -1 : 0);
    }
}

double MultiForceSim::min_gap() const {
    double m = std::numeric_limits<double>::infinity();
    for (double zi : z_) m = std::min(m, std::abs(w_ - zi));
    return m;
}

int MultiForceSim::separation_direction(std::size_t i) const {
    // Direction in which W separates from a coincident Z^(i): away from the
    // other force points, else as the declared side dictates.
    for (std::size_t j = 0; j < z_.size(); ++j)
        if (j != i && gap_sign_[j] != 0) return gap_sign_[j];
    return side_ == Side::Left ? 1 : -1;
}

void MultiForceSim::step(double dt, NoiseSource& noise) {
    double remaining = dt;

    // Bootstrap an exactly coincident pair over a tiny first substep with a
    // mean-square Bessel kick; the generic scheme takes over afterwards.
    for (std::size_t i = 0; i < z_.size(); ++i) {
        if (gap_sign_[i] == 0) {
            const double h = dt * 0x1.0p-20;
            const double d = bessel_dimension(kappa_, rho_[i]);
            const int dir = separation_direction(i);
            w_ = z_[i] + dir * std::sqrt(kappa_ * d * h);
            gap_sign_[i] = dir;
            t_ += h;
            remaining -= h;
        }
    }

    // Maximal refinement is a depth limit: substeps may not shrink below
    // dt * 2^-max_halvings. Gaps below the matching spatial scale g_min are
    // unresolvable, so steps landing there are rejected like sign flips; the
    // continuum gap never reaches 0 for rho > kappa/2 - 2, and the bias of
    // this reflection-at-g_min sits many orders below the experiment scales.
    const double h_floor = dt * std::ldexp(1.0, -max_halvings);
    const double g_min = guard_mult > 0.0 ? guard_mult * std::sqrt(kappa_ * h_floor) : 0.0;
    double h = remaining;
    std::vector<double> z_new(z_.size());
    while (remaining > 0.0) {
        h = std::min(h, remaining);
        // Collision guard: refine while a gap is small on the step's own scale.
        while (h > h_floor && min_gap() < guard_mult * std::sqrt(kappa_ * h)) h *= 0.5;
        h = std::max(h, h_floor);
        int floor_tries = 0;
        for (;;) {
            double drift = 0.0;
            for (std::size_t i = 0; i < z_.size(); ++i) drift += rho_[i] / (w_ - z_[i]);
            const double dB = noise.increment(h);
            const double w_new = w_ + std::sqrt(kappa_) * dB + drift * h;
            bool ok = true;
            for (std::size_t i = 0; i < z_.size(); ++i) {
                z_new[i] = z_[i] + 2.0 * h / (z_[i] - w_);
                const double g = w_new - z_new[i];
                if (g * gap_sign_[i] <= 0.0 || std::abs(g) < g_min) { ok = false; break; }
            }
            if (ok) {
                w_ = w_new;
                z_.swap(z_new);
                t_ += h;
                remaining -= h;
                h *= 2.0;  // let the step regrow after a quiet stretch
                break;
            }
            if (h <= h_floor && ++floor_tries > 200) throw CollisionError(t_, min_gap());
            h = std::max(0.5 * h, h_floor);
        }
    }
}

DriverPath sle_single_force_driver(const SleParameters& params, const TimeGrid& grid,
                                   RngStream rng, SdeOptions opts) {
    params.validate();
    if (params.rhos.size() != 1)
        throw std::invalid_argument("sle_single_force_driver: exactly one force point required");
    SingleForceSim sim(params.kappa, params.rhos[0], params.w0, params.z0[0], params.side);
    NoiseSource noise(rng, opts);
    DriverPath path;
    path.grid = grid;
    path.side = params.side;
    path.W.resize(grid.n_steps + 1);
    path.Z.assign(1, std::vector<double>(grid.n_steps + 1));
    path.W[0] = params.w0;
    path.Z[0][0] = params.z0[0];
    for (std::size_t j = 1; j <= grid.n_steps; ++j) {
        sim.step(grid.dt, noise);
        path.W[j] = sim.w();
        path.Z[0][j] = sim.o();
    }
    return path;
}

DriverPath sle_multi_force_driver(const SleParameters& params, const TimeGrid& grid,
                                  RngStream rng, SdeOptions opts) {
    params.validate();
    if (params.rhos.empty())
        throw std::invalid_argument("sle_multi_force_driver: need k >= 1 force points");
    MultiForceSim sim(params);
    NoiseSource noise(rng, opts);
    DriverPath path;
    path.grid = grid;
    path.side = params.side;
    path.W.resize(grid.n_steps + 1);
    path.Z.assign(params.rhos.size(), std::vector<double>(grid.n_steps + 1));
    path.W[0] = params.w0;
    for (std::size_t i = 0; i < params.z0.size(); ++i) path.Z[i][0] = params.z0[i];
    for (std::size_t j = 1; j <= grid.n_steps; ++j) {
        sim.step(grid.dt, noise);
        path.W[j] = sim.w();
        for (std::size_t i = 0; i < sim.z().size(); ++i) path.Z[i][j] = sim.z()[i];
    }
    return path;
}

DriverSim::DriverSim(const SleParameters& params) : k_(params.rhos.size()) {
    params.validate();
    if (k_ == 0) {
        sqrt_kappa_ = std::sqrt(params.kappa);
        w_plain_ = params.w0;
    } else if (k_ == 1) {
        single_.emplace(params.kappa, params.rhos[0], params.w0, params.z0[0], params.side);
    } else {
        multi_.emplace(params);
    }
}

void DriverSim::step(double dt, NoiseSource& noise) {
    if (k_ == 0) {
        w_plain_ += sqrt_kappa_ * noise.increment(dt);
    } else if (k_ == 1) {
        single_->step(dt, noise);
    } else {
        multi_->step(dt, noise);
    }
    t_ += dt;
}

double DriverSim::w() const {
    if (k_ == 0) return w_plain_;
    if (k_ == 1) return single_->w();
    return multi_->w();
}

std::vector<double> DriverSim::z() const {
    if (k_ == 0) return {};
    if (k_ == 1) return {single_->o()};
    return multi_->z();
}

void write_driver_csv(std::ostream& os, const DriverPath& path) {
    os << "t,W";
    for (std::size_t i = 0; i < path.Z.size(); ++i) os << ",Z_" << (i + 1);
    os << "\n";
    os.precision(17);
    for (std::size_t j = 0; j <= path.grid.n_steps; ++j) {
        os << path.grid.time(j) << "," << path.W[j];
        for (const auto& z : path.Z) os << "," << z[j];
        os << "\n";
    }
}

}  // namespace slelab
