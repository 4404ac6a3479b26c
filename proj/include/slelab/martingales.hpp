#pragma once

#include <cstdint>
#include <vector>

#include "slelab/constants.hpp"
#include "slelab/drivers.hpp"
#include "slelab/hulls.hpp"

namespace slelab {

enum class RunStatus { Running, HullHit, Detached, Invalid };

/**
 * Exponent set of the composite local martingale
 *   M = h'(W)^{a0} exp(lambda I/6) prod_i h'(Z^i)^{b_i} U_i^{c_i} prod_{i<j} U_ij^{e_ij}
 * with U_i = (h(W)-h(Z^i))/(W-Z^i) and U_ij the force-point pair ratio.
 * canonical() is the drift-free choice; tests perturb entries.
 */
struct MartingaleExponents {
    double a0 = 0.0;
    double lambda = 0.0;
    std::vector<double> b, c;
    std::vector<std::vector<double>> e;

    static MartingaleExponents canonical(double kappa, const std::vector<double>& rhos);
};

/// Everything entering the martingale value at one instant.
struct MartingaleFactors {
    double h1w = 1.0;
    std::vector<double> h1z;
    std::vector<double> ratio;
    std::vector<std::vector<double>> pair_ratio;
    double schwarzian_integral = 0.0;
};

double martingale_value(const MartingaleFactors& f, const MartingaleExponents& x);
/// k = 1 form: h'(W)^a h'(O)^b U^c exp(lambda I/6).
double martingale_value_lemma1(const MartingaleFactors& f, const DerivedConstants& dc);
/// General product form with the canonical exponents.
double martingale_value_lemma4(const MartingaleFactors& f, double kappa,
                               const std::vector<double>& rhos);

struct TrackerOptions {
    std::size_t n_samples = 48;
    /// Detach (classify avoided) when the canonical M exceeds 1 - threshold;
    /// 0 disables detachment.
    double detach_threshold = 0.0;
    /// Classify hull-hit when the canonical M (the posterior avoidance
    /// probability) falls below this; 0 disables martingale-based hits.
    double hit_threshold = 0.02;
    /// Eligibility multiple for aggregated far-field blocks.
    double far_factor = 6.0;
};

/**
 * Co-evolves the hull map h_t = phi_{g_t(A)} along a chain. Boundary samples
 * are flowed and refitted at checkpoints, which yields the jets at the
 * driving value. Force-point quantities h(Z^i), h'(Z^i) evolve instead by
 * conjugation: over one slit atom, h(Z) flows through the image atom at
 * h(W) with capacity h'(W)^2 dt. That update is exact for the
 * piecewise-constant driver and stays robust when a force point is pinched
 * exponentially close to the image hull, where no fixed-resolution fit can
 * be evaluated. One tracker follows one path; replicas copy trackers.
 */
class MartingaleTracker {
public:
    MartingaleTracker(const SleParameters& params, const HullMap& hull_map,
                      std::vector<Complex> boundary_samples, TrackerOptions opts = {});

    /// Exact per-atom advance: driving value w over dt, ending at w_next;
    /// z_start/z_end are the force-point positions around the step.
    void advance_atom(double w, double dt, double w_next, const std::vector<double>& z_start,
                      const std::vector<double>& z_end);
    /// True when every sample is far enough from [w_lo, w_hi] for a single
    /// aggregated step over a block of total length t_len.
    bool far_eligible(double w_lo, double w_hi, double t_len) const;
    /// Aggregated advance over a quiet block (RK2 on dz/dt = 2/(z - w_mean)
    /// for the samples, matching block updates for the tracked jets).
    void advance_far(double w_mean, double t_len, double w_start, double w_end,
                     const std::vector<double>& z_start, const std::vector<double>& z_end);
    /// Refit, refresh the jets at the driving value, extend the Schwarzian
    /// integral, evaluate M and test the hit/detach thresholds.
    void checkpoint(double w, const std::vector<double>& z);

    RunStatus status() const { return status_; }
    double t() const { return t_; }
    double m() const { return m_; }
    double hit_time() const { return hit_time_; }
    /// A sample entered some atom's base disk since the last checkpoint.
    bool close_contact() const { return contact_; }
    const MartingaleFactors& factors() const { return factors_; }
    const MapJet& jet_w() const { return jet_w_; }
    /// Value/derivative pairs at the force points (conjugation route).
    const std::vector<double>& hz() const { return hz_; }
    const std::vector<double>& h1z() const { return h1z_; }
    double schwarzian_integral() const { return factors_.schwarzian_integral; }
    const std::vector<Complex>& samples() const { return samples_; }
    const HullMap& current_map() const { return h_; }
    /// Ratio factor used by the terminal certification (k >= 1: U_1).
    double certification_ratio() const;

    const MartingaleExponents& exponents() const { return exps_; }

private:
    void refit(double w);
    bool evaluate(double w, const std::vector<double>& z);
    void rebuild_factors(double w, const std::vector<double>& z);

    SleParameters params_;
    MartingaleExponents exps_;
    TrackerOptions opts_;
    std::vector<Complex> samples_;  // open-half-plane arc samples
    HullMap h_;
    MapJet jet_w_;
    double w_tilde_ = 0.0;  // h(W), Ito-Taylor between checkpoints
    double h1w_ = 1.0;
    double h2w_ = 0.0;
    double h3w_ = 0.0;
    std::vector<double> hz_, h1z_;
    MartingaleFactors factors_;
    double last_schwarzian_ = 0.0;
    double last_checkpoint_t_ = 0.0;
    double t_ = 0.0;
    double m_ = 1.0;
    double hit_time_ = 0.0;
    double last_dt_ = 0.0;
    bool contact_ = false;
    RunStatus status_ = RunStatus::Running;
};

/// Convenience: tracker for a semidisk hull with init-time evaluation at the
/// start configuration (coincident starts use the derivative limit).
MartingaleTracker init_state(const SleParameters& params, const SemidiskHull& hull,
                             TrackerOptions opts = {});

struct TerminalLimit {
    bool hit = false;
    double limit = 0.0;
    bool inconclusive = false;
    double ratio = 1.0;
};

/**
 * Classify a finished run: hull hit gives limit 0; otherwise the limit is
 * exp(lambda I / 6) provided the derivative/ratio factors certify within 5%
 * of 1, else the run is flagged inconclusive (horizon too small).
 */
TerminalLimit terminal_limit(const MartingaleTracker& tracker);

/// Bounded martingale of the second conditioning identity: the sequence
/// ((g_t(y)-W_t)/(g_t(x)-W_t))^{1-4/kappa} along the driver grid, frozen at
/// its exit value if y (or x) is swallowed.
std::vector<double> prop3_martingale(const DriverPath& driver, double x, double y, double kappa);

/**
 * Secondary route for (h, h') at the tracked points: integrates the hull-map
 * evolution equations directly. h(W) and h'(W) follow their stochastic
 * updates (using h''(W), h'''(W) supplied from the refit route at
 * checkpoints); h(Z^i) and h'(Z^i) follow closed ODEs given those. Serves as
 * an independent cross-check of the pushforward+refit route.
 */
class OdeJetTracker {
public:
    OdeJetTracker(double kappa, double w0, std::vector<double> z0, const HullMap& h0);

    /// One driver step: value w -> w_next over dt, with the current second
    /// and third derivatives at W from the reference route.
    void step(double dt, double w, double w_next, const std::vector<double>& z, double h2w,
              double h3w);

    double w_tilde() const { return w_tilde_; }
    double h1w() const { return h1w_; }
    const std::vector<double>& hz() const { return hz_; }
    const std::vector<double>& h1z() const { return h1z_; }

private:
    double kappa_;
    double w_tilde_;
    double h1w_;
    std::vector<double> hz_, h1z_;
};

/// Frozen configuration for the drift fan-out: the driver restart data plus
/// a full tracker snapshot (trackers are value types).
struct FrozenMartingaleState {
    SleParameters params_at_t;  // start field holds the frozen (W, Z)
    MartingaleTracker tracker;
    double t = 0.0;
};

FrozenMartingaleState freeze_state(const SleParameters& params, const SemidiskHull& hull,
                                   double t_freeze, double dt, std::uint64_t seed,
                                   TrackerOptions opts = {});

struct DriftSample {
    double m0 = 0.0;
    double estimate = 0.0;  // E[M_{t+delta} - M_t]
    double stderr_ = 0.0;
    std::size_t n = 0;
    std::size_t invalid = 0;
};

/**
 * Monte Carlo drift estimate: N independent continuations of length delta
 * from the frozen state, one DriftSample per exponent set (all sets evaluated
 * on the same replicas). Deterministic in (state, seed) regardless of thread
 * count.
 */
std::vector<DriftSample> mc_drift_estimate(const FrozenMartingaleState& state, double delta,
                                           std::size_t n_replicas, double dt, std::uint64_t seed,
                                           const std::vector<MartingaleExponents>& exponent_sets,
                                           int n_threads = 0);

}  // namespace slelab
