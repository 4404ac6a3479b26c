#include "slelab/martingales.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "slelab/parallel.hpp"

namespace slelab {

MartingaleExponents MartingaleExponents::canonical(double kappa, const std::vector<double>& rhos) {
    MartingaleExponents x;
    const DerivedConstants base = derive_constants(kappa, 0.0);
    x.a0 = base.a;  // alpha_kappa
    x.lambda = base.lambda;
    const std::size_t k = rhos.size();
    x.b.resize(k);
    x.c.resize(k);
    x.e.assign(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        const DerivedConstants d = derive_constants(kappa, rhos[i]);
        x.b[i] = d.b;
        x.c[i] = d.c;
        for (std::size_t j = i + 1; j < k; ++j) x.e[i][j] = rhos[i] * rhos[j] / (2.0 * kappa);
    }
    return x;
}

double martingale_value(const MartingaleFactors& f, const MartingaleExponents& x) {
    double log_m = x.a0 * std::log(f.h1w) + x.lambda * f.schwarzian_integral / 6.0;
    for (std::size_t i = 0; i < x.b.size(); ++i) {
        log_m += x.b[i] * std::log(f.h1z[i]) + x.c[i] * std::log(f.ratio[i]);
        for (std::size_t j = i + 1; j < x.b.size(); ++j)
            log_m += x.e[i][j] * std::log(f.pair_ratio[i][j]);
    }
    return std::exp(log_m);
}

double martingale_value_lemma1(const MartingaleFactors& f, const DerivedConstants& dc) {
    if (f.h1z.size() != 1)
        throw std::invalid_argument("martingale_value_lemma1: needs exactly one force point");
    return std::exp(dc.a * std::log(f.h1w) + dc.b * std::log(f.h1z[0]) +
                    dc.c * std::log(f.ratio[0]) + dc.lambda * f.schwarzian_integral / 6.0);
}

double martingale_value_lemma4(const MartingaleFactors& f, double kappa,
                               const std::vector<double>& rhos) {
    return martingale_value(f, MartingaleExponents::canonical(kappa, rhos));
}

namespace {

// Derivative of the slit atom's real branch at a real point off the base:
// g'(x) = |zeta| / sqrt(zeta^2 + 4 dt), safe for zeta -> 0 (returns 0).
inline double atom_real_deriv(double zeta, double dt) {
    const double a = std::abs(zeta);
    return a / std::sqrt(zeta * zeta + 4.0 * dt);
}

}  // namespace

MartingaleTracker::MartingaleTracker(const SleParameters& params, const HullMap& hull_map,
                                     std::vector<Complex> boundary_samples, TrackerOptions opts)
    : params_(params),
      exps_(MartingaleExponents::canonical(params.kappa, params.rhos)),
      opts_(opts),
      h_(hull_map) {
    params_.validate();
    if (boundary_samples.size() < 5)
        throw std::invalid_argument("MartingaleTracker: need at least 5 boundary samples");
    // Hull must be disjoint from the start configuration.
    const double lo = std::min(boundary_samples.front().real(), boundary_samples.back().real());
    const double hi = std::max(boundary_samples.front().real(), boundary_samples.back().real());
    auto inside = [&](double v) { return v >= lo && v <= hi; };
    if (inside(params_.w0))
        throw std::invalid_argument("MartingaleTracker: hull overlaps the start configuration");
    for (double z : params_.z0)
        if (inside(z))
            throw std::invalid_argument("MartingaleTracker: hull overlaps a force point");
    // Track the open-half-plane arc only: the base corners of a + hull are
    // unreachable for these processes and their real flows invert at step
    // scale; the clustered arc samples next to the corners catch contact.
    samples_.assign(boundary_samples.begin() + 1, boundary_samples.end() - 1);

    // Initial jets from the exact (or initially fitted) hull map.
    jet_w_ = h_.jet_real(params_.w0);
    w_tilde_ = jet_w_.f.real();
    h1w_ = jet_w_.f1.real();
    h2w_ = jet_w_.f2.real();
    h3w_ = jet_w_.f3.real();
    const std::size_t k = params_.z0.size();
    hz_.resize(k);
    h1z_.resize(k);
    const double scale = 1.0 + std::abs(params_.w0);
    for (std::size_t i = 0; i < k; ++i) {
        if (std::abs(params_.z0[i] - params_.w0) < 1e-12 * scale) {
            hz_[i] = w_tilde_;  // coincident start: same image point
            h1z_[i] = h1w_;
        } else {
            const MapJet jz = h_.jet_real(params_.z0[i]);
            hz_[i] = jz.f.real();
            h1z_[i] = jz.f1.real();
        }
    }
    rebuild_factors(params_.w0, params_.z0);
    m_ = martingale_value(factors_, exps_);
    last_schwarzian_ = jet_w_.schwarzian().real();
}

void MartingaleTracker::advance_atom(double w, double dt, double w_next,
                                     const std::vector<double>& z_start,
                                     const std::vector<double>& z_end) {
    if (status_ != RunStatus::Running) return;
    const SlitMapAtom atom{w, dt};
    const double disk_guard = atom.base_disk_radius();
    for (Complex& z : samples_) {
        // Entering a base disk is only a contact flag: near a force point the
        // image hull is conformally pinched toward the driving value, so
        // proximity alone cannot distinguish contact. The martingale value at
        // the next checkpoint decides.
        if (std::abs(z - Complex(w, 0.0)) <= disk_guard) contact_ = true;
        z = atom.apply(z);
        if (z.imag() < 0.0) z = {z.real(), 0.0};
    }
    // Conjugation step for the force-point quantities: the hull map after
    // this atom satisfies h_new(g(x)) = g_img(h_old(x)) with g_img the slit
    // atom at h(W) of capacity h'(W)^2 dt. A small correction reconciles the
    // driver's own force-point update with the atom flow of the same point.
    const SlitMapAtom atom_img{w_tilde_, dt * h1w_ * h1w_};
    for (std::size_t i = 0; i < hz_.size(); ++i) {
        const double gp = atom_real_deriv(z_start[i] - w, dt);
        const double gpi = atom_real_deriv(hz_[i] - w_tilde_, atom_img.dt);
        const double ratio_deriv = gp > 0.0 ? gpi / gp : 1.0;
        const double flowed = atom.apply_real(z_start[i]);
        const double h1z_new = h1z_[i] * ratio_deriv;
        hz_[i] = atom_img.apply_real(hz_[i]) + h1z_new * (z_end[i] - flowed);
        h1z_[i] = h1z_new;
    }
    // Ito-Taylor transport of the jets at the moving driving value, with the
    // curvature inputs held from the last checkpoint.
    const double dW = w_next - w;
    w_tilde_ += h1w_ * dW - 3.0 * h2w_ * dt + 0.5 * h2w_ * dW * dW;
    h1w_ += h2w_ * dW + (h2w_ * h2w_ / (2.0 * h1w_) - (4.0 / 3.0) * h3w_) * dt +
            0.5 * h3w_ * dW * dW;
    last_dt_ = dt;
    t_ += dt;
}

bool MartingaleTracker::far_eligible(double w_lo, double w_hi, double t_len) const {
    if (status_ != RunStatus::Running) return false;
    const double mid = 0.5 * (w_lo + w_hi);
    const double spread = (w_hi - w_lo) + 4.0 * std::sqrt(t_len);
    const double need = opts_.far_factor * spread;
    for (const Complex& z : samples_)
        if (std::abs(z - Complex(mid, 0.0)) < need) return false;
    return true;
}

void MartingaleTracker::advance_far(double w_mean, double t_len, double w_start, double w_end,
                                    const std::vector<double>& z_start,
                                    const std::vector<double>& z_end) {
    if (status_ != RunStatus::Running) return;
    const Complex c(w_mean, 0.0);
    for (Complex& z : samples_) {
        const Complex k1 = 2.0 / (z - c);
        const Complex zmid = z + 0.5 * t_len * k1;
        z += t_len * (2.0 / (zmid - c));
        if (z.imag() < 0.0) z = {z.real(), 0.0};
    }
    // Conjugated block updates: capacity rate h'(W)^2, midpoint rule on the
    // image flow; dW^2 is replaced by its mean kappa * t_len.
    const double cap_img = h1w_ * h1w_ * t_len;
    for (std::size_t i = 0; i < hz_.size(); ++i) {
        const double k1 = 2.0 * cap_img / t_len / (hz_[i] - w_tilde_);
        const double mid = hz_[i] + 0.5 * t_len * k1;
        hz_[i] += t_len * (2.0 * cap_img / t_len / (mid - w_tilde_));
        const double gap0 = z_start[i] - w_mean;
        const double gap1 = z_end[i] - w_mean;
        const double img0 = hz_[i] - w_tilde_;
        const double dlog = t_len * (2.0 / (gap0 * gap1) - 2.0 * cap_img / t_len / (img0 * img0));
        h1z_[i] *= std::exp(dlog);
    }
    const double dW = w_end - w_start;
    w_tilde_ += h1w_ * dW - 3.0 * h2w_ * t_len + 0.5 * h2w_ * params_.kappa * t_len;
    h1w_ += h2w_ * dW + (h2w_ * h2w_ / (2.0 * h1w_) - (4.0 / 3.0) * h3w_) * t_len +
            0.5 * h3w_ * params_.kappa * t_len;
    last_dt_ = t_len;
    t_ += t_len;
}

void MartingaleTracker::refit(double w) {
    // Samples within the step's base-disk band of the driving value are
    // numerically indistinguishable from the growth point (dragged remnants
    // of a pinch, or flattened corner material of vanishing harmonic
    // measure); either way they carry no hull-shape information.
    const double r_drop = 4.0 * std::sqrt(std::max(last_dt_, 0.0));
    std::vector<Complex> pts;
    pts.reserve(samples_.size());
    for (const Complex& p : samples_)
        if (std::abs(p - Complex(w, 0.0)) > r_drop) pts.push_back(p);
    if (pts.size() < 5) throw std::runtime_error("refit: all samples degenerated");
    std::vector<SlitMapAtom> atoms = zipper_fit(std::move(pts));
    if (atoms.empty()) throw std::runtime_error("refit: all samples degenerated");
    double lo = atoms.front().w, hi = lo;
    for (const SlitMapAtom& a : atoms) {
        const double half = 2.0 * std::sqrt(a.dt);
        lo = std::min(lo, a.w - half);
        hi = std::max(hi, a.w + half);
    }
    h_ = HullMap::from_atoms(std::move(atoms), lo, hi);
}

void MartingaleTracker::rebuild_factors(double w, const std::vector<double>& z) {
    const std::size_t k = z.size();
    factors_.h1w = h1w_;
    factors_.h1z = h1z_;
    factors_.ratio.resize(k);
    factors_.pair_ratio.assign(k, std::vector<double>(k, 1.0));
    const double scale = 1.0 + std::abs(w);
    for (std::size_t i = 0; i < k; ++i) {
        const double dz = w - z[i];
        factors_.ratio[i] = std::abs(dz) < 1e-12 * scale ? h1w_ : (w_tilde_ - hz_[i]) / dz;
        for (std::size_t j = 0; j < i; ++j) {
            const double dzz = z[j] - z[i];
            factors_.pair_ratio[j][i] =
                std::abs(dzz) < 1e-12 * scale ? h1z_[i] : (hz_[j] - hz_[i]) / dzz;
        }
    }
}

bool MartingaleTracker::evaluate(double w, const std::vector<double>& z) {
    try {
        if (t_ > 0.0) {
            refit(w);
            jet_w_ = h_.jet_real(w);
            w_tilde_ = jet_w_.f.real();
            h1w_ = jet_w_.f1.real();
            h2w_ = jet_w_.f2.real();
            h3w_ = jet_w_.f3.real();
            // Refresh the force-point values from the fit whenever the fit is
            // cleanly evaluable there; otherwise the conjugation route stands.
            for (std::size_t i = 0; i < z.size(); ++i) {
                try {
                    const MapJet jz = h_.jet_real(z[i]);
                    if (std::isfinite(jz.f.real()) && jz.f1.real() > 0.0) {
                        hz_[i] = jz.f.real();
                        h1z_[i] = jz.f1.real();
                    }
                } catch (const std::exception&) {
                }
            }
        }
        if (!(h1w_ > 0.0) || !std::isfinite(h1w_)) return false;
        rebuild_factors(w, z);
        for (std::size_t i = 0; i < z.size(); ++i)
            if (!(factors_.ratio[i] > 0.0) || !std::isfinite(factors_.ratio[i]) ||
                !(factors_.h1z[i] > 0.0))
                return false;
        m_ = martingale_value(factors_, exps_);
        return std::isfinite(m_);
    } catch (const std::exception&) {
        return false;
    }
}

void MartingaleTracker::checkpoint(double w, const std::vector<double>& z) {
    if (status_ != RunStatus::Running) return;
    bool ok = evaluate(w, z);
    if (!ok) {
        // Refine once: subdivide the flowed polyline, then decide.
        std::vector<Complex> dense;
        dense.reserve(samples_.size() * 2);
        for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
            dense.push_back(samples_[i]);
            dense.push_back(0.5 * (samples_[i] + samples_[i + 1]));
        }
        dense.push_back(samples_.back());
        samples_ = std::move(dense);
        ok = evaluate(w, z);
    }
    if (!ok) {
        // A fit can fail benignly while the driver is pinched against a force
        // point (the image hull's near corner sits at the resolution scale):
        // keep flowing and evaluate at a later checkpoint.
        const double pinch = 4.0 * std::sqrt(params_.kappa * std::max(last_dt_, 1e-300));
        for (double zi : z) {
            if (std::abs(w - zi) <= pinch) return;
        }
        if (contact_) {
            status_ = RunStatus::HullHit;
            hit_time_ = t_;
        } else {
            status_ = RunStatus::Invalid;
        }
        return;
    }
    // Schwarzian integral by trapezoid on checkpoint values.
    const double s = jet_w_.schwarzian().real();
    factors_.schwarzian_integral += 0.5 * (s + last_schwarzian_) * (t_ - last_checkpoint_t_);
    last_schwarzian_ = s;
    last_checkpoint_t_ = t_;
    m_ = martingale_value(factors_, exps_);
    if (opts_.hit_threshold > 0.0 && m_ <= opts_.hit_threshold) {
        status_ = RunStatus::HullHit;
        hit_time_ = t_;
        return;
    }
    contact_ = false;
    if (opts_.detach_threshold > 0.0 && m_ >= 1.0 - opts_.detach_threshold)
        status_ = RunStatus::Detached;
}

double MartingaleTracker::certification_ratio() const {
    if (!factors_.ratio.empty()) return factors_.ratio[0];
    return factors_.h1w;
}

MartingaleTracker init_state(const SleParameters& params, const SemidiskHull& hull,
                             TrackerOptions opts) {
    return MartingaleTracker(params, HullMap::from_semidisk(hull),
                             semidisk_boundary_samples(hull, opts.n_samples), opts);
}

TerminalLimit terminal_limit(const MartingaleTracker& tracker) {
    TerminalLimit out;
    if (tracker.status() == RunStatus::HullHit) {
        out.hit = true;
        out.limit = 0.0;
        out.ratio = tracker.certification_ratio();
        return out;
    }
    out.hit = false;
    out.ratio = tracker.certification_ratio();
    const double h1w = tracker.factors().h1w;
    if (std::abs(out.ratio - 1.0) > 0.05 || std::abs(h1w - 1.0) > 0.05) out.inconclusive = true;
    out.limit = std::exp(tracker.exponents().lambda * tracker.schwarzian_integral() / 6.0);
    return out;
}

std::vector<double> prop3_martingale(const DriverPath& driver, double x, double y, double kappa) {
    if (!(0.0 < y && y < x)) throw std::invalid_argument("prop3_martingale: need 0 < y < x");
    const double expo = 1.0 - 4.0 / kappa;
    // Exit above the scheme's resolution boundary: near sqrt(kappa dt) the
    // gap dynamics are unresolved, and the ratio's fractional power would
    // turn step-scale errors into O(dt^{1/6}) bias. Stopping at a safe
    // multiple and freezing at the exact exit value keeps the
    // optional-stopping identity; the threshold itself vanishes with dt.
    const double guard = 8.0 * std::sqrt(kappa * driver.grid.dt);
    std::vector<double> out;
    out.reserve(driver.grid.n_steps + 1);
    double gx = x, gy = y;
    bool frozen = false;
    double frozen_value = 0.0;
    for (std::size_t j = 0; j <= driver.grid.n_steps; ++j) {
        const double wj = driver.W[j];
        if (!frozen) {
            const double gap_y = gy - wj;
            const double gap_x = gx - wj;
            if (gap_y <= 0.0 || gap_x <= gap_y) {
                frozen = true;  // crossed mid-step: freeze at the prior value
                frozen_value = out.empty() ? 0.0 : out.back();
            } else {
                const double v = std::pow(gap_y / gap_x, expo);
                if (gap_y <= guard || gap_x <= guard) {
                    frozen = true;
                    frozen_value = v;
                }
                out.push_back(v);
                if (!frozen && j < driver.grid.n_steps) {
                    const SlitMapAtom atom{wj, driver.grid.dt};
                    gx = atom.apply_real(gx);
                    gy = atom.apply_real(gy);
                }
                continue;
            }
        }
        out.push_back(frozen_value);
    }
    return out;
}

OdeJetTracker::OdeJetTracker(double kappa, double w0, std::vector<double> z0, const HullMap& h0)
    : kappa_(kappa) {
    const MapJet jw = h0.jet_real(w0);
    w_tilde_ = jw.f.real();
    h1w_ = jw.f1.real();
    for (double zi : z0) {
        const MapJet jz = h0.jet_real(zi);
        hz_.push_back(jz.f.real());
        h1z_.push_back(jz.f1.real());
    }
}

void OdeJetTracker::step(double dt, double w, double w_next, const std::vector<double>& z,
                         double h2w, double h3w) {
    const double dW = w_next - w;
    // Force points first: closed ODEs given (w_tilde, h1w) at the step start.
    for (std::size_t i = 0; i < hz_.size(); ++i) {
        const double denom = hz_[i] - w_tilde_;
        const double gap = z[i] - w;
        hz_[i] += dt * 2.0 * h1w_ * h1w_ / denom;
        h1z_[i] += dt * h1z_[i] * (2.0 / (gap * gap) - 2.0 * h1w_ * h1w_ / (denom * denom));
    }
    // Pathwise Ito-Taylor forms: the time-derivative limits at W plus the
    // transport and curvature in the moving evaluation point. Averaging dW^2
    // recovers the Ito drifts (kappa/2 - 3) h'' and ... + (kappa/2) h'''/...
    const double d_wt = h1w_ * dW - 3.0 * h2w * dt + 0.5 * h2w * dW * dW;
    const double d_h1 =
        h2w * dW + (h2w * h2w / (2.0 * h1w_) - (4.0 / 3.0) * h3w) * dt + 0.5 * h3w * dW * dW;
    w_tilde_ += d_wt;
    h1w_ += d_h1;
}

FrozenMartingaleState freeze_state(const SleParameters& params, const SemidiskHull& hull,
                                   double t_freeze, double dt, std::uint64_t seed,
                                   TrackerOptions opts) {
    MartingaleTracker tracker = init_state(params, hull, opts);
    DriverSim sim(params);
    NoiseSource noise(RngStream(seed, 0));
    const auto steps = static_cast<std::size_t>(std::llround(t_freeze / dt));
    const std::size_t per_cp = std::max<std::size_t>(1, static_cast<std::size_t>(0.01 / dt));
    for (std::size_t j = 0; j < steps; ++j) {
        const double w = sim.w();
        const std::vector<double> z0 = sim.z();
        sim.step(dt, noise);
        tracker.advance_atom(w, dt, sim.w(), z0, sim.z());
        if ((j + 1) % per_cp == 0) tracker.checkpoint(sim.w(), sim.z());
        if (tracker.status() != RunStatus::Running)
            throw std::runtime_error("freeze_state: path left the running state before t_freeze");
    }
    tracker.checkpoint(sim.w(), sim.z());
    if (tracker.status() != RunStatus::Running)
        throw std::runtime_error("freeze_state: path left the running state at t_freeze");
    FrozenMartingaleState frozen{params, std::move(tracker), 0.0};
    frozen.params_at_t.w0 = sim.w();
    frozen.params_at_t.z0 = sim.z();
    frozen.t = frozen.tracker.t();
    return frozen;
}

std::vector<DriftSample> mc_drift_estimate(const FrozenMartingaleState& state, double delta,
                                           std::size_t n_replicas, double dt, std::uint64_t seed,
                                           const std::vector<MartingaleExponents>& exponent_sets,
                                           int n_threads) {
    if (n_replicas < 1000)
        throw std::invalid_argument("mc_drift_estimate: need at least 1e3 replicas");
    const std::size_t n_sets = exponent_sets.size();

    // Reference M at the frozen state, one per exponent set, from the frozen
    // tracker's factors (the replicas evaluate through the same pipeline, so
    // systematic fit bias cancels in the difference).
    std::vector<double> m0(n_sets);
    for (std::size_t s = 0; s < n_sets; ++s)
        m0[s] = martingale_value(state.tracker.factors(), exponent_sets[s]);

    const auto n_steps = static_cast<std::size_t>(std::llround(delta / dt));
    std::vector<std::vector<double>> m_end(n_sets, std::vector<double>(n_replicas, 0.0));
    std::vector<std::uint8_t> invalid(n_replicas, 0);

    parallel_for(n_replicas, n_threads, [&](std::size_t r) {
        DriverSim sim(state.params_at_t);
        NoiseSource noise(RngStream(seed, r + 1));
        MartingaleTracker tracker = state.tracker;
        for (std::size_t jstep = 0; jstep < n_steps; ++jstep) {
            const double w = sim.w();
            const std::vector<double> z0 = sim.z();
            sim.step(dt, noise);
            tracker.advance_atom(w, dt, sim.w(), z0, sim.z());
        }
        tracker.checkpoint(sim.w(), sim.z());
        if (tracker.status() == RunStatus::Invalid || tracker.status() == RunStatus::HullHit) {
            invalid[r] = 1;
            return;
        }
        for (std::size_t s = 0; s < n_sets; ++s)
            m_end[s][r] = martingale_value(tracker.factors(), exponent_sets[s]);
    });

    std::vector<DriftSample> out(n_sets);
    for (std::size_t s = 0; s < n_sets; ++s) {
        double sum = 0.0, sum2 = 0.0;
        std::size_t n = 0, bad = 0;
        for (std::size_t r = 0; r < n_replicas; ++r) {
            if (invalid[r]) {
                ++bad;
                continue;
            }
            const double d = m_end[s][r] - m0[s];
            sum += d;
            sum2 += d * d;
            ++n;
        }
        DriftSample ds;
        ds.m0 = m0[s];
        ds.n = n;
        ds.invalid = bad;
        ds.estimate = n > 0 ? sum / static_cast<double>(n) : 0.0;
        const double var =
            n > 1 ? (sum2 - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1) : 0.0;
        ds.stderr_ = n > 1 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
        out[s] = ds;
    }
    return out;
}

}  // namespace slelab
