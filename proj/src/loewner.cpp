#include "slelab/loewner.hpp"

#include <ostream>
#include <stdexcept>

namespace slelab {

FlowResult LoewnerChain::flow(Complex z) const {
    if (z.imag() == 0.0) return flow_real(z.real());
    double t = 0.0;
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
        const SlitMapAtom& a = atoms_[k];
        if (std::abs(z - Complex(a.w, 0.0)) <= a.base_disk_radius()) return FlowResult::gone(t, k);
        z = a.apply(z);
        if (z.imag() < 0.0) z = {z.real(), 0.0};  // clamp roundoff below the axis
        t += a.dt;
    }
    return FlowResult::alive(z);
}

FlowResult LoewnerChain::flow_real(double x) const {
    double t = 0.0;
    int side = 0;  // sign of x - w, fixed once nonzero; a flip means W crossed x
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
        const SlitMapAtom& a = atoms_[k];
        const double gap = x - a.w;
        if (std::abs(gap) <= a.swallow_guard()) return FlowResult::gone(t, k);
        const int s = gap > 0.0 ? 1 : -1;
        if (side == 0) side = s;
        if (s != side) return FlowResult::gone(t, k);
        x = a.apply_real(x);
        t += a.dt;
    }
    return FlowResult::alive(Complex(x, 0.0));
}

std::optional<double> LoewnerChain::swallow_time(double x) const {
    const FlowResult r = flow_real(x);
    if (r.swallowed) return r.swallowed_at;
    return std::nullopt;
}

MapJet LoewnerChain::jet(Complex z) const {
    MapJet j = MapJet::identity(z);
    double t = 0.0;
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
        const SlitMapAtom& a = atoms_[k];
        if (std::abs(j.f - Complex(a.w, 0.0)) <= a.swallow_guard())
            throw std::domain_error("LoewnerChain::jet: point swallowed at t=" + std::to_string(t));
        j = j.then(a.jet(j.f));
        t += a.dt;
    }
    return j;
}

LoewnerChain chain_from_driver(const DriverPath& driver) {
    std::vector<SlitMapAtom> atoms;
    atoms.reserve(driver.grid.n_steps);
    for (std::size_t j = 0; j < driver.grid.n_steps; ++j)
        atoms.push_back({driver.W[j], driver.grid.dt});
    return LoewnerChain(std::move(atoms));
}

TracePath trace_points(const LoewnerChain& chain, const DriverPath& driver, double lift,
                       std::size_t stride) {
    if (stride == 0) stride = 1;
    TracePath out;
    const auto& atoms = chain.atoms();
    for (std::size_t j = 0; j <= atoms.size(); j += stride) {
        const double eps = lift > 0.0 ? lift
                                      : std::sqrt(j > 0 ? atoms[j - 1].dt : driver.grid.dt) / 10.0;
        bool ok = false;
        Complex z;
        double e = eps;
        for (int attempt = 0; attempt < 3 && !ok; ++attempt, e *= 2.0) {
            z = Complex(driver.W[j], e);
            ok = true;
            for (std::size_t k = j; k-- > 0;) {
                z = atoms[k].apply_inverse(z);
                if (z.imag() < -e) { ok = false; break; }  // landed on a cut
            }
        }
        out.times.push_back(j > 0 ? driver.grid.time(j) : 0.0);
        out.points.push_back(ok ? Complex(z.real(), std::max(z.imag(), 0.0)) : Complex(0, 0));
        out.valid.push_back(ok);
    }
    return out;
}

void write_trace_csv(std::ostream& os, const TracePath& trace) {
    os << "t,re,im\n";
    os.precision(17);
    for (std::size_t j = 0; j < trace.points.size(); ++j) {
        if (!trace.valid[j]) continue;
        os << trace.times[j] << "," << trace.points[j].real() << "," << trace.points[j].imag()
           << "\n";
    }
}

void write_chain_txt(std::ostream& os, const LoewnerChain& chain) {
    os.precision(17);
    for (const auto& a : chain.atoms()) os << a.w << " " << a.dt << "\n";
}

}  // namespace slelab
