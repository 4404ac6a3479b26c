#pragma once

#include <cmath>
#include <cstdint>

namespace slelab {

/**
 * Counter-based random stream (Philox 4x32-10).
 *
 * A stream is a pure function of (master_seed, stream_index): the n-th draw
 * depends on nothing but those two values and n, so distinct stream indices
 * give independent streams and replicas can run concurrently without shared
 * state. Copying a stream replays it from the copied position.
 */
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : key0_(static_cast<std::uint32_t>(master_seed)),
          key1_(static_cast<std::uint32_t>(master_seed >> 32)),
          ctr2_(static_cast<std::uint32_t>(stream_index)),
          ctr3_(static_cast<std::uint32_t>(stream_index >> 32)) {}

    std::uint32_t next_u32() {
        if (have_ == 0) refill();
        return block_[4 - have_--];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform in (0, 1]; never returns 0, so log() is always safe.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (second value cached).
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
    double next_gamma(double shape) {
        if (shape < 1.0) {
            const double u = next_uniform();
            return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = next_gaussian();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = next_uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Chi-squared with (possibly fractional) nu > 0 degrees of freedom.
    double next_chi_squared(double nu) { return 2.0 * next_gamma(0.5 * nu); }

private:
    static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
    }
    static std::uint32_t mullo(std::uint32_t a, std::uint32_t b) { return a * b; }

    void refill() {
        std::uint32_t c0 = ctr0_, c1 = ctr1_, c2 = ctr2_, c3 = ctr3_;
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            const std::uint32_t lo0 = mullo(0xD2511F53u, c0);
            const std::uint32_t hi0 = mulhi(0xD2511F53u, c0);
            const std::uint32_t lo1 = mullo(0xCD9E8D57u, c2);
            const std::uint32_t hi1 = mulhi(0xCD9E8D57u, c2);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        block_[0] = c0; block_[1] = c1; block_[2] = c2; block_[3] = c3;
        have_ = 4;
        if (++ctr0_ == 0) ++ctr1_;  // 64-bit draw counter; ctr2/ctr3 hold the stream
    }

    std::uint32_t key0_, key1_;
    std::uint32_t ctr0_ = 0, ctr1_ = 0, ctr2_, ctr3_;
    std::uint32_t block_[4] = {0, 0, 0, 0};
    int have_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace slelab
