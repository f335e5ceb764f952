#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace softbound {

/// SplitMix64, used for seeding and stream derivation.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t scramble64(std::uint64_t x) { return SplitMix64(x).next(); }

/// xoshiro256++ with SplitMix64 state fill. Fully specified here so that
/// every stream is reproducible across platforms and compilers.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed)
    {
        SplitMix64 sm(seed);
        for (auto &w : s_)
            w = sm.next();
    }

    std::uint64_t next()
    {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Standard normal via the Marsaglia polar method.
    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    /// Gamma(alpha, 1) via Marsaglia-Tsang squeeze; alpha < 1 uses the
    /// boost Gamma(alpha + 1) * U^(1/alpha).
    double gamma(double alpha)
    {
        if (!(alpha > 0.0))
            throw std::invalid_argument("gamma: alpha must be positive");
        if (alpha < 1.0) {
            double u;
            do {
                u = uniform01();
            } while (u <= 0.0);
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        double d = alpha - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Independent, schedule-free stream for a work unit: the index is
/// scrambled into the seed, so unit i always sees the same draws no matter
/// which thread runs it.
inline Xoshiro256pp derive_stream(std::uint64_t seed, std::uint64_t index)
{
    return Xoshiro256pp(seed ^ scramble64(index * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL));
}

/// Dirichlet draw as normalized Gamma variates.
inline std::vector<double> dirichlet(std::span<const double> alpha, Xoshiro256pp &rng)
{
    std::vector<double> p(alpha.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        p[j] = rng.gamma(alpha[j]);
        sum += p[j];
    }
    for (double &v : p)
        v /= sum;
    return p;
}

} // namespace softbound
