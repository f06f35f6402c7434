#pragma once

#include <cstdint>
#include <random>

#include "mrct/endpoints.hpp"
#include "mrct/numerics.hpp"

namespace mrct {

// splitmix64 mixing step; used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream key as a pure function of (master seed, path components); replication
// i's generator never depends on how many draws other replications consumed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(master ^ 0x6a09e667f3bcc908ULL);
    s = splitmix64(s ^ (a + 1) * 0xd6e8feb86659fd93ULL);
    s = splitmix64(s ^ (b + 1) * 0xa5a5a5a5a5a5a5a5ULL);
    s = splitmix64(s ^ (c + 1) * 0x2545f4914f6cdd1dULL);
    return s;
}

// Seeded generator with explicit variate transforms (inverse-CDF normal,
// inversion exponential) so output is identical across standard libraries.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0,1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        return mean + sd * std_normal_quantile(uniform());
    }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    bool bernoulli(double p) { return uniform() < p; }

    double sample_survival(const SurvivalModel& model) { return model.sample(uniform()); }

    double sample_censoring(const CensoringModel& model) {
        if (model.kind == CensoringModel::Kind::uniform) return model.sample(uniform());
        return model.sample(0.0);  // deterministic kinds consume no draws
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mrct
