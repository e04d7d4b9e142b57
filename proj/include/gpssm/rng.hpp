#ifndef GPSSM_RNG_HPP
#define GPSSM_RNG_HPP

#include <cstdint>
#include <random>

namespace gpssm {

// Seedable random generator used by every stochastic operation.
// Each top-level run owns one Rng; independent streams for sub-tasks
// (parallel chains, replicate simulations) come from split(), which
// derives a new seed by mixing the parent seed with a stream tag.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }

    double normal() { return normal_(gen_); }
    double normal(double mean, double sd) { return mean + sd * normal_(gen_); }
    double uniform() { return uniform_(gen_); }
    // +1 with probability p, else -1
    double sign(double p = 0.5) { return uniform_(gen_) < p ? 1.0 : -1.0; }

    Rng split(std::uint64_t stream) const { return Rng(mix(seed_, stream)); }

    std::mt19937_64& engine() { return gen_; }

  private:
    // splitmix64 finalizer over (seed, stream)
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace gpssm

#endif
