#ifndef AGGFLEX_RNG_HPP
#define AGGFLEX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace aggflex {

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix_seed(seed ^ mix_seed(stream + 1));
}

/// Deterministic random source. All sampling in the library goes through
/// this class so results depend only on the seed, never on the platform's
/// distribution implementations. Streams split off a parent are
/// independent of the order in which the parent is used afterwards.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Child generator for a named parallel stream (trial id, restart id).
    Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive and desk-scale small,
    /// so modulo bias is negligible but we reject to stay exact.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
        std::uint64_t v = next();
        while (v >= limit) {
            v = next();
        }
        return v % n;
    }

    /// Standard normal via Box-Muller on the deterministic uniform stream.
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Eigen::VectorXd gaussian_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = gaussian();
        }
        return v;
    }

    /// Uniform direction on the unit sphere.
    Eigen::VectorXd direction(Eigen::Index n) {
        Eigen::VectorXd v = gaussian_vector(n);
        const double norm = v.norm();
        if (norm < 1e-12) {
            v.setZero();
            v(0) = 1.0;
            return v;
        }
        return v / norm;
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace aggflex

#endif
