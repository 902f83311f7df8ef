#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace topicflow {

// splitmix64; used to derive independent stream seeds from one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic random source. All variates are generated from the
/// mt19937_64 bit stream by code in this class, never through the standard
/// distribution adaptors, so identical seeds give identical sequences on
/// every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // 53-bit uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1].
  double uniform01_open_low() { return 1.0 - uniform01(); }

  double normal() {
    const double u1 = uniform01_open_low();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // Marsaglia-Tsang; shape > 0, unit scale.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape <= 0");
    if (shape < 1.0) {
      const double u = uniform01_open_low();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform01_open_low();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v;
      }
    }
  }

  std::vector<double> dirichlet(std::span<const double> alpha) {
    std::vector<double> out(alpha.size());
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      out[i] = gamma(alpha[i]);
      total += out[i];
    }
    if (total <= 0.0) {
      // All gammas underflowed; fall back to a point mass on one index.
      const std::size_t i = static_cast<std::size_t>(
          uniform01() * static_cast<double>(alpha.size()));
      for (auto& v : out) v = 0.0;
      out[i < alpha.size() ? i : alpha.size() - 1] = 1.0;
      return out;
    }
    for (auto& v : out) v /= total;
    return out;
  }

  // Index draw proportional to non-negative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("categorical: zero mass");
    double u = uniform01() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

  // Index draw proportional to exp(logw), normalized by log-sum-exp.
  std::size_t categorical_from_logs(std::span<const double> logw) {
    if (logw.empty())
      throw std::invalid_argument("categorical_from_logs: empty");
    double m = logw[0];
    for (double lw : logw)
      if (lw > m) m = lw;
    if (!std::isfinite(m))
      throw std::domain_error("categorical_from_logs: non-finite weights");
    double total = 0.0;
    for (double lw : logw) total += std::exp(lw - m);
    double u = uniform01() * total;
    for (std::size_t i = 0; i + 1 < logw.size(); ++i) {
      u -= std::exp(logw[i] - m);
      if (u < 0.0) return i;
    }
    return logw.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace topicflow
