#pragma once

#include <memory>
#include <random>

#include "fnls/asymptotics.hpp"
#include "fnls/spectral_eigen.hpp"

namespace fixture {

inline const fnls::SpectrumCache& desk() {
  static const auto cache = fnls::build_grid(fnls::ProblemParams{});
  return *cache;
}

inline const fnls::GroundStateRun& ground() {
  static const fnls::GroundStateRun run = fnls::compute_ground_state(desk(), fnls::MinimizeOptions{});
  return run;
}

inline const fnls::EigenResult& eigen() {
  static const fnls::EigenResult e = fnls::first_eigenpair(desk(), fnls::MinimizeOptions{});
  return e;
}

inline fnls::Field white_noise(const fnls::Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  fnls::Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = n(rng);
  return f;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace fixture
