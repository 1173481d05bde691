#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"

using namespace fnls;
using fixture::rel;

namespace {

const std::vector<MinimizerResult>& ladder() {
  static const std::vector<MinimizerResult> runs = [] {
    std::vector<MinimizerResult> out;
    const double a_star = fixture::ground().gs.a_star;
    for (double f : {0.25, 0.5, 0.75, 0.9})
      out.push_back(minimize_Ea(fixture::desk(), f * a_star, gaussian_field(fixture::desk().grid(), 1.0),
                                MinimizeOptions{}, a_star));
    return out;
  }();
  return runs;
}

}  // namespace

TEST_CASE("options are validated") {
  MinimizeOptions o;
  o.backtrack = 1.0;
  CHECK_THROWS_AS(o.validate(), ParameterError);
  o = {};
  o.step0 = 0.0;
  CHECK_THROWS_AS(o.validate(), ParameterError);
  o = {};
  o.tol_grad = -1.0;
  CHECK_THROWS_AS(o.validate(), ParameterError);
  CHECK_NOTHROW(MinimizeOptions{}.validate());
}

TEST_CASE("minimize_Ea refuses couplings at or above the threshold") {
  const auto& c = fixture::desk();
  const double a_star = fixture::ground().gs.a_star;
  CHECK_THROWS_AS(minimize_Ea(c, 1.05 * a_star, gaussian_field(c.grid(), 1.0), {}, a_star),
                  ThresholdError);
  CHECK_THROWS_AS(minimize_Ea(c, a_star, gaussian_field(c.grid(), 1.0), {}, a_star), ThresholdError);
}

TEST_CASE("a = 0 reproduces the first eigenpair") {
  const auto& c = fixture::desk();
  const auto& eig = fixture::eigen();
  const MinimizerResult r = minimize_Ea(c, 0.0, random_positive_field(c.grid(), 2), {});
  CHECK(r.converged);
  CHECK(rel(r.e_a, eig.mu1) < 1e-9);
  CHECK(std::sqrt(l2_norm_sq(r.u - eig.phi1)) < 1e-6);
}

TEST_CASE("below threshold: positive energy, lower bound, constraint and multiplier identities") {
  const auto& c = fixture::desk();
  const double a_star = fixture::ground().gs.a_star;
  const double bs = c.beta_sq();
  for (const auto& r : ladder()) {
    CAPTURE(r.a / a_star);
    CHECK(r.converged);
    CHECK(r.e_a > 0.0);
    CHECK(r.e_a >= (1.0 - r.a / a_star) * r.breakdown.kinetic - 1e-9);
    CHECK(std::abs(l2_norm_sq(r.u) - 1.0) <= 1e-10);
    CHECK(r.u.min() >= 0.0);
    const double mu = r.e_a - r.a * bs / (1.0 + bs) * r.breakdown.interaction_raw;
    CHECK(std::abs(r.mu_a - mu) <= 1e-10 * std::max(1.0, std::abs(mu)));
    CHECK(rel(rayleigh_multiplier(r.u, r.a, c), r.mu_a) <= 1e-8);
    CHECK(r.eps_a == std::pow(r.breakdown.kinetic, -1.0 / (2.0 * c.s())));
    CHECK(r.kkt_residual <= MinimizeOptions{}.tol_grad);
  }
}

TEST_CASE("accepted steps never raise the energy") {
  for (const auto& r : ladder()) {
    for (std::size_t i = 1; i < r.trace.size(); ++i)
      CHECK(r.trace[i].energy <= r.trace[i - 1].energy + 1e-14 * std::abs(r.trace[i - 1].energy));
  }
}

TEST_CASE("energy is nonincreasing in a") {
  std::vector<double> e{fixture::eigen().mu1};
  for (const auto& r : ladder()) e.push_back(r.e_a);
  CHECK(energy_monotonicity_check(e));
  const std::vector<double> flat(4, 1.0);
  CHECK(energy_monotonicity_check(flat));
  const std::vector<double> up{0.1, 0.2, 0.3};
  CHECK_FALSE(energy_monotonicity_check(up));
}

TEST_CASE("interaction bound: holds at 0.9 a*, trivially at a = 0, detects inflation") {
  const auto& c = fixture::desk();
  const double a_star = fixture::ground().gs.a_star;
  const double mu1 = fixture::eigen().mu1;
  const BoundCheck b = interaction_bound_check(ladder().back(), c.beta_sq(), a_star, mu1);
  CHECK(b.pass);
  CHECK(b.margin > 0.0);
  const MinimizerResult r0 = minimize_Ea(c, 0.0, gaussian_field(c.grid(), 1.0), {});
  const BoundCheck b0 = interaction_bound_check(r0, c.beta_sq(), a_star, mu1);
  CHECK(b0.pass);
  CHECK(b0.margin > 0.5 * b0.mu1_bound);
  MinimizerResult fake = ladder().back();
  fake.breakdown.interaction_raw *= 10.0;
  CHECK_FALSE(interaction_bound_check(fake, c.beta_sq(), a_star, mu1).pass);
}

TEST_CASE("multistart at small a is unique; a = 0 returns phi1 from every start") {
  const auto& c = fixture::desk();
  const double a_star = fixture::ground().gs.a_star;
  const UniquenessReport u = multistart_uniqueness(c, 0.05 * a_star, 5, {}, a_star);
  CHECK(u.status == UniquenessStatus::Unique);
  CHECK(u.max_pairwise_l2 <= 1e-4);
  CHECK(u.energy_spread <= 1e-8);
  const UniquenessReport z = multistart_uniqueness(c, 0.0, 3, {}, a_star);
  for (const auto& r : z.runs) CHECK(std::sqrt(l2_norm_sq(r.u - fixture::eigen().phi1)) < 1e-6);
  CHECK_THROWS_AS(multistart_uniqueness(c, 0.5 * a_star, 3, {}, a_star), ParameterError);
}

TEST_CASE("random init generators are deterministic and normalized") {
  const Grid& g = fixture::desk().grid();
  const Field a = random_positive_field(g, 77), b = random_positive_field(g, 77);
  for (std::size_t n = 0; n < a.size(); ++n) CHECK(a[n] == b[n]);
  CHECK(a.min() > 0.0);
  CHECK(std::abs(l2_norm_sq(a) - 1.0) < 1e-14);
  const Field c = random_smooth_field(g, 5), d = random_smooth_field(g, 6);
  CHECK(std::abs(l2_norm_sq(c) - 1.0) < 1e-14);
  CHECK(l2_norm_sq(c - d) > 1e-3);
}
