#include <doctest.h>

#include <cmath>
#include <random>

#include "global_opt.hpp"
#include "oracles.hpp"

using namespace shapefit;

namespace {

Polynomial random_polynomial(std::vector<int> caps, std::uint64_t seed)
{
   std::mt19937_64 rng(seed);
   std::normal_distribution<double> g;
   Polynomial p(caps);
   std::vector<int> e(caps.size(), 0);
   while (true) {
      p.add(e, g(rng));
      std::size_t j = 0;
      while (j < caps.size() && e[j] == caps[j]) {
         e[j] = 0;
         ++j;
      }
      if (j == caps.size()) {
         break;
      }
      ++e[j];
   }
   return p;
}

} // namespace

TEST_CASE("univariate maximization finds the dense-grid maximum")
{
   std::mt19937_64 rng(1);
   std::normal_distribution<double> g;
   for (int trial = 0; trial < 40; ++trial) {
      std::vector<double> c(static_cast<std::size_t>(1 + trial % 7));
      for (auto& v : c) {
         v = g(rng);
      }
      const auto [t, v] = maximize_univariate(c);
      CHECK(t >= 0.0);
      CHECK(t <= 1.0);
      CHECK(v == doctest::Approx(horner(c, t)).epsilon(1e-12));
      const auto ref = oracle::dense_grid_max([&](std::span<const double> x) { return horner(c, x[0]); }, 1, 100001);
      CHECK(v >= ref.value - 1e-12);
      CHECK(v <= ref.value + 1e-6);
   }
}

TEST_CASE("multivariate maximization matches a dense grid in two dimensions")
{
   for (std::uint64_t seed = 0; seed < 8; ++seed) {
      CAPTURE(seed);
      const auto p = random_polynomial({4, 3}, seed);
      const auto res = maximize_polynomial(p);
      const auto ref = oracle::dense_grid_max([&](std::span<const double> x) { return p(x); }, 2, 801);
      CHECK(res.value == doctest::Approx(p(res.x_star)).epsilon(1e-12));
      CHECK(res.value >= ref.value - 1e-9);
      CHECK(res.value <= ref.value + 1e-4);
      for (double v : res.x_star) {
         CHECK(v >= 0.0);
         CHECK(v <= 1.0);
      }
      REQUIRE_FALSE(res.local_maxima.empty());
      CHECK(res.local_maxima.front().value == doctest::Approx(res.value));
   }
}

TEST_CASE("multivariate maximization in three dimensions beats a dense grid")
{
   const auto p = random_polynomial({2, 3, 2}, 77);
   const auto res = maximize_polynomial(p);
   const auto ref = oracle::dense_grid_max([&](std::span<const double> x) { return p(x); }, 3, 121);
   CHECK(res.value >= ref.value - 1e-9);
}

TEST_CASE("an interior maximum is located precisely")
{
   // g = -(x - 0.3)^2 - (y - 0.6)^2 + 0.1
   Polynomial p({2, 2});
   p.add(std::vector<int>{2, 0}, -1.0);
   p.add(std::vector<int>{1, 0}, 0.6);
   p.add(std::vector<int>{0, 2}, -1.0);
   p.add(std::vector<int>{0, 1}, 1.2);
   p.add(std::vector<int>{0, 0}, 0.1 - 0.09 - 0.36);
   const auto res = maximize_polynomial(p);
   CHECK(res.x_star[0] == doctest::Approx(0.3).epsilon(1e-6));
   CHECK(res.x_star[1] == doctest::Approx(0.6).epsilon(1e-6));
   CHECK(res.value == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("constraint maximization reports the worst violation")
{
   const auto fm = FeatureMap::enumerate(std::vector<int>{3});
   // y = x^3 - x: decreasing on [0, 1/sqrt 3], so the increasing constraint -y' peaks at x = 0 with value 1.
   Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
   for (std::size_t i = 0; i < fm.dimension(); ++i) {
      if (fm.indices()[i][0] == 3) {
         w[static_cast<Eigen::Index>(i)] = 1.0;
      }
      if (fm.indices()[i][0] == 1) {
         w[static_cast<Eigen::Index>(i)] = -1.0;
      }
   }
   const auto res = maximize_constraint(ShapeConstraint::increasing(0), fm, w);
   CHECK(res.value == doctest::Approx(1.0).epsilon(1e-12));
   CHECK(res.x_star[0] == doctest::Approx(0.0));
}

TEST_CASE("screening uses the full grid when it fits the budget and Sobol points otherwise")
{
   LowerLevelOptions opts;
   opts.grid_per_axis = 5;
   opts.budget = 1000;
   const auto grid = screening_samples(3, opts);
   CHECK(grid.size() == 125 * 3);
   opts.budget = 100;
   const auto sobol = screening_samples(3, opts);
   CHECK(sobol.size() >= 100 * 3);
   for (double v : sobol) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
   }
}

TEST_CASE("an affine constraint peaks at a vertex")
{
   // y = x^2 with a decreasing constraint: g = 2x, maximized at x = 1.
   const auto fm = FeatureMap::enumerate(std::vector<int>{2});
   Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
   for (std::size_t i = 0; i < fm.dimension(); ++i) {
      if (fm.indices()[i][0] == 2) {
         w[static_cast<Eigen::Index>(i)] = 1.0;
      }
   }
   const auto res = maximize_constraint(ShapeConstraint::decreasing(0), fm, w);
   CHECK(res.x_star[0] == 1.0);
   CHECK(res.value == doctest::Approx(2.0).epsilon(1e-14));

   const auto zero = maximize_constraint(ShapeConstraint::increasing(0), fm, Eigen::VectorXd::Zero(3));
   CHECK(zero.value == 0.0);
}

TEST_CASE("more ascent seeds never lower the result")
{
   const auto p = random_polynomial({3, 3, 2}, 123);
   LowerLevelOptions few;
   few.ascent_seeds = 1;
   LowerLevelOptions many;
   many.ascent_seeds = 20;
   const auto a = maximize_polynomial(p, few);
   const auto b = maximize_polynomial(p, many);
   CHECK(b.value >= a.value - 1e-12);
   // The ascent never ends below the best screening value.
   const auto grid = screening_samples(3, few);
   double best = -1e300;
   for (std::size_t i = 0; i < grid.size() / 3; ++i) {
      best = std::max(best, p(std::span<const double>(grid.data() + 3 * i, 3)));
   }
   CHECK(a.value >= best - 1e-12);
}
