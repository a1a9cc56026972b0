#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "toy_data.hpp"

using namespace shapefit;

namespace {

double reference(std::span<const double> x)
{
   return 0.1 + 0.12 * std::pow(x[0] - 0.5, 3) + 0.002 / std::pow(x[1] + 0.1, 2) +
          0.1 * std::pow(x[2] - 0.6, 2) * std::pow(x[2] - 2.4, 2) +
          0.02 * std::pow(x[3] - 0.6, 2) * std::pow(x[3] - 2.4, 2) +
          0.02 * std::pow(x[4] - 1.1, 2) * std::pow(x[4] - 3.0, 2);
}

} // namespace

TEST_CASE("toy function matches its closed form")
{
   std::mt19937_64 rng(5);
   std::uniform_real_distribution<double> u(0.0, 1.0);
   for (int k = 0; k < 50; ++k) {
      std::vector<double> x(5);
      for (auto& v : x) {
         v = u(rng);
      }
      CHECK(toy::eval(x) == doctest::Approx(reference(x)).epsilon(1e-13));
      for (int axis = 0; axis < 5; ++axis) {
         CHECK(std::abs(toy::partial(x, axis, 1) - oracle::central_difference(reference, x, axis, 1, 1e-6)) < 1e-7);
         CHECK(std::abs(toy::partial(x, axis, 2) - oracle::central_difference(reference, x, axis, 2, 1e-4)) < 1e-4);
      }
   }
}

TEST_CASE("toy function satisfies its own constraints on a dense grid")
{
   // Separable: each constraint reduces to its axis component.
   for (int i = 0; i <= 2000; ++i) {
      const double t = i / 2000.0;
      CHECK(toy::component(0, t, 1) >= 0.0);
      CHECK(toy::component(1, t, 1) <= 0.0);
      CHECK(toy::component(1, t, 2) >= 0.0);
   }
   const auto lo = oracle::dense_grid_max([](std::span<const double> x) { return -reference(x); }, 5, 9);
   const auto hi = oracle::dense_grid_max(reference, 5, 9);
   CHECK(-lo.value >= 0.0);
   CHECK(hi.value <= 1.0);
   CHECK(toy::constraints().size() == 5);
}

TEST_CASE("toy samples are reproducible per seed")
{
   const auto a = toy::sample({toy::default_sigma, 30, 4});
   const auto b = toy::sample({toy::default_sigma, 30, 4});
   const auto c = toy::sample({toy::default_sigma, 30, 5});
   CHECK(a.size() == 30);
   CHECK(a.input_dim() == 5);
   CHECK(a.inputs == b.inputs);
   CHECK(a.targets == b.targets);
   CHECK(a.inputs != c.inputs);
   CHECK(a.inputs.minCoeff() >= 0.0);
   CHECK(a.inputs.maxCoeff() <= 1.0);

   const auto clean = toy::sample({0.0, 10, 4});
   for (std::size_t r = 0; r < clean.size(); ++r) {
      CHECK(clean.targets[static_cast<Eigen::Index>(r)] == doctest::Approx(reference(clean.point(r))));
   }
}
