#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "polynomial.hpp"

using namespace shapefit;

namespace {

struct Term {
   std::vector<int> e;
   double c;
};

struct Random {
   Polynomial p;
   std::vector<Term> terms;
};

Random random_polynomial(std::vector<int> caps, int n_terms, std::uint64_t seed)
{
   std::mt19937_64 rng(seed);
   std::normal_distribution<double> coef;
   Random r{Polynomial(caps), {}};
   for (int k = 0; k < n_terms; ++k) {
      std::vector<int> e(caps.size());
      for (std::size_t j = 0; j < caps.size(); ++j) {
         e[j] = std::uniform_int_distribution<int>(0, caps[j])(rng);
      }
      const double c = coef(rng);
      r.p.add(e, c);
      r.terms.push_back({e, c});
   }
   return r;
}

double reference(const std::vector<Term>& terms, std::span<const double> x)
{
   double v = 0.0;
   for (const auto& t : terms) {
      v += t.c * oracle::monomial(t.e, x);
   }
   return v;
}

} // namespace

TEST_CASE("point evaluation matches the monomial sum")
{
   const auto r = random_polynomial({3, 2, 4}, 12, 1);
   std::mt19937_64 rng(2);
   std::uniform_real_distribution<double> u(-1.0, 1.5);
   for (int k = 0; k < 20; ++k) {
      const std::vector<double> x = {u(rng), u(rng), u(rng)};
      CHECK(r.p(x) == doctest::Approx(reference(r.terms, x)).epsilon(1e-12));
   }
}

TEST_CASE("repeated add accumulates coefficients")
{
   Polynomial p({2});
   const std::vector<int> e = {2};
   p.add(e, 1.5);
   p.add(e, -0.5);
   CHECK(p.coefficient(e) == 1.0);
   const std::vector<double> x = {3.0};
   CHECK(p(x) == 9.0);
}

TEST_CASE("batch, grid and gradient evaluation agree with the reference")
{
   const auto r = random_polynomial({2, 3}, 8, 5);
   const std::vector<std::vector<double>> nodes = {{0.0, 0.25, 1.0}, {0.1, 0.6}};
   const auto grid = r.p.evaluate_grid(nodes);
   REQUIRE(grid.size() == 6);
   std::vector<double> pts;
   for (double a : nodes[0]) {
      for (double b : nodes[1]) {
         pts.push_back(a);
         pts.push_back(b);
      }
   }
   std::vector<double> batch(6);
   r.p.evaluate_points(pts, batch);
   for (std::size_t k = 0; k < 6; ++k) {
      const std::span<const double> x(pts.data() + 2 * k, 2);
      CHECK(grid[k] == doctest::Approx(reference(r.terms, x)).epsilon(1e-12));
      CHECK(batch[k] == doctest::Approx(reference(r.terms, x)).epsilon(1e-12));
      std::vector<double> g(2);
      const double v = r.p.value_and_gradient(x, g);
      CHECK(v == doctest::Approx(reference(r.terms, x)).epsilon(1e-12));
      const auto f = [&](std::span<const double> y) { return reference(r.terms, y); };
      for (int axis = 0; axis < 2; ++axis) {
         CHECK(std::abs(g[static_cast<std::size_t>(axis)] - oracle::central_difference(f, x, axis, 1, 1e-6)) <
               1e-6);
      }
   }
}

TEST_CASE("axis restriction reproduces the polynomial along the line")
{
   const auto r = random_polynomial({3, 2, 2}, 15, 9);
   const std::vector<double> anchor = {0.2, 0.7, 0.4};
   for (int axis = 0; axis < 3; ++axis) {
      const auto coefs = r.p.restrict_to_axis(anchor, axis);
      for (double t : {0.0, 0.3, 0.8, 1.0}) {
         auto x = anchor;
         x[static_cast<std::size_t>(axis)] = t;
         CHECK(horner(coefs, t) == doctest::Approx(reference(r.terms, x)).epsilon(1e-12));
      }
   }
}

TEST_CASE("variation bound vanishes exactly for constants")
{
   Polynomial p({2, 2});
   const std::vector<int> zero = {0, 0};
   p.add(zero, 4.0);
   CHECK(p.variation_bound() == 0.0);
   const std::vector<int> e = {1, 1};
   p.add(e, -0.5);
   CHECK(p.variation_bound() == 0.5);
}
