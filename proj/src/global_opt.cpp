#include "global_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include <boost/random/sobol.hpp>

#include "error.hpp"

namespace shapefit {

namespace {

double clamp01(double v)
{
   return std::min(1.0, std::max(0.0, v));
}

std::size_t full_grid_size(int d, int g)
{
   std::size_t n = 1;
   for (int j = 0; j < d; ++j) {
      n *= static_cast<std::size_t>(g);
      if (n > (std::size_t{1} << 40)) {
         break;
      }
   }
   return n;
}

bool use_full_grid(int d, const LowerLevelOptions& opts)
{
   return opts.grid_per_axis >= 2 && full_grid_size(d, opts.grid_per_axis) <= opts.budget;
}

// Projected gradient ascent with Barzilai-Borwein trial steps and a monotone
// Armijo backtrack; never moves to a worse point.
double gradient_phase(const Polynomial& g, std::vector<double>& x, const LowerLevelOptions& opts, double& max_slope)
{
   const std::size_t d = x.size();
   std::vector<double> grad(d), trial(d), trial_grad(d), prev_x(d), prev_grad(d);
   double value = g.value_and_gradient(x, grad);
   double step = 0.0;
   {
      double gn = 0.0;
      for (double v : grad) {
         gn += v * v;
      }
      gn = std::sqrt(gn);
      max_slope = std::max(max_slope, gn);
      step = gn > 0.0 ? 0.1 / gn : 1.0;
   }

   for (int it = 0; it < opts.max_ascent_steps; ++it) {
      // Stationarity test on the unit-step projected gradient.
      double pg = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
         const double moved = clamp01(x[j] + grad[j]) - x[j];
         pg += moved * moved;
      }
      if (std::sqrt(pg) <= opts.ascent_tol) {
         break;
      }

      double s = step;
      bool accepted = false;
      double trial_value = value;
      for (int bt = 0; bt < 60; ++bt) {
         double decrease = 0.0;
         for (std::size_t j = 0; j < d; ++j) {
            trial[j] = clamp01(x[j] + s * grad[j]);
            decrease += grad[j] * (trial[j] - x[j]);
         }
         trial_value = g.value_and_gradient(trial, trial_grad);
         if (trial_value >= value + 1e-4 * decrease && decrease > 0.0) {
            accepted = true;
            break;
         }
         if (decrease <= 0.0) {
            break;
         }
         s *= 0.5;
      }
      if (!accepted) {
         break;
      }

      prev_x = x;
      prev_grad = grad;
      x = trial;
      grad = trial_grad;
      const double gain = trial_value - value;
      value = trial_value;

      // Barzilai-Borwein step for ascent: s = <dx, dx> / -<dx, dg>.
      double ss = 0.0, sy = 0.0, gn = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
         const double dx = x[j] - prev_x[j];
         const double dg = grad[j] - prev_grad[j];
         ss += dx * dx;
         sy += dx * dg;
         gn += grad[j] * grad[j];
      }
      max_slope = std::max(max_slope, std::sqrt(gn));
      if (sy < 0.0) {
         step = std::min(ss / -sy, 1e6);
      } else {
         step = std::max(s * 2.0, 1e-12);
      }
      if (ss <= opts.ascent_tol * opts.ascent_tol && gain <= 1e-15 * (1.0 + std::abs(value))) {
         break;
      }
   }
   return value;
}

// Sweeps the axes, moving each coordinate to the global maximum of g along
// its line. Gradient steps stall at face and edge maxima that a coordinate
// line still connects to a higher one.
bool coordinate_sweep(const Polynomial& g, std::vector<double>& x, double& value)
{
   bool moved = false;
   for (int axis = 0; axis < g.input_dim(); ++axis) {
      const auto [t, v] = maximize_univariate(g.restrict_to_axis(x, axis));
      if (v > value + 1e-13 * (1.0 + std::abs(value))) {
         const double old = x[static_cast<std::size_t>(axis)];
         x[static_cast<std::size_t>(axis)] = t;
         const double exact = g(x);
         if (exact > value) {
            value = exact;
            moved = true;
         } else {
            x[static_cast<std::size_t>(axis)] = old;
         }
      }
   }
   return moved;
}

LowerLevelCandidate ascend(const Polynomial& g, std::vector<double> x, const LowerLevelOptions& opts,
                           double& max_slope)
{
   double value = gradient_phase(g, x, opts, max_slope);
   for (int round = 0; round < 50 && coordinate_sweep(g, x, value); ++round) {
      value = gradient_phase(g, x, opts, max_slope);
   }
   return {x, g(x)};
}

} // namespace

std::pair<double, double> maximize_univariate(std::span<const double> coefs)
{
   // Drop negligible leading coefficients so the companion matrix stays well scaled.
   double scale = 0.0;
   for (double c : coefs) {
      scale = std::max(scale, std::abs(c));
   }
   std::size_t deg = coefs.empty() ? 0 : coefs.size() - 1;
   while (deg > 0 && std::abs(coefs[deg]) <= 1e-14 * scale) {
      --deg;
   }
   std::vector<double> candidates{0.0, 1.0};
   if (deg >= 2) {
      // Critical points: roots of p' = sum k c_k t^(k-1), degree deg-1.
      const Eigen::Index n = static_cast<Eigen::Index>(deg) - 1;
      std::vector<double> dp(deg);
      for (std::size_t k = 1; k <= deg; ++k) {
         dp[k - 1] = static_cast<double>(k) * coefs[k];
      }
      if (n == 1) {
         candidates.push_back(-dp[0] / dp[1]);
      } else {
         Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
         for (Eigen::Index i = 1; i < n; ++i) {
            companion(i, i - 1) = 1.0;
         }
         for (Eigen::Index i = 0; i < n; ++i) {
            companion(i, n - 1) = -dp[static_cast<std::size_t>(i)] / dp[deg - 1];
         }
         const Eigen::VectorXcd roots = Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues();
         for (const auto& r : roots) {
            if (std::abs(r.imag()) <= 1e-6 * (1.0 + std::abs(r.real()))) {
               candidates.push_back(r.real());
            }
         }
      }
      // Newton on p' polishes each root; a step is kept only if |p'| shrinks.
      std::vector<double> ddp(deg - 1);
      for (std::size_t k = 1; k < dp.size(); ++k) {
         ddp[k - 1] = static_cast<double>(k) * dp[k];
      }
      for (std::size_t i = 2; i < candidates.size(); ++i) {
         double t = candidates[i];
         double residual = std::abs(horner(dp, t));
         for (int it = 0; it < 3; ++it) {
            const double h = horner(ddp, t);
            const double next = h != 0.0 ? t - horner(dp, t) / h : t;
            const double r = std::abs(horner(dp, next));
            if (!std::isfinite(next) || !(r < residual)) {
               break;
            }
            t = next;
            residual = r;
         }
         candidates[i] = t;
      }
   }
   double best_t = 0.0;
   double best_v = -std::numeric_limits<double>::infinity();
   for (double t : candidates) {
      if (!std::isfinite(t)) {
         continue;
      }
      t = clamp01(t);
      const double v = horner(coefs, t);
      if (v > best_v) {
         best_v = v;
         best_t = t;
      }
   }
   return {best_t, best_v};
}

std::vector<double> screening_samples(int input_dim, const LowerLevelOptions& opts)
{
   require(input_dim >= 1, "input dimension must be positive");
   const auto d = static_cast<std::size_t>(input_dim);
   std::vector<double> pts;
   if (use_full_grid(input_dim, opts)) {
      const std::size_t n = full_grid_size(input_dim, opts.grid_per_axis);
      const auto g = static_cast<std::size_t>(opts.grid_per_axis);
      pts.resize(n * d);
      for (std::size_t i = 0; i < n; ++i) {
         std::size_t rem = i;
         for (std::size_t j = d; j-- > 0;) {
            pts[i * d + j] = static_cast<double>(rem % g) / static_cast<double>(g - 1);
            rem /= g;
         }
      }
      return pts;
   }

   boost::random::sobol engine(static_cast<unsigned>(d));
   engine.seed(opts.seed);
   const double scale = 1.0 / (static_cast<double>(boost::random::sobol::max()) + 1.0);
   pts.resize(opts.budget * d);
   for (auto& v : pts) {
      v = static_cast<double>(engine()) * scale;
   }
   // Cube corners and centre, where low-degree polynomials like to peak.
   if (d <= 6) {
      const std::size_t corners = std::size_t{1} << d;
      for (std::size_t c = 0; c < corners; ++c) {
         for (std::size_t j = 0; j < d; ++j) {
            pts.push_back(static_cast<double>((c >> j) & 1U));
         }
      }
   }
   for (std::size_t j = 0; j < d; ++j) {
      pts.push_back(0.5);
   }
   return pts;
}

LowerLevelResult maximize_polynomial(const Polynomial& g, const LowerLevelOptions& opts)
{
   const int di = g.input_dim();
   const auto d = static_cast<std::size_t>(di);
   const bool grid = use_full_grid(di, opts);
   const auto gs = static_cast<std::size_t>(opts.grid_per_axis);

   std::vector<double> pts;  // sampling mode only; grid points are decoded on demand
   std::vector<double> values;
   std::vector<std::size_t> ranked;  // seed candidates, best first
   double spacing;
   double max_slope = 0.0;
   auto point = [&](std::size_t i) {
      std::vector<double> x(d);
      if (grid) {
         for (std::size_t j = d; j-- > 0;) {
            x[j] = static_cast<double>(i % gs) / static_cast<double>(gs - 1);
            i /= gs;
         }
      } else {
         std::copy(pts.begin() + static_cast<std::ptrdiff_t>(i * d),
                   pts.begin() + static_cast<std::ptrdiff_t>((i + 1) * d), x.begin());
      }
      return x;
   };
   auto by_value = [&](std::size_t a, std::size_t b) { return values[a] > values[b] || (values[a] == values[b] && a < b); };

   if (grid) {
      std::vector<std::vector<double>> nodes(d, std::vector<double>(gs));
      for (auto& axis : nodes) {
         for (std::size_t i = 0; i < gs; ++i) {
            axis[i] = static_cast<double>(i) / static_cast<double>(gs - 1);
         }
      }
      values = g.evaluate_grid(nodes);
      spacing = 1.0 / static_cast<double>(gs - 1);
      // Seeds are the discrete local maxima of the grid, one per basin it resolves.
      const std::size_t n = values.size();
      std::vector<char> is_max(n, 1);
      double max_step = 0.0;
      for (std::size_t stride = 1; stride < n; stride *= gs) {
         // Neighbour pairs along one axis: blocks of gs * stride, inner runs of stride.
         for (std::size_t block = 0; block < n; block += gs * stride) {
            for (std::size_t i = block; i + stride < block + gs * stride; ++i) {
               const double a = values[i];
               const double b = values[i + stride];
               max_step = std::max(max_step, std::abs(b - a));
               is_max[i] &= static_cast<char>(a >= b);
               is_max[i + stride] &= static_cast<char>(b >= a);
            }
         }
      }
      max_slope = max_step / spacing;
      for (std::size_t i = 0; i < n; ++i) {
         if (is_max[i]) {
            ranked.push_back(i);
         }
      }
      std::sort(ranked.begin(), ranked.end(), by_value);
   } else {
      pts = screening_samples(di, opts);
      const std::size_t n = pts.size() / d;
      values.resize(n);
      g.evaluate_points(pts, values);
      spacing = std::pow(static_cast<double>(opts.budget), -1.0 / static_cast<double>(di));
      const std::size_t pool = std::min(n, static_cast<std::size_t>(std::max(opts.ascent_seeds, 1)) * 50);
      ranked.resize(n);
      std::iota(ranked.begin(), ranked.end(), 0);
      std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(pool), ranked.end(), by_value);
      ranked.resize(pool);
   }

   LowerLevelResult result;
   const std::size_t best = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
   const std::vector<double> screen_best = point(best);
   const double screen_value = g(screen_best);

   if (g.variation_bound() == 0.0) {
      result.x_star = screen_best;
      result.value = screen_value;
      result.local_maxima.push_back({result.x_star, result.value});
      return result;
   }

   // Greedy diverse selection so that seeds do not crowd into one basin.
   std::vector<std::vector<double>> seeds;
   const double min_sep2 = (1.5 * spacing) * (1.5 * spacing);
   for (std::size_t k = 0; k < ranked.size() && seeds.size() < static_cast<std::size_t>(opts.ascent_seeds); ++k) {
      auto cand = point(ranked[k]);
      const bool far = std::none_of(seeds.begin(), seeds.end(), [&](const auto& s) {
         double dist2 = 0.0;
         for (std::size_t j = 0; j < d; ++j) {
            dist2 += (cand[j] - s[j]) * (cand[j] - s[j]);
         }
         return dist2 < min_sep2;
      });
      if (far) {
         seeds.push_back(std::move(cand));
      }
   }

   for (const auto& x : seeds) {
      const double start = g(x);
      LowerLevelCandidate c = ascend(g, x, opts, max_slope);
      if (c.value < start) {
         c = {x, start};
      }
      // Several seeds may climb to the same maximum; keep one copy.
      const bool duplicate = std::any_of(result.local_maxima.begin(), result.local_maxima.end(), [&](const auto& m) {
         double dist2 = 0.0;
         for (std::size_t j = 0; j < d; ++j) {
            dist2 += (m.x[j] - c.x[j]) * (m.x[j] - c.x[j]);
         }
         return dist2 < 1e-14;
      });
      if (!duplicate) {
         result.local_maxima.push_back(std::move(c));
      }
   }
   std::sort(result.local_maxima.begin(), result.local_maxima.end(),
             [](const auto& a, const auto& b) { return a.value > b.value; });

   if (!result.local_maxima.empty() && result.local_maxima.front().value >= screen_value) {
      result.x_star = result.local_maxima.front().x;
      result.value = result.local_maxima.front().value;
   } else {
      result.x_star = screen_best;
      result.value = screen_value;
   }
   result.certified_gap = spacing * max_slope;
   return result;
}

LowerLevelResult maximize_constraint(const ShapeConstraint& c, const FeatureMap& fm, const Eigen::VectorXd& w,
                                     const LowerLevelOptions& opts)
{
   return maximize_polynomial(constraint_polynomial(c, fm, w), opts);
}

} // namespace shapefit
