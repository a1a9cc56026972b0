#include "toy_data.hpp"

#include <random>

#include "error.hpp"

namespace shapefit::toy {

namespace {

// c (t - a)^2 (t - b)^2 and its first two derivatives.
double double_well(double t, double c, double a, double b, int order)
{
   const double u = t - a;
   const double v = t - b;
   switch (order) {
   case 0:
      return c * u * u * v * v;
   case 1:
      return c * 2.0 * u * v * (u + v);
   default:
      return c * 2.0 * (v * v + 4.0 * u * v + u * u);
   }
}

} // namespace

double component(int axis, double t, int order)
{
   require(order >= 0 && order <= 2, "toy derivative order must be 0, 1 or 2");
   switch (axis) {
   case 0: {
      const double u = t - 0.5;
      return order == 0 ? 0.12 * u * u * u : order == 1 ? 0.36 * u * u : 0.72 * u;
   }
   case 1: {
      const double s = t + 0.1;
      return order == 0 ? 0.002 / (s * s) : order == 1 ? -0.004 / (s * s * s) : 0.012 / (s * s * s * s);
   }
   case 2:
      return double_well(t, 0.1, 0.6, 2.4, order);
   case 3:
      return double_well(t, 0.02, 0.6, 2.4, order);
   case 4:
      return double_well(t, 0.02, 1.1, 3.0, order);
   default:
      fail(ErrorCode::invalid_argument, "toy function has five inputs");
   }
}

double eval(std::span<const double> x)
{
   require(x.size() == static_cast<std::size_t>(input_dim), "toy function takes a point of dimension 5");
   double v = 0.1;
   for (int j = 0; j < input_dim; ++j) {
      v += component(j, x[static_cast<std::size_t>(j)], 0);
   }
   return v;
}

double partial(std::span<const double> x, int axis, int order)
{
   require(x.size() == static_cast<std::size_t>(input_dim), "toy function takes a point of dimension 5");
   require(axis >= 0 && axis < input_dim, "toy axis out of range");
   if (order == 0) {
      return eval(x);
   }
   return component(axis, x[static_cast<std::size_t>(axis)], order);
}

Dataset sample(const ToySpec& spec)
{
   require(spec.sigma >= 0.0, "noise level must be non-negative");
   require(spec.n_train >= 1, "need at least one training point");
   std::mt19937_64 rng(spec.seed);
   std::uniform_real_distribution<double> unif(0.0, 1.0);
   std::normal_distribution<double> noise(0.0, 1.0);

   Dataset data;
   data.columns = {"x1", "x2", "x3", "x4", "x5", "y"};
   data.inputs.resize(spec.n_train, input_dim);
   data.targets.resize(spec.n_train);
   std::vector<double> x(input_dim);
   for (int k = 0; k < spec.n_train; ++k) {
      for (int j = 0; j < input_dim; ++j) {
         x[static_cast<std::size_t>(j)] = unif(rng);
         data.inputs(k, j) = x[static_cast<std::size_t>(j)];
      }
      data.targets[k] = eval(x) + spec.sigma * noise(rng);
   }
   return data;
}

std::vector<ShapeConstraint> constraints()
{
   return {
      ShapeConstraint::increasing(0),
      ShapeConstraint::decreasing(1),
      ShapeConstraint::convex(1),
      ShapeConstraint::lower_bound(0.0),
      ShapeConstraint::upper_bound(1.0),
   };
}

} // namespace shapefit::toy
