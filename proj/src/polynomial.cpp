#include "polynomial.hpp"

#include <cmath>

#include "error.hpp"

namespace shapefit {

double horner(std::span<const double> coefs, double t)
{
   double v = 0.0;
   for (std::size_t k = coefs.size(); k-- > 0;) {
      v = v * t + coefs[k];
   }
   return v;
}

Polynomial::Polynomial(std::vector<int> degree_caps)
   : caps_(std::move(degree_caps))
{
   require(!caps_.empty(), "polynomial needs at least one variable");
   strides_.assign(caps_.size(), 1);
   std::size_t size = 1;
   for (std::size_t j = caps_.size(); j-- > 0;) {
      require(caps_[j] >= 0, "polynomial degree caps must be non-negative");
      strides_[j] = size;
      size *= static_cast<std::size_t>(caps_[j]) + 1;
   }
   coefs_.assign(size, 0.0);
   term_slot_.assign(size, -1);
}

std::size_t Polynomial::flat_index(std::span<const int> exponents) const
{
   require(exponents.size() == caps_.size(), "exponent vector has wrong length");
   std::size_t idx = 0;
   for (std::size_t j = 0; j < caps_.size(); ++j) {
      require(exponents[j] >= 0 && exponents[j] <= caps_[j], "exponent outside the polynomial's degree caps");
      idx += static_cast<std::size_t>(exponents[j]) * strides_[j];
   }
   return idx;
}

void Polynomial::add(std::span<const int> exponents, double coef)
{
   const std::size_t idx = flat_index(exponents);
   if (term_slot_[idx] < 0) {
      term_slot_[idx] = static_cast<int>(terms_.size());
      terms_.push_back(Term{std::vector<int>(exponents.begin(), exponents.end()), idx});
   }
   coefs_[idx] += coef;
}

double Polynomial::coefficient(std::span<const int> exponents) const
{
   return coefs_[flat_index(exponents)];
}

namespace {

void fill_powers(std::span<const double> x, const std::vector<int>& caps, std::vector<double>& pw,
                 std::vector<std::size_t>& offset)
{
   offset.resize(caps.size());
   std::size_t total = 0;
   for (std::size_t j = 0; j < caps.size(); ++j) {
      offset[j] = total;
      total += static_cast<std::size_t>(caps[j]) + 1;
   }
   pw.resize(total);
   for (std::size_t j = 0; j < caps.size(); ++j) {
      double* row = pw.data() + offset[j];
      row[0] = 1.0;
      for (int k = 1; k <= caps[j]; ++k) {
         row[k] = row[k - 1] * x[j];
      }
   }
}

} // namespace

double Polynomial::operator()(std::span<const double> x) const
{
   require(x.size() == caps_.size(), "point has wrong dimension for polynomial");
   std::vector<double> pw;
   std::vector<std::size_t> offset;
   fill_powers(x, caps_, pw, offset);
   double sum = 0.0;
   for (const auto& term : terms_) {
      double v = coefs_[term.flat];
      for (std::size_t j = 0; j < caps_.size(); ++j) {
         v *= pw[offset[j] + static_cast<std::size_t>(term.exponents[j])];
      }
      sum += v;
   }
   return sum;
}

void Polynomial::evaluate_points(std::span<const double> points, std::span<double> out) const
{
   const std::size_t d = caps_.size();
   require(points.size() == out.size() * d, "point batch has wrong size for polynomial");
   // Flattened live terms: coefficient followed by the power-table offsets of each factor.
   std::vector<double> coef;
   std::vector<std::size_t> idx;
   std::vector<std::size_t> offset(d);
   std::size_t total = 0;
   for (std::size_t j = 0; j < d; ++j) {
      offset[j] = total;
      total += static_cast<std::size_t>(caps_[j]) + 1;
   }
   for (const auto& term : terms_) {
      if (coefs_[term.flat] == 0.0) {
         continue;
      }
      coef.push_back(coefs_[term.flat]);
      for (std::size_t j = 0; j < d; ++j) {
         idx.push_back(offset[j] + static_cast<std::size_t>(term.exponents[j]));
      }
   }
   std::vector<double> pw(total);
   for (std::size_t n = 0; n < out.size(); ++n) {
      const double* x = points.data() + n * d;
      for (std::size_t j = 0; j < d; ++j) {
         double* row = pw.data() + offset[j];
         row[0] = 1.0;
         for (int k = 1; k <= caps_[j]; ++k) {
            row[k] = row[k - 1] * x[j];
         }
      }
      double sum = 0.0;
      const std::size_t* ix = idx.data();
      for (std::size_t t = 0; t < coef.size(); ++t, ix += d) {
         double v = coef[t];
         for (std::size_t j = 0; j < d; ++j) {
            v *= pw[ix[j]];
         }
         sum += v;
      }
      out[n] = sum;
   }
}

double Polynomial::value_and_gradient(std::span<const double> x, std::span<double> gradient) const
{
   require(x.size() == caps_.size() && gradient.size() == caps_.size(),
           "point or gradient has wrong dimension for polynomial");
   std::vector<double> pw;
   std::vector<std::size_t> offset;
   fill_powers(x, caps_, pw, offset);
   const std::size_t d = caps_.size();
   for (auto& g : gradient) {
      g = 0.0;
   }
   double sum = 0.0;
   for (const auto& term : terms_) {
      const double c = coefs_[term.flat];
      if (c == 0.0) {
         continue;
      }
      double v = c;
      for (std::size_t j = 0; j < d; ++j) {
         v *= pw[offset[j] + static_cast<std::size_t>(term.exponents[j])];
      }
      sum += v;
      for (std::size_t l = 0; l < d; ++l) {
         const int e = term.exponents[l];
         if (e == 0) {
            continue;
         }
         double g = c * e;
         for (std::size_t j = 0; j < d; ++j) {
            const int ej = (j == l) ? e - 1 : term.exponents[j];
            g *= pw[offset[j] + static_cast<std::size_t>(ej)];
         }
         gradient[l] += g;
      }
   }
   return sum;
}

std::vector<double> Polynomial::restrict_to_axis(std::span<const double> anchor, int axis) const
{
   require(anchor.size() == caps_.size(), "anchor has wrong dimension for polynomial");
   require(axis >= 0 && axis < input_dim(), "restriction axis out of range");
   std::vector<double> pw;
   std::vector<std::size_t> offset;
   fill_powers(anchor, caps_, pw, offset);
   const auto a = static_cast<std::size_t>(axis);
   std::vector<double> out(static_cast<std::size_t>(caps_[a]) + 1, 0.0);
   for (const auto& term : terms_) {
      double v = coefs_[term.flat];
      for (std::size_t j = 0; j < caps_.size(); ++j) {
         if (j != a) {
            v *= pw[offset[j] + static_cast<std::size_t>(term.exponents[j])];
         }
      }
      out[static_cast<std::size_t>(term.exponents[a])] += v;
   }
   return out;
}

std::vector<double> Polynomial::evaluate_grid(const std::vector<std::vector<double>>& nodes) const
{
   require(nodes.size() == caps_.size(), "grid has wrong number of axes for polynomial");
   // Shape (outer, D_k, inner) -> (outer, G_k, inner), contracting one axis per pass.
   std::vector<double> current = coefs_;
   std::size_t outer = 1;
   for (std::size_t k = 0; k < caps_.size(); ++k) {
      const std::size_t dk = static_cast<std::size_t>(caps_[k]) + 1;
      const std::size_t gk = nodes[k].size();
      std::size_t inner = 1;
      for (std::size_t j = k + 1; j < caps_.size(); ++j) {
         inner *= static_cast<std::size_t>(caps_[j]) + 1;
      }
      std::vector<double> powers(gk * dk);
      for (std::size_t g = 0; g < gk; ++g) {
         double p = 1.0;
         for (std::size_t e = 0; e < dk; ++e) {
            powers[g * dk + e] = p;
            p *= nodes[k][g];
         }
      }
      std::vector<double> next(outer * gk * inner, 0.0);
      for (std::size_t o = 0; o < outer; ++o) {
         const double* src = current.data() + o * dk * inner;
         double* dst = next.data() + o * gk * inner;
         for (std::size_t g = 0; g < gk; ++g) {
            double* out = dst + g * inner;
            for (std::size_t e = 0; e < dk; ++e) {
               const double p = powers[g * dk + e];
               const double* in = src + e * inner;
               for (std::size_t i = 0; i < inner; ++i) {
                  out[i] += p * in[i];
               }
            }
         }
      }
      current = std::move(next);
      outer *= gk;
   }
   return current;
}

double Polynomial::variation_bound() const
{
   double total = 0.0;
   for (std::size_t i = 1; i < coefs_.size(); ++i) {
      total += std::abs(coefs_[i]);
   }
   return total;
}

} // namespace shapefit
