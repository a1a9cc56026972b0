#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "constraints.hpp"
#include "dataset.hpp"
#include "features.hpp"

namespace shapefit {

inline constexpr int model_format_version = 1;

struct Provenance {
   std::string mode;  // adaptive, grid or ridge
   double delta = 0.0;
   int grid_points = 0;
   double lambda = 0.0;
   std::uint64_t seed = 0;
   std::string timestamp;
   double gap = 0.0;  // may be +infinity

   friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// A fitted model y(x) = w^T phi(scale(x)) in original input units.
class TrainedModel {
public:
   TrainedModel() = default;
   TrainedModel(FeatureMap features, Eigen::VectorXd weights, std::vector<InputRange> ranges,
                std::vector<ShapeConstraint> constraints = {}, Provenance provenance = {});

   const FeatureMap& features() const { return features_; }
   const Eigen::VectorXd& weights() const { return weights_; }
   const std::vector<InputRange>& ranges() const { return ranges_; }
   const std::vector<ShapeConstraint>& constraints() const { return constraints_; }
   const Provenance& provenance() const { return provenance_; }
   int input_dim() const { return features_.input_dim(); }

   std::vector<double> to_unit(std::span<const double> raw) const;
   std::vector<double> from_unit(std::span<const double> unit) const;

   /// Prediction on a point already in unit-cube coordinates.
   double predict_unit(std::span<const double> unit) const;

   friend bool operator==(const TrainedModel& a, const TrainedModel& b);

private:
   FeatureMap features_;
   Eigen::VectorXd weights_;
   std::vector<InputRange> ranges_;
   std::vector<ShapeConstraint> constraints_;
   Provenance provenance_;
};

struct Prediction {
   double value = 0.0;
   /// Some coordinate lies outside the model's input ranges.
   bool extrapolated = false;
};

Prediction predict(const TrainedModel& model, std::span<const double> raw);

struct SlicePoint {
   double t = 0.0;  // original units along the slice axis
   double yhat = 0.0;
};

/// R equidistant points along `axis` over its full range, other inputs held at `anchor` (original units).
std::vector<SlicePoint> slice(const TrainedModel& model, std::span<const double> anchor, int axis, int resolution);

std::string slice_to_csv(const std::vector<SlicePoint>& points);

std::string serialize(const TrainedModel& model);
/// Throws version_mismatch or parse_error.
TrainedModel deserialize(std::string_view text);

} // namespace shapefit
