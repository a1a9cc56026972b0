#include "model_store.hpp"

#include <sstream>

#include "error.hpp"
#include "serialization.hpp"

namespace shapefit {

TrainedModel::TrainedModel(FeatureMap features, Eigen::VectorXd weights, std::vector<InputRange> ranges,
                           std::vector<ShapeConstraint> constraints, Provenance provenance)
   : features_(std::move(features)),
     weights_(std::move(weights)),
     ranges_(std::move(ranges)),
     constraints_(std::move(constraints)),
     provenance_(std::move(provenance))
{
   require(static_cast<std::size_t>(weights_.size()) == features_.dimension(),
           "model has " + std::to_string(weights_.size()) + " weights but the feature map has dimension " +
              std::to_string(features_.dimension()));
   require(ranges_.size() == static_cast<std::size_t>(features_.input_dim()), "one input range per input required");
   for (const auto& r : ranges_) {
      require(r.min < r.max, "model input ranges must satisfy min < max");
   }
   for (const auto& c : constraints_) {
      c.validate(features_.input_dim());
   }
}

std::vector<double> TrainedModel::to_unit(std::span<const double> raw) const
{
   require(raw.size() == ranges_.size(), "point has dimension " + std::to_string(raw.size()) + ", model expects " +
                                            std::to_string(ranges_.size()));
   std::vector<double> out(raw.size());
   for (std::size_t j = 0; j < raw.size(); ++j) {
      out[j] = shapefit::to_unit(raw[j], ranges_[j]);
   }
   return out;
}

std::vector<double> TrainedModel::from_unit(std::span<const double> unit) const
{
   require(unit.size() == ranges_.size(), "point has wrong dimension for model");
   std::vector<double> out(unit.size());
   for (std::size_t j = 0; j < unit.size(); ++j) {
      out[j] = shapefit::from_unit(unit[j], ranges_[j]);
   }
   return out;
}

double TrainedModel::predict_unit(std::span<const double> unit) const
{
   return features_.eval(unit).dot(weights_);
}

bool operator==(const TrainedModel& a, const TrainedModel& b)
{
   return a.features_ == b.features_ && a.weights_.size() == b.weights_.size() && a.weights_ == b.weights_ &&
          a.ranges_ == b.ranges_ && a.constraints_ == b.constraints_ && a.provenance_ == b.provenance_;
}

Prediction predict(const TrainedModel& model, std::span<const double> raw)
{
   const auto unit = model.to_unit(raw);
   Prediction p;
   for (double u : unit) {
      if (u < 0.0 || u > 1.0) {
         p.extrapolated = true;
      }
   }
   p.value = model.predict_unit(unit);
   return p;
}

std::vector<SlicePoint> slice(const TrainedModel& model, std::span<const double> anchor, int axis, int resolution)
{
   require(axis >= 0 && axis < model.input_dim(), "slice axis out of range");
   require(resolution >= 2, "slice resolution must be at least 2");
   auto unit = model.to_unit(anchor);
   const auto a = static_cast<std::size_t>(axis);
   std::vector<SlicePoint> out(static_cast<std::size_t>(resolution));
   for (int i = 0; i < resolution; ++i) {
      // i / (R - 1) is the same double for every resolution sharing the node.
      const double u = static_cast<double>(i) / static_cast<double>(resolution - 1);
      unit[a] = u;
      out[static_cast<std::size_t>(i)] = {from_unit(u, model.ranges()[a]), model.predict_unit(unit)};
   }
   return out;
}

std::string slice_to_csv(const std::vector<SlicePoint>& points)
{
   std::ostringstream os;
   os.precision(17);
   os << "t,yhat\n";
   for (const auto& p : points) {
      os << p.t << ',' << p.yhat << '\n';
   }
   return os.str();
}

std::string serialize(const TrainedModel& model)
{
   json doc;
   doc["format"] = "shapefit-model";
   doc["version"] = model_format_version;
   doc["degrees"] = model.features().degrees();
   doc["dimension"] = model.features().dimension();
   const auto& w = model.weights();
   doc["weights"] = std::vector<double>(w.data(), w.data() + w.size());
   json ranges = json::array();
   for (const auto& r : model.ranges()) {
      ranges.push_back({r.min, r.max});
   }
   doc["input_ranges"] = ranges;
   doc["constraints"] = json::array();
   for (const auto& c : model.constraints()) {
      doc["constraints"].push_back(to_json(c));
   }
   const auto& p = model.provenance();
   doc["provenance"] = {{"mode", p.mode},   {"delta", p.delta}, {"grid_points", p.grid_points},
                        {"lambda", p.lambda}, {"seed", p.seed},   {"timestamp", p.timestamp},
                        {"gap", number_or_null(p.gap)}};
   return doc.dump(2) + "\n";
}

TrainedModel deserialize(std::string_view text)
{
   const json doc = parse_json(text, "model file");
   if (!doc.is_object() || doc.value("format", std::string()) != "shapefit-model") {
      fail(ErrorCode::parse_error, "model file: not a shapefit model document");
   }
   if (!doc.contains("version") || !doc["version"].is_number_integer() ||
       doc["version"].get<int>() != model_format_version) {
      fail(ErrorCode::version_mismatch, "model file version " + (doc.contains("version") ? doc["version"].dump() : "<missing>") +
                                           " does not match supported version " +
                                           std::to_string(model_format_version));
   }
   try {
      const auto degrees = doc.at("degrees").get<std::vector<int>>();
      auto fm = FeatureMap::enumerate(degrees);
      if (doc.contains("dimension") && doc["dimension"].get<std::size_t>() != fm.dimension()) {
         fail(ErrorCode::parse_error, "model file: stored dimension disagrees with the degrees");
      }
      const auto w = doc.at("weights").get<std::vector<double>>();
      std::vector<InputRange> ranges;
      for (const auto& r : doc.at("input_ranges")) {
         ranges.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
      }
      std::vector<ShapeConstraint> constraints;
      for (const auto& c : doc.value("constraints", json::array())) {
         constraints.push_back(constraint_from_json(c));
      }
      Provenance prov;
      if (doc.contains("provenance")) {
         const auto& p = doc["provenance"];
         prov.mode = p.value("mode", std::string());
         prov.delta = p.value("delta", 0.0);
         prov.grid_points = p.value("grid_points", 0);
         prov.lambda = p.value("lambda", 0.0);
         prov.seed = p.value("seed", std::uint64_t{0});
         prov.timestamp = p.value("timestamp", std::string());
         prov.gap = p.contains("gap") ? number_or_inf(p["gap"]) : 0.0;
      }
      return TrainedModel(std::move(fm), Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                          std::move(ranges), std::move(constraints), std::move(prov));
   } catch (const json::exception& e) {
      fail(ErrorCode::parse_error, std::string("model file: ") + e.what());
   } catch (const Error& e) {
      if (e.code() == ErrorCode::invalid_argument) {
         fail(ErrorCode::parse_error, std::string("model file: ") + e.what());
      }
      throw;
   }
}

} // namespace shapefit
