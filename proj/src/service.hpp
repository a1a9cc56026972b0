#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evaluation.hpp"
#include "model_store.hpp"
#include "serialization.hpp"

namespace shapefit {

enum class SessionStatus { idle, fitting, failed };

std::string_view to_string(SessionStatus s);

struct Iteration {
   int number = 0;
   TrainedModel model;
   /// Absent for the initial ridge model.
   std::optional<SolveReport> report;
   std::vector<ShapeConstraint> constraints;
};

struct ConstraintEdit {
   enum class Op { add, remove, edit, replace };
   Op op = Op::add;
   std::optional<std::size_t> index;                 // remove, edit
   std::optional<ShapeConstraint> constraint;        // add, edit
   std::vector<ShapeConstraint> all;                 // replace
};

std::vector<ConstraintEdit> parse_edits(const json& body);

struct Anchor {
   std::vector<double> point;  // original units
   double distance = 0.0;      // to the nearest training point, unit-cube metric
   std::size_t candidate = 0;
};

struct AnchorSuggestion {
   std::vector<Anchor> high_fidelity;  // nearest to the data
   std::vector<Anchor> low_fidelity;   // farthest from the data
};

struct ProjectedPoint {
   std::size_t row = 0;
   double t = 0.0;         // coordinate on the slice axis, original units
   double y = 0.0;         // observed output
   double distance = 0.0;  // off-axis distance to the anchor, unit-cube metric
   bool on_axis = false;
};

struct SlicePayload {
   int iteration = 0;
   int axis = 0;
   std::vector<double> anchor;
   bool extrapolated = false;
   std::vector<SlicePoint> curve;
   std::vector<ProjectedPoint> data;
};

struct SurfacePayload {
   int iteration = 0;
   int axis_u = 0;
   int axis_v = 0;
   std::vector<double> anchor;
   std::vector<double> u;       // original units
   std::vector<double> v;
   std::vector<double> values;  // row-major, u slowest
};

inline constexpr std::size_t anchor_pool_size = 4096;
inline constexpr double on_axis_tolerance = 1e-9;

/// Nearest/farthest-from-data anchors among a seeded Sobol pool in [0,1]^d.
/// `unit_data` holds the training inputs scaled to the unit cube.
AnchorSuggestion suggest_anchors(const Eigen::MatrixXd& unit_data, std::size_t count, std::uint64_t seed = 0);

/// Sessions of the inspect / specify / integrate loop. Each session holds its
/// data, run settings, current constraints and an append-only model history
/// whose first entry is the unconstrained ridge fit.
class IsiService {
public:
   /// With a storage directory, sessions persist there and are reloaded on construction.
   explicit IsiService(std::optional<std::filesystem::path> storage = std::nullopt);
   ~IsiService();
   IsiService(const IsiService&) = delete;
   IsiService& operator=(const IsiService&) = delete;

   std::string create_session(std::string_view csv, const RunConfig& cfg,
                              const std::vector<ShapeConstraint>& constraints = {});
   std::vector<std::string> session_ids() const;
   json summary(const std::string& id) const;
   SessionStatus status(const std::string& id) const;

   /// Applies all edits or none. Rejected while a refit is running.
   std::vector<ShapeConstraint> update_constraints(const std::string& id, const std::vector<ConstraintEdit>& edits);

   /// Starts an asynchronous refit with the current constraints.
   void start_refit(const std::string& id);
   /// Blocks until the session is not fitting; returns the final status.
   SessionStatus wait(const std::string& id) const;

   AnchorSuggestion anchors(const std::string& id, std::size_t count) const;
   /// A missing anchor means the centre of the input ranges.
   SlicePayload slice(const std::string& id, int iteration, std::optional<std::vector<double>> anchor, int axis,
                      int resolution) const;
   SurfacePayload surface(const std::string& id, int iteration, std::optional<std::vector<double>> anchor,
                          int axis_u, int axis_v, int resolution) const;
   ViolationReport audit(const std::string& id, int iteration, const AuditOptions& opts) const;
   /// Model file of an iteration (the latest when absent).
   std::string export_model(const std::string& id, std::optional<int> iteration) const;
   json history(const std::string& id) const;

private:
   struct Session;
   std::shared_ptr<Session> find(const std::string& id) const;
   void persist(const Session& s) const;
   void persist_iteration(const Session& s, const Iteration& it) const;
   void load_all();

   std::optional<std::filesystem::path> storage_;
   mutable std::mutex mutex_;
   std::map<std::string, std::shared_ptr<Session>> sessions_;
};

json to_json(const AnchorSuggestion& a);
json to_json(const SlicePayload& s);
json to_json(const SurfacePayload& s);

} // namespace shapefit
