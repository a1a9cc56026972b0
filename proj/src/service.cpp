#include "service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <boost/random/sobol.hpp>

#include "error.hpp"
#include "workflow.hpp"

namespace shapefit {

namespace fs = std::filesystem;

std::string_view to_string(SessionStatus s)
{
   switch (s) {
   case SessionStatus::idle:
      return "idle";
   case SessionStatus::fitting:
      return "fitting";
   case SessionStatus::failed:
      return "failed";
   }
   return "unknown";
}

namespace {

std::optional<SessionStatus> parse_status(std::string_view s)
{
   for (auto v : {SessionStatus::idle, SessionStatus::fitting, SessionStatus::failed}) {
      if (to_string(v) == s) {
         return v;
      }
   }
   return std::nullopt;
}

std::string new_session_id()
{
   static std::mutex mutex;
   static std::mt19937_64 rng{std::random_device{}() ^ static_cast<std::uint64_t>(
                                 std::chrono::steady_clock::now().time_since_epoch().count())};
   std::lock_guard lock(mutex);
   std::ostringstream os;
   os << std::hex << std::setfill('0') << std::setw(16) << rng() << std::setw(16) << rng();
   return os.str();
}

// Write-then-rename so a crash never leaves a half-written document.
void write_atomic(const fs::path& path, std::string_view contents)
{
   const fs::path tmp = path.string() + ".tmp";
   write_file(tmp.string(), contents);
   fs::rename(tmp, path);
}

json ranges_json(const std::vector<InputRange>& ranges)
{
   json out = json::array();
   for (const auto& r : ranges) {
      out.push_back({r.min, r.max});
   }
   return out;
}

json constraints_json(const std::vector<ShapeConstraint>& cs)
{
   json out = json::array();
   for (const auto& c : cs) {
      out.push_back(to_json(c));
   }
   return out;
}

std::vector<ShapeConstraint> constraints_from(const json& j)
{
   if (!j.is_array()) {
      fail(ErrorCode::parse_error, "'constraints' must be a list");
   }
   std::vector<ShapeConstraint> out;
   for (const auto& c : j) {
      out.push_back(constraint_from_json(c));
   }
   return out;
}

} // namespace

std::vector<ConstraintEdit> parse_edits(const json& body)
{
   const json* ops = &body;
   if (body.is_object()) {
      if (body.contains("operations")) {
         ops = &body["operations"];
      } else if (body.contains("constraints")) {
         ConstraintEdit e;
         e.op = ConstraintEdit::Op::replace;
         e.all = constraints_from(body["constraints"]);
         return {e};
      } else {
         fail(ErrorCode::parse_error, "constraint update needs 'operations' or 'constraints'");
      }
   }
   if (!ops->is_array()) {
      fail(ErrorCode::parse_error, "'operations' must be a list");
   }
   std::vector<ConstraintEdit> edits;
   for (std::size_t i = 0; i < ops->size(); ++i) {
      const json& o = (*ops)[i];
      try {
         ConstraintEdit e;
         const auto op = o.at("op").get<std::string>();
         if (op == "add") {
            e.op = ConstraintEdit::Op::add;
            e.constraint = constraint_from_json(o.at("constraint"));
         } else if (op == "remove") {
            e.op = ConstraintEdit::Op::remove;
            e.index = o.at("index").get<std::size_t>();
         } else if (op == "edit") {
            e.op = ConstraintEdit::Op::edit;
            e.index = o.at("index").get<std::size_t>();
            e.constraint = constraint_from_json(o.at("constraint"));
         } else if (op == "replace") {
            e.op = ConstraintEdit::Op::replace;
            e.all = constraints_from(o.at("constraints"));
         } else {
            fail(ErrorCode::parse_error, "unknown operation '" + op + "'");
         }
         edits.push_back(std::move(e));
      } catch (const json::exception& ex) {
         fail(ErrorCode::parse_error, "operation " + std::to_string(i) + ": " + ex.what());
      } catch (const Error& ex) {
         fail(ex.code(), "operation " + std::to_string(i) + ": " + ex.what());
      }
   }
   return edits;
}

AnchorSuggestion suggest_anchors(const Eigen::MatrixXd& unit_data, std::size_t count, std::uint64_t seed)
{
   require(unit_data.rows() > 0, "anchor suggestions need at least one data point");
   const auto d = static_cast<unsigned>(unit_data.cols());
   boost::random::sobol engine(d);
   engine.seed(seed);
   const double scale = 1.0 / (static_cast<double>(boost::random::sobol::max()) + 1.0);

   std::vector<std::vector<double>> pool(anchor_pool_size, std::vector<double>(d));
   std::vector<double> dist(anchor_pool_size);
   for (std::size_t c = 0; c < anchor_pool_size; ++c) {
      for (auto& v : pool[c]) {
         v = static_cast<double>(engine()) * scale;
      }
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < unit_data.rows(); ++r) {
         double s = 0.0;
         for (unsigned j = 0; j < d; ++j) {
            const double diff = pool[c][j] - unit_data(r, j);
            s += diff * diff;
         }
         best = std::min(best, s);
      }
      dist[c] = std::sqrt(best);
   }

   std::vector<std::size_t> order(anchor_pool_size);
   std::iota(order.begin(), order.end(), 0);
   count = std::min(count, anchor_pool_size);
   AnchorSuggestion out;
   std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
   for (std::size_t k = 0; k < count; ++k) {
      out.high_fidelity.push_back({pool[order[k]], dist[order[k]], order[k]});
   }
   std::iota(order.begin(), order.end(), 0);
   std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
   for (std::size_t k = 0; k < count; ++k) {
      out.low_fidelity.push_back({pool[order[k]], dist[order[k]], order[k]});
   }
   return out;
}

struct IsiService::Session {
   std::string id;
   Dataset raw;
   std::vector<InputRange> ranges;
   RunConfig config;
   std::vector<ShapeConstraint> constraints;
   std::vector<std::shared_ptr<const Iteration>> history;
   SessionStatus status = SessionStatus::idle;
   std::string error_code;
   std::string error_message;
   std::vector<std::size_t> conflicting;

   mutable std::mutex mutex;
   mutable std::condition_variable changed;
   std::thread worker;

   std::shared_ptr<const Iteration> iteration(int k) const
   {
      std::lock_guard lock(mutex);
      for (const auto& it : history) {
         if (it->number == k) {
            return it;
         }
      }
      fail(ErrorCode::not_found, "session " + id + " has no iteration " + std::to_string(k));
   }
};

IsiService::IsiService(std::optional<fs::path> storage) : storage_(std::move(storage))
{
   if (storage_) {
      fs::create_directories(*storage_);
      load_all();
   }
}

IsiService::~IsiService()
{
   std::vector<std::shared_ptr<Session>> all;
   {
      std::lock_guard lock(mutex_);
      for (auto& [id, s] : sessions_) {
         all.push_back(s);
      }
   }
   for (auto& s : all) {
      if (s->worker.joinable()) {
         s->worker.join();
      }
   }
}

std::shared_ptr<IsiService::Session> IsiService::find(const std::string& id) const
{
   std::lock_guard lock(mutex_);
   const auto it = sessions_.find(id);
   if (it == sessions_.end()) {
      fail(ErrorCode::not_found, "no session '" + id + "'");
   }
   return it->second;
}

std::string IsiService::create_session(std::string_view csv, const RunConfig& cfg,
                                       const std::vector<ShapeConstraint>& constraints)
{
   auto s = std::make_shared<Session>();
   s->raw = parse_csv(csv);
   require(s->raw.size() > 0, "dataset has no rows");
   s->ranges = effective_ranges(s->raw, cfg);
   s->config = cfg;
   s->config.input_ranges = s->ranges;
   for (const auto& c : constraints) {
      c.validate(s->raw.input_dim());
   }
   s->constraints = constraints;

   // Iteration 0 is the purely data-based ridge model.
   const SipProblem p = build_problem(s->raw, {}, s->config);
   const SolveReport ridge = solve_ridge_only(p);
   auto first = std::make_shared<Iteration>();
   first->number = 0;
   first->model = make_model(p, ridge, s->ranges, s->config);
   s->history.push_back(first);

   s->id = new_session_id();
   persist(*s);
   persist_iteration(*s, *first);
   std::lock_guard lock(mutex_);
   sessions_[s->id] = s;
   return s->id;
}

std::vector<std::string> IsiService::session_ids() const
{
   std::lock_guard lock(mutex_);
   std::vector<std::string> ids;
   for (const auto& [id, s] : sessions_) {
      ids.push_back(id);
   }
   return ids;
}

SessionStatus IsiService::status(const std::string& id) const
{
   const auto s = find(id);
   std::lock_guard lock(s->mutex);
   return s->status;
}

json IsiService::summary(const std::string& id) const
{
   const auto s = find(id);
   std::lock_guard lock(s->mutex);
   json j;
   j["id"] = s->id;
   j["status"] = std::string(to_string(s->status));
   if (s->status == SessionStatus::failed) {
      j["error"] = {{"code", s->error_code}, {"message", s->error_message}, {"conflicting", s->conflicting}};
   }
   j["config"] = to_json(s->config);
   j["constraints"] = constraints_json(s->constraints);
   j["columns"] = s->raw.columns;
   j["rows"] = s->raw.size();
   j["input_dim"] = s->raw.input_dim();
   j["input_ranges"] = ranges_json(s->ranges);
   j["iterations"] = s->history.size();
   j["latest_iteration"] = s->history.back()->number;
   return j;
}

std::vector<ShapeConstraint> IsiService::update_constraints(const std::string& id,
                                                            const std::vector<ConstraintEdit>& edits)
{
   const auto s = find(id);
   std::lock_guard lock(s->mutex);
   if (s->status == SessionStatus::fitting) {
      fail(ErrorCode::conflict, "session " + id + " is fitting; constraints are locked until the refit ends");
   }
   std::vector<ShapeConstraint> next = s->constraints;
   for (std::size_t i = 0; i < edits.size(); ++i) {
      const auto& e = edits[i];
      const std::string where = "operation " + std::to_string(i) + ": ";
      switch (e.op) {
      case ConstraintEdit::Op::add:
         require(e.constraint.has_value(), where + "add needs a constraint");
         next.push_back(*e.constraint);
         break;
      case ConstraintEdit::Op::remove:
         require(e.index && *e.index < next.size(), where + "constraint index out of range");
         next.erase(next.begin() + static_cast<std::ptrdiff_t>(*e.index));
         break;
      case ConstraintEdit::Op::edit:
         require(e.index && *e.index < next.size(), where + "constraint index out of range");
         require(e.constraint.has_value(), where + "edit needs a constraint");
         next[*e.index] = *e.constraint;
         break;
      case ConstraintEdit::Op::replace:
         next = e.all;
         break;
      }
   }
   for (std::size_t i = 0; i < next.size(); ++i) {
      try {
         next[i].validate(s->raw.input_dim());
      } catch (const Error& ex) {
         fail(ex.code(), "constraint " + std::to_string(i) + ": " + ex.what());
      }
   }
   s->constraints = std::move(next);
   if (s->status == SessionStatus::failed) {
      s->status = SessionStatus::idle;
      s->error_code.clear();
      s->error_message.clear();
      s->conflicting.clear();
   }
   persist(*s);
   return s->constraints;
}

void IsiService::start_refit(const std::string& id)
{
   const auto s = find(id);
   std::lock_guard lock(s->mutex);
   if (s->status == SessionStatus::fitting) {
      fail(ErrorCode::conflict, "session " + id + " is already fitting");
   }
   if (s->worker.joinable()) {
      // The previous job already published its result; only the thread remains.
      s->worker.join();
   }
   s->status = SessionStatus::fitting;
   s->error_code.clear();
   s->error_message.clear();
   s->conflicting.clear();
   persist(*s);

   RunConfig cfg = s->config;
   const std::vector<ShapeConstraint> constraints = s->constraints;
   if (constraints.empty()) {
      cfg.mode = SolveMode::ridge;
   }
   const int number = s->history.back()->number + 1;
   Session* raw_session = s.get();
   s->worker = std::thread([this, raw_session, cfg, constraints, number] {
      Session& session = *raw_session;
      std::shared_ptr<Iteration> next;
      std::string code, message;
      std::vector<std::size_t> conflicting;
      try {
         FitOutcome out = fit_model(session.raw, constraints, cfg);
         next = std::make_shared<Iteration>();
         next->number = number;
         next->model = std::move(out.model);
         next->report = std::move(out.report);
         next->constraints = constraints;
      } catch (const SolveError& e) {
         code = std::string(to_string(e.code()));
         message = e.what();
         conflicting = e.conflicting_constraints();
      } catch (const Error& e) {
         code = std::string(to_string(e.code()));
         message = e.what();
      } catch (const std::exception& e) {
         code = "internal";
         message = e.what();
      }
      std::lock_guard lock(session.mutex);
      if (next) {
         session.history.push_back(next);
         session.status = SessionStatus::idle;
         try {
            persist_iteration(session, *next);
         } catch (const std::exception&) {
            // The in-memory history stays authoritative if the disk write fails.
         }
      } else {
         session.status = SessionStatus::failed;
         session.error_code = code;
         session.error_message = message;
         session.conflicting = conflicting;
      }
      try {
         persist(session);
      } catch (const std::exception&) {
      }
      session.changed.notify_all();
   });
}

SessionStatus IsiService::wait(const std::string& id) const
{
   const auto s = find(id);
   std::unique_lock lock(s->mutex);
   s->changed.wait(lock, [&] { return s->status != SessionStatus::fitting; });
   return s->status;
}

AnchorSuggestion IsiService::anchors(const std::string& id, std::size_t count) const
{
   const auto s = find(id);
   Dataset unit;
   std::vector<InputRange> ranges;
   std::uint64_t seed = 0;
   {
      std::lock_guard lock(s->mutex);
      unit = scale_to_unit(s->raw, s->ranges);
      ranges = s->ranges;
      seed = s->config.seed;
   }
   AnchorSuggestion a = suggest_anchors(unit.inputs, count, seed);
   for (auto* list : {&a.high_fidelity, &a.low_fidelity}) {
      for (auto& anchor : *list) {
         for (std::size_t j = 0; j < anchor.point.size(); ++j) {
            anchor.point[j] = from_unit(anchor.point[j], ranges[j]);
         }
      }
   }
   return a;
}

namespace {

std::vector<double> centre_of(const std::vector<InputRange>& ranges)
{
   std::vector<double> c;
   for (const auto& r : ranges) {
      c.push_back(0.5 * (r.min + r.max));
   }
   return c;
}

} // namespace

SlicePayload IsiService::slice(const std::string& id, int iteration, std::optional<std::vector<double>> anchor,
                               int axis, int resolution) const
{
   const auto s = find(id);
   const auto it = s->iteration(iteration);
   const TrainedModel& model = it->model;
   require(axis >= 0 && axis < model.input_dim(), "slice axis " + std::to_string(axis) + " out of range");
   SlicePayload out;
   out.iteration = iteration;
   out.axis = axis;
   out.anchor = anchor ? *anchor : centre_of(model.ranges());
   require(out.anchor.size() == static_cast<std::size_t>(model.input_dim()),
           "anchor has " + std::to_string(out.anchor.size()) + " coordinates, the model expects " +
              std::to_string(model.input_dim()));
   out.curve = shapefit::slice(model, out.anchor, axis, resolution);
   const auto anchor_unit = model.to_unit(out.anchor);
   for (std::size_t j = 0; j < anchor_unit.size(); ++j) {
      if (j != static_cast<std::size_t>(axis) && (anchor_unit[j] < 0.0 || anchor_unit[j] > 1.0)) {
         out.extrapolated = true;
      }
   }
   // Training data is immutable after creation, so no lock is needed to read it.
   for (std::size_t r = 0; r < s->raw.size(); ++r) {
      const auto raw = s->raw.point(r);
      const auto unit = model.to_unit(raw);
      double d2 = 0.0;
      for (std::size_t j = 0; j < unit.size(); ++j) {
         if (j != static_cast<std::size_t>(axis)) {
            d2 += (unit[j] - anchor_unit[j]) * (unit[j] - anchor_unit[j]);
         }
      }
      ProjectedPoint p;
      p.row = r;
      p.t = raw[static_cast<std::size_t>(axis)];
      p.y = s->raw.targets[static_cast<Eigen::Index>(r)];
      p.distance = std::sqrt(d2);
      p.on_axis = p.distance <= on_axis_tolerance;
      out.data.push_back(p);
   }
   return out;
}

SurfacePayload IsiService::surface(const std::string& id, int iteration, std::optional<std::vector<double>> anchor,
                                   int axis_u, int axis_v, int resolution) const
{
   const auto s = find(id);
   const auto it = s->iteration(iteration);
   const TrainedModel& model = it->model;
   const int d = model.input_dim();
   require(axis_u >= 0 && axis_u < d && axis_v >= 0 && axis_v < d && axis_u != axis_v,
           "surface needs two distinct axes in range");
   require(resolution >= 2 && resolution <= 1000, "surface resolution must be in [2, 1000]");
   SurfacePayload out;
   out.iteration = iteration;
   out.axis_u = axis_u;
   out.axis_v = axis_v;
   out.anchor = anchor ? *anchor : centre_of(model.ranges());
   require(out.anchor.size() == static_cast<std::size_t>(d), "anchor has the wrong number of coordinates");
   auto unit = model.to_unit(out.anchor);
   const auto au = static_cast<std::size_t>(axis_u);
   const auto av = static_cast<std::size_t>(axis_v);
   for (int i = 0; i < resolution; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(resolution - 1);
      out.u.push_back(from_unit(t, model.ranges()[au]));
      out.v.push_back(from_unit(t, model.ranges()[av]));
   }
   for (int i = 0; i < resolution; ++i) {
      unit[au] = static_cast<double>(i) / static_cast<double>(resolution - 1);
      for (int k = 0; k < resolution; ++k) {
         unit[av] = static_cast<double>(k) / static_cast<double>(resolution - 1);
         out.values.push_back(model.predict_unit(unit));
      }
   }
   return out;
}

ViolationReport IsiService::audit(const std::string& id, int iteration, const AuditOptions& opts) const
{
   const auto s = find(id);
   const auto it = s->iteration(iteration);
   std::vector<ShapeConstraint> constraints;
   {
      std::lock_guard lock(s->mutex);
      constraints = s->constraints;
   }
   return audit_violations(it->model, constraints, opts);
}

std::string IsiService::export_model(const std::string& id, std::optional<int> iteration) const
{
   const auto s = find(id);
   int k;
   {
      std::lock_guard lock(s->mutex);
      k = iteration ? *iteration : s->history.back()->number;
   }
   return serialize(s->iteration(k)->model);
}

json IsiService::history(const std::string& id) const
{
   const auto s = find(id);
   std::lock_guard lock(s->mutex);
   json out = json::array();
   for (const auto& it : s->history) {
      const auto& prov = it->model.provenance();
      json j{{"number", it->number},
             {"mode", prov.mode},
             {"timestamp", prov.timestamp},
             {"constraints", constraints_json(it->constraints)}};
      if (it->report) {
         j["objective"] = it->report->objective;
         j["gap"] = number_or_null(it->report->gap);
         j["seconds"] = it->report->seconds;
         j["iterations"] = it->report->iterations;
      } else {
         j["initial"] = true;
      }
      out.push_back(j);
   }
   return out;
}

void IsiService::persist(const Session& s) const
{
   if (!storage_) {
      return;
   }
   const fs::path dir = *storage_ / s.id;
   fs::create_directories(dir / "iterations");
   if (!fs::exists(dir / "data.csv")) {
      write_atomic(dir / "data.csv", to_csv(s.raw));
   }
   json j;
   j["format"] = "shapefit-session";
   j["version"] = 1;
   j["id"] = s.id;
   j["config"] = to_json(s.config);
   j["constraints"] = constraints_json(s.constraints);
   j["status"] = std::string(to_string(s.status));
   j["error"] = {{"code", s.error_code}, {"message", s.error_message}, {"conflicting", s.conflicting}};
   write_atomic(dir / "session.json", j.dump(2) + "\n");
}

void IsiService::persist_iteration(const Session& s, const Iteration& it) const
{
   if (!storage_) {
      return;
   }
   const fs::path dir = *storage_ / s.id / "iterations";
   fs::create_directories(dir);
   json j;
   j["number"] = it.number;
   j["constraints"] = constraints_json(it.constraints);
   j["model"] = json::parse(serialize(it.model));
   j["report"] = it.report ? to_json(*it.report) : json(nullptr);
   write_atomic(dir / (std::to_string(it.number) + ".json"), j.dump(2) + "\n");
}

void IsiService::load_all()
{
   for (const auto& entry : fs::directory_iterator(*storage_)) {
      if (!entry.is_directory() || !fs::exists(entry.path() / "session.json")) {
         continue;
      }
      auto s = std::make_shared<Session>();
      const json j = parse_json(read_file((entry.path() / "session.json").string()), "session file");
      s->id = j.at("id").get<std::string>();
      s->config = config_from_json(j.at("config"));
      s->constraints = constraints_from(j.at("constraints"));
      s->raw = load_csv((entry.path() / "data.csv").string());
      s->ranges = effective_ranges(s->raw, s->config);
      s->status = parse_status(j.value("status", std::string("idle"))).value_or(SessionStatus::idle);
      if (j.contains("error")) {
         s->error_code = j["error"].value("code", std::string());
         s->error_message = j["error"].value("message", std::string());
         s->conflicting = j["error"].value("conflicting", std::vector<std::size_t>{});
      }
      if (s->status == SessionStatus::fitting) {
         s->status = SessionStatus::failed;
         s->error_code = "interrupted";
         s->error_message = "refit interrupted by a service restart";
      }
      std::vector<std::shared_ptr<const Iteration>> history;
      for (const auto& file : fs::directory_iterator(entry.path() / "iterations")) {
         if (file.path().extension() != ".json") {
            continue;
         }
         const json doc = parse_json(read_file(file.path().string()), "iteration file");
         auto it = std::make_shared<Iteration>();
         it->number = doc.at("number").get<int>();
         it->constraints = constraints_from(doc.at("constraints"));
         it->model = deserialize(doc.at("model").dump());
         if (!doc.at("report").is_null()) {
            it->report = report_from_json(doc["report"]);
         }
         history.push_back(it);
      }
      std::sort(history.begin(), history.end(), [](const auto& a, const auto& b) { return a->number < b->number; });
      if (history.empty() || history.front()->number != 0) {
         continue;  // not a complete session
      }
      s->history = std::move(history);
      sessions_[s->id] = s;
   }
}

json to_json(const AnchorSuggestion& a)
{
   auto list = [](const std::vector<Anchor>& anchors) {
      json out = json::array();
      for (const auto& x : anchors) {
         out.push_back({{"point", x.point}, {"distance", x.distance}, {"candidate", x.candidate}});
      }
      return out;
   };
   return json{{"high_fidelity", list(a.high_fidelity)}, {"low_fidelity", list(a.low_fidelity)}};
}

json to_json(const SlicePayload& s)
{
   json curve = json::array();
   for (const auto& p : s.curve) {
      curve.push_back({{"t", p.t}, {"yhat", p.yhat}});
   }
   json data = json::array();
   for (const auto& p : s.data) {
      data.push_back(
         {{"row", p.row}, {"t", p.t}, {"y", p.y}, {"distance", p.distance}, {"on_axis", p.on_axis}});
   }
   return json{{"iteration", s.iteration}, {"axis", s.axis},   {"anchor", s.anchor},
               {"extrapolated", s.extrapolated}, {"curve", curve}, {"data", data}};
}

json to_json(const SurfacePayload& s)
{
   return json{{"iteration", s.iteration}, {"axes", {s.axis_u, s.axis_v}}, {"anchor", s.anchor},
               {"u", s.u},                 {"v", s.v},                     {"values", s.values}};
}

} // namespace shapefit
