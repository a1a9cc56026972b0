#include "http_api.hpp"

#include <charconv>
#include <iostream>
#include <optional>
#include <sstream>

// Project headers first: httplib pulls in resolv.h, whose _res macro breaks Eigen.
#include "error.hpp"
#include "service.hpp"

#include <httplib.h>

namespace shapefit {

namespace {

int http_status(ErrorCode code)
{
   switch (code) {
   case ErrorCode::invalid_argument:
   case ErrorCode::parse_error:
   case ErrorCode::version_mismatch:
      return 400;
   case ErrorCode::not_found:
      return 404;
   case ErrorCode::conflict:
      return 409;
   case ErrorCode::infeasible:
   case ErrorCode::not_strictly_feasible:
   case ErrorCode::convergence_failure:
      return 422;
   case ErrorCode::io_error:
      return 500;
   }
   return 500;
}

void send_json(httplib::Response& res, const json& body, int status = 200)
{
   res.status = status;
   res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message)
{
   send_json(res, json{{"code", code}, {"message", message}}, status);
}

// Runs a handler, mapping exceptions to JSON error responses.
template <class F>
httplib::Server::Handler guarded(F f)
{
   return [f](const httplib::Request& req, httplib::Response& res) {
      try {
         f(req, res);
      } catch (const Error& e) {
         send_error(res, http_status(e.code()), to_string(e.code()), e.what());
      } catch (const json::exception& e) {
         send_error(res, 400, "parse_error", e.what());
      } catch (const std::exception& e) {
         send_error(res, 500, "internal", e.what());
      }
   };
}

std::optional<std::string> param(const httplib::Request& req, const std::string& key)
{
   if (!req.has_param(key)) {
      return std::nullopt;
   }
   return req.get_param_value(key);
}

double parse_number(const std::string& text, const std::string& what)
{
   double v = 0.0;
   const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
   if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail(ErrorCode::invalid_argument, "query parameter '" + what + "' is not a number: '" + text + "'");
   }
   return v;
}

int int_param(const httplib::Request& req, const std::string& key, int fallback)
{
   const auto v = param(req, key);
   if (!v) {
      return fallback;
   }
   const double d = parse_number(*v, key);
   if (d != static_cast<double>(static_cast<int>(d))) {
      fail(ErrorCode::invalid_argument, "query parameter '" + key + "' must be an integer");
   }
   return static_cast<int>(d);
}

std::optional<std::vector<double>> list_param(const httplib::Request& req, const std::string& key)
{
   const auto v = param(req, key);
   if (!v || v->empty()) {
      return std::nullopt;
   }
   std::vector<double> out;
   std::stringstream ss(*v);
   std::string item;
   while (std::getline(ss, item, ',')) {
      out.push_back(parse_number(item, key));
   }
   return out;
}

int path_int(const httplib::Request& req, std::size_t group)
{
   return static_cast<int>(parse_number(req.matches[static_cast<int>(group)].str(), "iteration"));
}

} // namespace

void register_routes(httplib::Server& server, IsiService& service)
{
   server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                               {"Access-Control-Allow-Headers", "Content-Type"},
                               {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
   server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

   // Body: {"csv": "...", "config": {...}, "constraints": [...]} or a bare CSV
   // with the config passed as query parameters degrees=1,5,2 and lambda, delta.
   server.Post("/sessions", guarded([&](const httplib::Request& req, httplib::Response& res) {
      std::string csv;
      RunConfig cfg;
      std::vector<ShapeConstraint> constraints;
      const bool is_json = req.get_header_value("Content-Type").find("json") != std::string::npos;
      if (is_json) {
         const json body = parse_json(req.body, "request body");
         csv = body.at("csv").get<std::string>();
         if (body.contains("config")) {
            cfg = config_from_json(body["config"]);
         }
         if (body.contains("constraints")) {
            constraints = parse_constraints(body["constraints"].dump());
         }
      } else {
         csv = req.body;
         if (const auto degrees = list_param(req, "degrees")) {
            for (double v : *degrees) {
               cfg.degrees.push_back(static_cast<int>(v));
            }
         }
         if (const auto v = param(req, "lambda")) {
            cfg.lambda = parse_number(*v, "lambda");
         }
         if (const auto v = param(req, "delta")) {
            cfg.delta = parse_number(*v, "delta");
         }
      }
      const std::string id = service.create_session(csv, cfg, constraints);
      send_json(res, service.summary(id), 201);
   }));

   server.Get("/sessions", guarded([&](const httplib::Request&, httplib::Response& res) {
      send_json(res, json{{"sessions", service.session_ids()}});
   }));

   server.Get(R"(/sessions/([0-9a-f]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
      send_json(res, service.summary(req.matches[1]));
   }));

   server.Post(R"(/sessions/([0-9a-f]+)/constraints)",
               guarded([&](const httplib::Request& req, httplib::Response& res) {
                  const auto edits = parse_edits(parse_json(req.body, "request body"));
                  json out = json::array();
                  for (const auto& c : service.update_constraints(req.matches[1], edits)) {
                     out.push_back(to_json(c));
                  }
                  send_json(res, json{{"constraints", out}});
               }));

   server.Post(R"(/sessions/([0-9a-f]+)/refit)", guarded([&](const httplib::Request& req, httplib::Response& res) {
      service.start_refit(req.matches[1]);
      send_json(res, json{{"status", "fitting"}}, 202);
   }));

   server.Get(R"(/sessions/([0-9a-f]+)/iterations)", guarded([&](const httplib::Request& req, httplib::Response& res) {
      send_json(res, json{{"iterations", service.history(req.matches[1])}});
   }));

   server.Get(R"(/sessions/([0-9a-f]+)/iterations/(\d+)/slice)",
              guarded([&](const httplib::Request& req, httplib::Response& res) {
                 const auto payload = service.slice(req.matches[1], path_int(req, 2), list_param(req, "anchor"),
                                                    int_param(req, "axis", 0), int_param(req, "resolution", 101));
                 send_json(res, to_json(payload));
              }));

   server.Get(R"(/sessions/([0-9a-f]+)/iterations/(\d+)/surface)",
              guarded([&](const httplib::Request& req, httplib::Response& res) {
                 const auto axes = list_param(req, "axes").value_or(std::vector<double>{0.0, 1.0});
                 require(axes.size() == 2, "surface needs axes=i,j");
                 const auto payload =
                    service.surface(req.matches[1], path_int(req, 2), list_param(req, "anchor"),
                                    static_cast<int>(axes[0]), static_cast<int>(axes[1]),
                                    int_param(req, "resolution", 41));
                 send_json(res, to_json(payload));
              }));

   server.Get(R"(/sessions/([0-9a-f]+)/iterations/(\d+)/audit)",
              guarded([&](const httplib::Request& req, httplib::Response& res) {
                 AuditOptions opts;
                 opts.seed = static_cast<std::uint64_t>(int_param(req, "seed", 0));
                 opts.n_anchors = static_cast<std::size_t>(int_param(req, "anchors", 10000));
                 opts.n_line = int_param(req, "line", 100);
                 send_json(res, to_json(service.audit(req.matches[1], path_int(req, 2), opts)));
              }));

   server.Get(R"(/sessions/([0-9a-f]+)/anchors)", guarded([&](const httplib::Request& req, httplib::Response& res) {
      const int count = int_param(req, "count", 5);
      require(count >= 1, "anchor count must be positive");
      send_json(res, to_json(service.anchors(req.matches[1], static_cast<std::size_t>(count))));
   }));

   server.Get(R"(/sessions/([0-9a-f]+)/export)", guarded([&](const httplib::Request& req, httplib::Response& res) {
      std::optional<int> k;
      if (req.has_param("iteration")) {
         k = int_param(req, "iteration", 0);
      }
      res.set_content(service.export_model(req.matches[1], k), "application/json");
   }));
}

int serve(const std::string& host, int port, const std::string& storage_dir)
{
   IsiService service(storage_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(storage_dir));
   httplib::Server server;
   register_routes(server, service);
   if (port == 0) {
      port = server.bind_to_any_port(host);
      if (port < 0) {
         std::cerr << "cannot bind " << host << "\n";
         return 1;
      }
   } else if (!server.bind_to_port(host, port)) {
      std::cerr << "cannot bind " << host << ":" << port << "\n";
      return 1;
   }
   std::cout << "listening on http://" << host << ":" << port << std::endl;
   return server.listen_after_bind() ? 0 : 1;
}

} // namespace shapefit
