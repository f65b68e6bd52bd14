#include "service.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "coastal/errors.hpp"
#include "coastal/grid_io.hpp"
#include "httplib.h"
#include "json.hpp"

namespace coastal::tools {

using json = nlohmann::json;

namespace {

ApiResponse reply(int status, const json& body) { return ApiResponse{status, body.dump()}; }

ApiResponse error_reply(int status, const std::string& message, const std::string& field = {}) {
  json j = {{"error", message}};
  if (!field.empty()) j["field"] = field;
  return reply(status, j);
}

/// Thrown for a request the service understands but cannot honor.
struct RequestError {
  int status;
  std::string message;
  std::string field;
};

json parse_body(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw RequestError{400, std::string("malformed JSON: ") + e.what(), ""};
  }
  if (!j.is_object()) throw RequestError{400, "request body must be a JSON object", ""};
  return j;
}

ProtectionScenario scenario_field(const json& j, const char* key, const ModelDir& m, bool required) {
  if (!j.contains(key)) {
    if (required) throw RequestError{400, std::string("missing field '") + key + "'", key};
    return {};
  }
  if (!j[key].is_string()) throw RequestError{400, std::string("field '") + key + "' must be a bitstring", key};
  ProtectionScenario s;
  try {
    s = parse_scenario(j[key].get<std::string>());
  } catch (const ParseError& e) {
    throw RequestError{400, e.what(), key};
  }
  if (s.size() != m.d_x) {
    throw RequestError{422,
                       std::string("field '") + key + "' has " + std::to_string(s.size()) +
                           " bits, model expects d_x = " + std::to_string(m.d_x),
                       key};
  }
  return s;
}

void require_finite(const Grid<float>& g) {
  for (float v : g.cells()) {
    if (!std::isfinite(v)) throw NumericError("model produced a non-finite value");
  }
}

template <class Fn>
ApiResponse guarded(std::atomic<unsigned long long>& incidents, Fn&& fn) {
  try {
    return fn();
  } catch (const RequestError& e) {
    return error_reply(e.status, e.message, e.field);
  } catch (const std::exception& e) {
    char id[32];
    std::snprintf(id, sizeof id, "inc-%06llu", ++incidents);
    std::cerr << "[" << id << "] " << e.what() << '\n';
    return reply(500, {{"error", "internal failure"}, {"incident", id}});
  }
}

}  // namespace

ServiceApi::ServiceApi(ModelDir model) : model_(std::move(model)) {}

ApiResponse ServiceApi::health() const { return reply(200, {{"status", "ok"}}); }

ApiResponse ServiceApi::meta() const {
  const ModelConfig& cfg = model_.model().config();
  return reply(200, {{"d_x", model_.d_x},
                     {"d_y", model_.locations.size()},
                     {"grid", {{"H", cfg.H}, {"W", cfg.W}}},
                     {"fingerprint", model_.fingerprint()},
                     {"parameter_count", model_.model().parameter_count()},
                     {"variant", std::string(to_string(cfg.variant))}});
}

ApiResponse ServiceApi::locations() const {
  json arr = json::array();
  for (const auto& l : model_.locations) {
    arr.push_back({{"id", l.id}, {"lon", l.lon}, {"lat", l.lat}, {"segment_id", l.segment_id}});
  }
  return reply(200, {{"locations", arr}});
}

ApiResponse ServiceApi::predict(const std::string& body) const {
  return guarded(incidents_, [&]() {
    const auto start = std::chrono::steady_clock::now();
    const json req = parse_body(body);
    const ProtectionScenario s = scenario_field(req, "scenario", model_, true);
    bool include_grid = false;
    if (req.contains("include_grid")) {
      if (!req["include_grid"].is_boolean()) throw RequestError{400, "field 'include_grid' must be a boolean", "include_grid"};
      include_grid = req["include_grid"].get<bool>();
    }
    const bool has_ref = req.contains("reference") && !req["reference"].is_null();
    const ProtectionScenario ref = has_ref ? scenario_field(req, "reference", model_, true) : ProtectionScenario{};

    const Grid<float> grid = predict_grid(model_, s);
    require_finite(grid);
    const DepthVector depths = extract_depths(grid, model_.index_map);
    json res;
    res["depths"] = depths;
    if (include_grid) {
      InundationMap map{grid, encode_inundation(depths, model_.index_map).mask};
      res["grid"] = base64_encode(serialize_grid(map));
    }
    if (has_ref) {
      const Grid<float> rg = predict_grid(model_, ref);
      require_finite(rg);
      const DepthVector rd = extract_depths(rg, model_.index_map);
      std::vector<float> diff(depths.size());
      for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = depths[k] - rd[k];
      res["diff"] = diff;
    }
    res["fingerprint"] = model_.fingerprint();
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    res["latency_ms"] = std::max(ms, 1e-6);
    return reply(200, res);
  });
}

ApiResponse ServiceApi::compare(const std::string& body) const {
  return guarded(incidents_, [&]() {
    const json req = parse_body(body);
    const ProtectionScenario a = scenario_field(req, "a", model_, true);
    const ProtectionScenario b = scenario_field(req, "b", model_, true);
    const Grid<float> ga = predict_grid(model_, a);
    const Grid<float> gb = predict_grid(model_, b);
    require_finite(ga);
    require_finite(gb);
    const DepthVector da = extract_depths(ga, model_.index_map);
    const DepthVector db = extract_depths(gb, model_.index_map);
    std::vector<float> diff(da.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = db[k] - da[k];
    return reply(200, {{"diff", diff}, {"fingerprint", model_.fingerprint()}});
  });
}

struct HttpService::Impl {
  httplib::Server server;
};

HttpService::HttpService(const ServiceApi& api) : impl_(std::make_unique<Impl>()) {
  auto& server = impl_->server;
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get("/health", [&api, send](const httplib::Request&, httplib::Response& res) { send(res, api.health()); });
  server.Get("/meta", [&api, send](const httplib::Request&, httplib::Response& res) { send(res, api.meta()); });
  server.Get("/locations",
             [&api, send](const httplib::Request&, httplib::Response& res) { send(res, api.locations()); });
  server.Post("/predict", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.predict(req.body));
  });
  server.Post("/compare", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.compare(req.body));
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(json{{"error", "not found"}}.dump(), "application/json");
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpService::listen() { impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_) impl_->server.stop();
}

void run_server(const ServiceApi& api, const std::string& host, int port) {
  HttpService service(api);
  const int bound = service.bind(host, port);
  std::cerr << "serving on http://" << host << ":" << bound << '\n';
  service.listen();
}

}  // namespace coastal::tools
