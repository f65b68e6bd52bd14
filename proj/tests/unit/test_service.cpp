#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "coastal/grid_io.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "service.hpp"

using namespace coastal;
using namespace coastal::tools;
using nlohmann::json;

namespace {

const fixtures::TinyModelDir& shared_dir() {
  static fixtures::TinyModelDir dir;
  return dir;
}

ServiceApi make_api() { return ServiceApi(load_model_dir(shared_dir().model)); }

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("health and meta") {
    const ServiceApi api = make_api();
    CHECK(json::parse(api.health().body)["status"] == "ok");
    const json meta = json::parse(api.meta().body);
    CHECK(meta["d_x"] == 4);
    CHECK(meta["d_y"] == 60);
    CHECK(meta["grid"]["H"] == 32);
    CHECK(meta["parameter_count"] == api.model().model().parameter_count());
    CHECK(json::parse(api.locations().body)["locations"].size() == 60);
  }

  TEST_CASE("request validation") {
    const ServiceApi api = make_api();
    CHECK(api.predict("{not json").status == 400);
    CHECK(api.predict("[1,2]").status == 400);
    CHECK(api.predict(R"({})").status == 400);
    CHECK(api.predict(R"({"scenario": 1010})").status == 400);
    CHECK(api.predict(R"({"scenario": "10x0"})").status == 400);
    const ApiResponse wrong = api.predict(R"({"scenario": "101"})");
    CHECK(wrong.status == 422);
    CHECK(json::parse(wrong.body)["field"] == "scenario");
    CHECK(api.predict(R"({"scenario": "1010", "include_grid": "yes"})").status == 400);
    CHECK(api.compare(R"({"a": "1010"})").status == 400);
    CHECK(api.compare(R"({"a": "1010", "b": "10101"})").status == 422);
  }

  TEST_CASE("prediction matches the model") {
    const ServiceApi api = make_api();
    const auto s = parse_scenario("0110");
    const ApiResponse r = api.predict(R"({"scenario": "0110", "include_grid": true})");
    REQUIRE(r.status == 200);
    const json j = json::parse(r.body);
    const DepthVector expected = predict_depths(api.model(), s);
    CHECK(j["depths"].get<std::vector<float>>() == expected);
    CHECK(j["fingerprint"] == api.model().fingerprint());
    CHECK(j["latency_ms"].get<double>() > 0.0);

    const Grid<float> g = predict_grid(api.model(), s);
    const InundationMap map{g, encode_inundation(expected, api.model().index_map).mask};
    CHECK(j["grid"].get<std::string>() == base64_encode(serialize_grid(map)));
    const InundationMap back = deserialize_grid(base64_decode(j["grid"].get<std::string>()));
    CHECK(back.depth.height() == 32);
  }

  TEST_CASE("compare is b minus a and antisymmetric") {
    const ServiceApi api = make_api();
    const json ab = json::parse(api.compare(R"({"a": "0000", "b": "1111"})").body);
    const json ba = json::parse(api.compare(R"({"a": "1111", "b": "0000"})").body);
    const DepthVector a = predict_depths(api.model(), parse_scenario("0000"));
    const DepthVector b = predict_depths(api.model(), parse_scenario("1111"));
    const auto d1 = ab["diff"].get<std::vector<float>>();
    const auto d2 = ba["diff"].get<std::vector<float>>();
    REQUIRE(d1.size() == a.size());
    for (std::size_t k = 0; k < d1.size(); ++k) {
      CHECK(d1[k] == b[k] - a[k]);
      CHECK(d1[k] == -d2[k]);
    }
    const json ref = json::parse(api.predict(R"({"scenario": "1111", "reference": "0000"})").body);
    CHECK(ref["diff"].get<std::vector<float>>() == d1);
  }

  TEST_CASE("http front end") {
    const ServiceApi api = make_api();
    HttpService service(api);
    const int port = service.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread th([&] { service.listen(); });
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    auto h = client.Get("/health");
    REQUIRE(h);
    CHECK(h->status == 200);
    auto p = client.Post("/predict", R"({"scenario": "1000"})", "application/json");
    REQUIRE(p);
    CHECK(p->status == 200);
    CHECK(json::parse(p->body)["depths"].size() == 60);
    auto bad = client.Post("/predict", R"({"scenario": "1"})", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 422);
    auto missing = client.Get("/nope");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    service.stop();
    th.join();
  }
}
