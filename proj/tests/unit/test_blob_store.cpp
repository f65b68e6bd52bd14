#include <fstream>

#include "coastal/blob_store.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace coastal;

TEST_SUITE("blob_store") {
  TEST_CASE("round trip and fingerprint") {
    fixtures::TempDir dir("blob");
    BlobBundle b;
    b.metadata_json = R"({"k": 1})";
    b.tensors.push_back({"a.kernel", {1, 2, 3, 1}, "glorot_normal", {1, -2, 3.5f, 0, 1e-20f, 7}});
    b.tensors.push_back({"a.bias", {1, 1, 1, 1}, "zeros", {0}});
    write_blob_bundle(dir.path(), b);
    const BlobBundle back = read_blob_bundle(dir.path());
    REQUIRE(back.tensors.size() == 2);
    CHECK(back.find("a.kernel").data == b.tensors[0].data);
    CHECK(back.find("a.kernel").shape == b.tensors[0].shape);
    CHECK(back.find("a.bias").initializer == "zeros");
    CHECK_THROWS_AS(back.find("nope"), LoadError);

    const std::string fp = bundle_fingerprint(dir.path());
    CHECK(fp.size() == 16);
    CHECK(fp == bundle_fingerprint(dir.path()));
    b.tensors[1].data[0] = 1.0f;
    write_blob_bundle(dir.path(), b);
    CHECK(fp != bundle_fingerprint(dir.path()));
  }

  TEST_CASE("damaged bundles are load errors") {
    fixtures::TempDir dir("blob_bad");
    CHECK_THROWS_AS(read_blob_bundle(dir.path()), LoadError);
    std::ofstream(dir / "manifest.json") << "{not json";
    CHECK_THROWS_AS(read_blob_bundle(dir.path()), LoadError);
  }
}
