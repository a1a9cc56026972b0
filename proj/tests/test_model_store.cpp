#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "model_store.hpp"
#include "oracles.hpp"
#include "serialization.hpp"

using namespace shapefit;

namespace {

TrainedModel sample_model()
{
   auto fm = FeatureMap::enumerate(std::vector<int>{2, 1});
   Eigen::VectorXd w(static_cast<Eigen::Index>(fm.dimension()));
   for (Eigen::Index i = 0; i < w.size(); ++i) {
      w[i] = 0.1 * static_cast<double>(i + 1) - 1.0 / 3.0;
   }
   Provenance prov{"adaptive", 1e-5, 20, 0.01, 3, "2026-01-01T00:00:00Z", 4e-6};
   return TrainedModel(fm, w, {{10.0, 20.0}, {-1.0, 1.0}},
                       {ShapeConstraint::increasing(0), ShapeConstraint::upper_bound(2.0)}, prov);
}

} // namespace

TEST_CASE("model files round trip exactly")
{
   const auto m = sample_model();
   const auto text = serialize(m);
   const auto back = deserialize(text);
   CHECK(back == m);
   CHECK(serialize(back) == text);
}

TEST_CASE("models with an infinite gap round trip")
{
   auto m = sample_model();
   Provenance prov = m.provenance();
   prov.gap = std::numeric_limits<double>::infinity();
   m = TrainedModel(m.features(), m.weights(), m.ranges(), m.constraints(), prov);
   CHECK(std::isinf(deserialize(serialize(m)).provenance().gap));
}

TEST_CASE("prediction scales inputs and flags extrapolation")
{
   const auto m = sample_model();
   const std::vector<double> raw = {15.0, 0.0};
   const std::vector<double> unit = {0.5, 0.5};
   double ref = 0.0;
   for (std::size_t i = 0; i < m.features().dimension(); ++i) {
      ref += m.weights()[static_cast<Eigen::Index>(i)] * oracle::monomial(m.features().indices()[i], unit);
   }
   const auto p = predict(m, raw);
   CHECK(p.value == doctest::Approx(ref).epsilon(1e-14));
   CHECK_FALSE(p.extrapolated);
   const std::vector<double> outside = {25.0, 0.0};
   CHECK(predict(m, outside).extrapolated);
}

TEST_CASE("slices span the axis range through the anchor")
{
   const auto m = sample_model();
   const std::vector<double> anchor = {12.0, 0.5};
   const auto s = slice(m, anchor, 0, 11);
   REQUIRE(s.size() == 11);
   CHECK(s.front().t == 10.0);
   CHECK(s.back().t == 20.0);
   for (const auto& pt : s) {
      const std::vector<double> x = {pt.t, 0.5};
      CHECK(pt.yhat == doctest::Approx(predict(m, x).value).epsilon(1e-13));
   }
   CHECK(slice_to_csv(s).rfind("t,yhat\n", 0) == 0);
   CHECK_THROWS_AS(slice(m, anchor, 2, 11), Error);
   CHECK_THROWS_AS(slice(m, anchor, 0, 1), Error);
}

TEST_CASE("model files with a different version are refused")
{
   auto doc = json::parse(serialize(sample_model()));
   doc["version"] = 99;
   try {
      deserialize(doc.dump());
      FAIL("expected version mismatch");
   } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::version_mismatch);
   }
   CHECK_THROWS_AS(deserialize("{\"format\": \"other\"}"), Error);
}
