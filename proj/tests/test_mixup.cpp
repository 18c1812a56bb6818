#include <doctest.h>

#include <cmath>
#include <set>

#include "framemix/mixup.hpp"
#include "test_support.hpp"

using namespace framemix;
using testsupport::fv;
using testsupport::make_frame;
using testsupport::MapEmbedder;

TEST_CASE("pair seeds are deterministic and order-sensitive") {
  const std::uint64_t s1 = derive_pair_seed(7, {"f1"}, {"f2"});
  CHECK(s1 == derive_pair_seed(7, {"f1"}, {"f2"}));
  CHECK(s1 != derive_pair_seed(8, {"f1"}, {"f2"}));
  CHECK(s1 != derive_pair_seed(7, {"f2"}, {"f1"}));
  CHECK(s1 != derive_pair_seed(7, {"f1"}, {"f3"}));
}

TEST_CASE("mask sampling is deterministic per seed and never degenerate") {
  std::vector<FeatureVector> x1 = {fv({1, 0}), fv({1, 0}), fv({1, 0}), fv({1, 0})};
  std::vector<FeatureVector> x2 = {fv({1, 0}), fv({0, 1}), fv({0, 1}), fv({-1, 0})};
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const MixMask m = sample_mask(x1, x2, 1.0, seed);
    CHECK(m.bits == sample_mask(x1, x2, 1.0, seed).bits);
    REQUIRE(m.bits.size() == 4);
    CHECK_FALSE(m.degenerate());
    const MixMask c = m.complement();
    for (std::size_t k = 0; k < 4; ++k) CHECK(m.bits[k] + c.bits[k] == 1);
  }
}

TEST_CASE("mask bits follow the element-similarity Bernoulli probabilities") {
  // First element identical (p=1 survives degeneracy handling only in
  // aggregate), the other three at distance 2 so p = exp(-2) ~ 0.135.
  std::vector<FeatureVector> x1 = {fv({1, 0}), fv({1, 0}), fv({1, 0}), fv({1, 0})};
  std::vector<FeatureVector> x2 = {fv({1, 0}), fv({-1, 0}), fv({-1, 0}), fv({-1, 0})};
  const int n = 10000;
  double ones = 0.0;
  for (int i = 0; i < n; ++i) {
    const MixMask m = sample_mask(x1, x2, 1.0, 1000 + static_cast<std::uint64_t>(i));
    ones += m.bits[1];
  }
  // Degenerate rescue barely perturbs the marginal; allow a generous band.
  CHECK(ones / n == doctest::Approx(std::exp(-2.0)).epsilon(0.2));
}

TEST_CASE("fully identical parents still get a non-degenerate mask") {
  std::vector<FeatureVector> x = {fv({1, 0}), fv({1, 0}), fv({1, 0}), fv({1, 0})};
  for (std::uint64_t seed = 0; seed < 64; ++seed)
    CHECK_FALSE(sample_mask(x, x, 1.0, seed).degenerate());
}

TEST_CASE("mix_frames repartitions the parents' elements exactly") {
  auto schema = FrameSchema::default_schema();
  Frame e1 = make_frame("f1", "d1", {"a1", "a2", "a3", "a4"});
  Frame e2 = make_frame("f2", "d2", {"b1", "b2", "b3", "b4"});
  MixMask mask{{1, 0, 0, 1}, 42};
  auto [c1, c2] = mix_frames(e1, e2, mask, schema);

  CHECK(c1.frame.frame_id.value == "mix:f1+f2:a");
  CHECK(c2.frame.frame_id.value == "mix:f1+f2:b");
  CHECK(c1.frame.document_id == "d1");
  CHECK(c2.frame.document_id == "d2");
  CHECK(c1.parent1.value == "f1");
  CHECK(c1.parent2.value == "f2");

  const std::vector<std::string> want1 = {"a1", "b2", "b3", "a4"};
  const std::vector<std::string> want2 = {"b1", "a2", "a3", "b4"};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(c1.frame.elements[k].text == want1[k]);
    CHECK(c2.frame.elements[k].text == want2[k]);
    CHECK(c1.frame.elements[k].role == schema.roles[k]);
    // Per role the two children hold exactly the two parent values.
    std::set<std::string> got = {c1.frame.elements[k].text, c2.frame.elements[k].text};
    std::set<std::string> want = {e1.elements[k].text, e2.elements[k].text};
    CHECK(got == want);
  }
}

TEST_CASE("augment inserts both children and leaves vertices untouched") {
  MapEmbedder emb({{"a", {1.0, 0.0}}, {"b", {0.0, 1.0}}});
  Corpus c;
  c.schema = FrameSchema::default_schema();
  c.documents = {{"d1", "", std::nullopt, std::nullopt, {{"f1"}}},
                 {"d2", "", std::nullopt, std::nullopt, {{"f2"}}}};
  c.frames = {make_frame("f1", "d1", {"a", "a", "a", "a"}),
              make_frame("f2", "d2", {"b", "b", "b", "b"})};
  auto g = build_hypergraph(c, emb);
  const std::size_t vertices_before = g.vertex_count();

  MixPair pair{{"f1"}, {"f2"}, MixMask{{1, 0, 1, 0}, 9}};
  auto mined = augment(g, {pair});
  REQUIRE(mined.size() == 2);
  CHECK(g.edge_count() == 4);
  CHECK(g.vertex_count() == vertices_before);
  CHECK(g.origin(2) == EdgeOrigin::mined);
  CHECK(g.origin(3) == EdgeOrigin::mined);
  CHECK(mined[0].frame.elements[0].text == "a");
  CHECK(mined[0].frame.elements[1].text == "b");
  CHECK(mined[1].frame.elements[0].text == "b");
  CHECK(mined[1].frame.elements[1].text == "a");
}

TEST_CASE("degenerate masks are rejected by mix_frames") {
  auto schema = FrameSchema::default_schema();
  Frame e1 = make_frame("f1", "d1", {"a1", "a2", "a3", "a4"});
  Frame e2 = make_frame("f2", "d2", {"b1", "b2", "b3", "b4"});
  CHECK_THROWS(mix_frames(e1, e2, MixMask{{0, 0, 0, 0}, 0}, schema));
  CHECK_THROWS(mix_frames(e1, e2, MixMask{{1, 1, 1, 1}, 0}, schema));
  CHECK_THROWS(mix_frames(e1, e2, MixMask{{1, 0, 1}, 0}, schema));
}
