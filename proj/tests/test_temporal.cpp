#include <doctest.h>

#include <cmath>
#include <fstream>

#include "framemix/hypergraph.hpp"
#include "framemix/temporal.hpp"
#include "test_support.hpp"

using namespace framemix;
using testsupport::make_frame;
using testsupport::MapEmbedder;
using testsupport::TempDir;

namespace {

MapEmbedder axis_embedder() {
  return MapEmbedder({
      {"near", {1.0, 0.0, 0.0}},
      {"near2", {0.98058067569092, 0.19611613513818, 0.0}},  // cos ~ 0.98
      {"far", {0.0, 0.0, 1.0}},
  });
}

// 2019: rec (near x4), uniq (far x4); 2020: rec2 (near2 x4); 2021: rec3 (near x4).
std::vector<Frame> history_frames() {
  std::vector<Frame> frames = {
      make_frame("rec", "d-2019", {"near", "near", "near", "near"}),
      make_frame("uniq", "d-2019", {"far", "far", "far", "far"}),
      make_frame("rec2", "d-2020", {"near2", "near2", "near2", "near2"}),
      make_frame("rec3", "d-2021", {"near", "near", "near", "near"}),
  };
  frames[0].time_index = 2019;
  frames[1].time_index = 2019;
  frames[2].time_index = 2020;
  frames[3].time_index = 2021;
  return frames;
}

Timeline history_timeline(MapEmbedder& emb) {
  auto frames = history_frames();
  static std::vector<Frame> storage;
  storage = frames;
  std::vector<const Frame*> ptrs;
  for (const auto& f : storage) ptrs.push_back(&f);
  return build_timeline(ptrs, emb);
}

const TimelineFrame& frame_at(const Timeline& tl, int t, const std::string& id) {
  for (const auto& tf : tl.at(t))
    if (tf.frame.frame_id.value == id) return tf;
  throw std::runtime_error("missing frame " + id);
}

}  // namespace

TEST_CASE("build_timeline groups by time and requires timestamps") {
  auto emb = axis_embedder();
  auto tl = history_timeline(emb);
  REQUIRE(tl.size() == 3);
  CHECK(tl.at(2019).size() == 2);
  CHECK(tl.at(2020).size() == 1);
  CHECK(tl.at(2021).size() == 1);

  Frame untimed = make_frame("u", "d", {"near", "near", "near", "near"});
  std::vector<const Frame*> ptrs = {&untimed};
  CHECK_THROWS_AS(build_timeline(ptrs, emb), std::invalid_argument);
}

TEST_CASE("frame history: matches strictly above epsilon, self year included") {
  auto emb = axis_embedder();
  auto tl = history_timeline(emb);
  // near vs near2: delta = 1 - 0.98058 = 0.01942, kernel ~ 0.9808 > 0.8.
  auto h = frame_history(tl, frame_at(tl, 2021, "rec3"), 2021, 1.0, 0.8);
  CHECK(h.matched_times() == std::vector<int>{2019, 2020, 2021});
  CHECK(h.matched(2021));
  for (const auto& m : h.matches)
    if (m.time_index == 2020) CHECK(m.matched_frame.value == "rec2");

  // uniq matches nothing but its own year.
  auto hu = frame_history(tl, frame_at(tl, 2019, "uniq"), 2019, 1.0, 0.8);
  CHECK(hu.matched_times() == std::vector<int>{2019});

  // A tight epsilon drops the 2020 paraphrase but keeps the exact 2019 twin.
  auto tight = frame_history(tl, frame_at(tl, 2021, "rec3"), 2021, 1.0, 0.999);
  CHECK(tight.matched_times() == std::vector<int>{2019, 2021});

  CHECK_THROWS_AS(frame_history(tl, frame_at(tl, 2019, "rec"), 1999, 1.0, 0.8),
                  std::out_of_range);
}

TEST_CASE("temporal classification: emerging, recurring, static") {
  auto emb = axis_embedder();
  auto tl = history_timeline(emb);
  const std::vector<int> all = {2019, 2020, 2021};

  auto h_static = frame_history(tl, frame_at(tl, 2021, "rec3"), 2021, 1.0, 0.8);
  CHECK(classify_frame(h_static, 2021, all) == TemporalClass::static_);

  auto h_emerging = frame_history(tl, frame_at(tl, 2019, "uniq"), 2019, 1.0, 0.8);
  CHECK(classify_frame(h_emerging, 2019, all) == TemporalClass::emerging);

  auto h_recurring = frame_history(tl, frame_at(tl, 2021, "rec3"), 2021, 1.0, 0.999);
  CHECK(classify_frame(h_recurring, 2021, all) == TemporalClass::recurring);

  // With a single populated year a full match is emerging, not static.
  FrameHistory single;
  single.frame_id = {"x"};
  single.time_index = 5;
  single.matches = {{5, {"x"}, 1.0}};
  CHECK(classify_frame(single, 5, {5}) == TemporalClass::emerging);

  CHECK(to_string(TemporalClass::static_) == "static");
  CHECK(to_string(TemporalClass::emerging) == "emerging");
  CHECK(to_string(TemporalClass::recurring) == "recurring");
}

TEST_CASE("annotations name the relevant years") {
  FrameHistory h;
  h.frame_id = {"f"};
  h.time_index = 2021;
  h.matches = {{2017, {"a"}, 0.9}, {2018, {"b"}, 0.92}, {2021, {"f"}, 1.0}};
  CHECK(temporal_annotation(h, TemporalClass::emerging, 2021) ==
        "new risk emerged at 2021");
  CHECK(temporal_annotation(h, TemporalClass::recurring, 2021) ==
        "recurring risk, previously seen at 2017, 2018");
  CHECK(temporal_annotation(h, TemporalClass::static_, 2021) ==
        "persistent risk, present every year (2017, 2018, 2021)");
}

TEST_CASE("heatmap: diagonal self-match, brute-force oracle, absent cells") {
  auto emb = axis_embedder();
  auto tl = history_timeline(emb);
  auto hm = temporal_heatmap(tl, 1.0, 0.8);
  REQUIRE(hm.times == std::vector<int>{2019, 2020, 2021});

  // Diagonal: every frame matches itself.
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(hm.cells[i][i].value.has_value());
    CHECK(*hm.cells[i][i].value == doctest::Approx(1.0));
  }
  // 2019 row vs 2021: only "rec" of the two 2019 frames matches "rec3".
  REQUIRE(hm.cells[0][2].value.has_value());
  CHECK(*hm.cells[0][2].value == doctest::Approx(0.5));
  // 2021 vs 2019: the single 2021 frame matches.
  CHECK(*hm.cells[2][0].value == doctest::Approx(1.0));

  // Brute-force every cell against the definition.
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const auto& rows = tl.at(hm.times[i]);
      const auto& cols = tl.at(hm.times[j]);
      std::size_t matched = 0;
      for (const auto& f : rows) {
        bool hit = false;
        for (const auto& g : cols) {
          if (i == j && f.frame.frame_id == g.frame.frame_id) hit = true;
          else if (pairwise_affinity(f.features, g.features, 1.0) / 4.0 > 0.8)
            hit = true;
        }
        if (hit) ++matched;
      }
      REQUIRE(hm.cells[i][j].value.has_value());
      CHECK(*hm.cells[i][j].value ==
            doctest::Approx(static_cast<double>(matched) / rows.size()));
    }
}

TEST_CASE("heatmap export writes absent cells as empty fields") {
  TempDir tmp;
  TemporalHeatmap hm;
  hm.times = {1, 2};
  hm.cells = {{HeatmapCell{1.0}, HeatmapCell{}}, {HeatmapCell{}, HeatmapCell{0.5}}};
  export_heatmap_csv(hm, tmp.file("h.csv"), "note");
  std::ifstream in(tmp.file("h.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "# note");
  std::getline(in, line);
  CHECK(line == "t,1,2");
  std::getline(in, line);
  CHECK(line == "1,1,");
  std::getline(in, line);
  CHECK(line == "2,,0.5");
}
