#pragma once
// Frame history over a timeline, recurring/emerging classification and
// year-over-year similarity heatmap data.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "framemix/embedding.hpp"
#include "framemix/frame_model.hpp"

namespace framemix {

struct HistoryMatch {
  int time_index;
  FrameId matched_frame;
  double normalized_affinity;  // mean per-element kernel, in (0, 1]
};

struct FrameHistory {
  FrameId frame_id;
  int time_index = 0;
  std::vector<HistoryMatch> matches;  // one strongest match per matched t'

  std::vector<int> matched_times() const;
  bool matched(int t) const;
};

enum class TemporalClass { emerging, recurring, static_ };

std::string to_string(TemporalClass c);

// Frames grouped by time index, each with its embedded element features.
struct TimelineFrame {
  Frame frame;
  std::vector<FeatureVector> features;
};
using Timeline = std::map<int, std::vector<TimelineFrame>>;

Timeline build_timeline(const std::vector<const Frame*>& frames,
                        EmbeddingProvider& provider);

// History of `target` at time t: every t' at which some frame's normalized
// affinity against the target exceeds epsilon. Contains t itself.
FrameHistory frame_history(const Timeline& timeline, const TimelineFrame& target,
                           int t, double gamma, double epsilon);

// emerging: only t matched. static: every populated year matched.
// recurring: t plus some proper subset of the other years.
TemporalClass classify_frame(const FrameHistory& history, int t,
                             const std::vector<int>& all_times);

// Annotation strings for the generation prompt, e.g. "new risk emerged at
// 2020" or "recurring risk, seen at 2017, 2018".
std::string temporal_annotation(const FrameHistory& history, TemporalClass cls, int t);

// Cell (t, t') = fraction of frames at t with at least one match at t' above
// epsilon. absent (not zero) when either year has no frames.
struct HeatmapCell {
  std::optional<double> value;
};

struct TemporalHeatmap {
  std::vector<int> times;
  std::vector<std::vector<HeatmapCell>> cells;  // [t][t'] in `times` order
};

TemporalHeatmap temporal_heatmap(const Timeline& timeline, double gamma,
                                 double epsilon);

void export_heatmap_csv(const TemporalHeatmap& heatmap, const std::string& path,
                        const std::string& header_comment = "");

}  // namespace framemix
