#include "framemix/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "framemix/hypergraph.hpp"

namespace framemix {

std::vector<int> FrameHistory::matched_times() const {
  std::vector<int> out;
  for (const auto& m : matches) out.push_back(m.time_index);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool FrameHistory::matched(int t) const {
  return std::any_of(matches.begin(), matches.end(),
                     [t](const HistoryMatch& m) { return m.time_index == t; });
}

std::string to_string(TemporalClass c) {
  switch (c) {
    case TemporalClass::emerging: return "emerging";
    case TemporalClass::recurring: return "recurring";
    case TemporalClass::static_: return "static";
  }
  return "unknown";
}

Timeline build_timeline(const std::vector<const Frame*>& frames,
                        EmbeddingProvider& provider) {
  Timeline timeline;
  for (const Frame* f : frames) {
    if (!f->time_index)
      throw std::invalid_argument("frame " + f->frame_id.value + " has no time index");
    TimelineFrame tf;
    tf.frame = *f;
    for (const auto& el : f->elements) tf.features.push_back(provider.embed(el.text));
    timeline[*f->time_index].push_back(std::move(tf));
  }
  return timeline;
}

namespace {

// Mean per-element kernel similarity, A / K, so the epsilon convention
// matches the candidate filter.
double normalized_affinity(const TimelineFrame& a, const TimelineFrame& b,
                           double gamma) {
  return pairwise_affinity(a.features, b.features, gamma) /
         static_cast<double>(a.features.size());
}

}  // namespace

FrameHistory frame_history(const Timeline& timeline, const TimelineFrame& target,
                           int t, double gamma, double epsilon) {
  if (!timeline.count(t))
    throw std::out_of_range("unknown time index " + std::to_string(t));
  FrameHistory history;
  history.frame_id = target.frame.frame_id;
  history.time_index = t;
  for (const auto& [tp, frames] : timeline) {
    double best = -1.0;
    const TimelineFrame* best_frame = nullptr;
    for (const auto& other : frames) {
      if (tp == t && other.frame.frame_id == target.frame.frame_id) {
        // Self-match keeps t in the history.
        best = 1.0;
        best_frame = &other;
        break;
      }
      const double a = normalized_affinity(target, other, gamma);
      if (a > best) {
        best = a;
        best_frame = &other;
      }
    }
    if (best_frame && best > epsilon)
      history.matches.push_back({tp, best_frame->frame.frame_id, best});
  }
  return history;
}

TemporalClass classify_frame(const FrameHistory& history, int t,
                             const std::vector<int>& all_times) {
  auto matched = history.matched_times();
  const bool self = std::find(matched.begin(), matched.end(), t) != matched.end();
  bool covers_all = true;
  for (int tt : all_times)
    if (std::find(matched.begin(), matched.end(), tt) == matched.end())
      covers_all = false;
  if (covers_all && self && all_times.size() > 1) return TemporalClass::static_;
  if (self && matched.size() == 1) return TemporalClass::emerging;
  return TemporalClass::recurring;
}

std::string temporal_annotation(const FrameHistory& history, TemporalClass cls, int t) {
  if (cls == TemporalClass::emerging)
    return "new risk emerged at " + std::to_string(t);
  std::string years;
  for (int tt : history.matched_times()) {
    if (tt == t) continue;
    if (!years.empty()) years += ", ";
    years += std::to_string(tt);
  }
  if (cls == TemporalClass::static_)
    return "persistent risk, present every year (" + years + ", " + std::to_string(t) + ")";
  return "recurring risk, previously seen at " + years;
}

TemporalHeatmap temporal_heatmap(const Timeline& timeline, double gamma,
                                 double epsilon) {
  TemporalHeatmap hm;
  for (const auto& [t, _] : timeline) hm.times.push_back(t);
  const std::size_t n = hm.times.size();
  hm.cells.assign(n, std::vector<HeatmapCell>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row_frames = timeline.at(hm.times[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& col_frames = timeline.at(hm.times[j]);
      if (row_frames.empty() || col_frames.empty()) continue;  // cell stays absent
      std::size_t matched = 0;
      for (const auto& f : row_frames) {
        bool hit = false;
        for (const auto& g : col_frames) {
          if (i == j && f.frame.frame_id == g.frame.frame_id) {
            hit = true;
            break;
          }
          if (normalized_affinity(f, g, gamma) > epsilon) {
            hit = true;
            break;
          }
        }
        if (hit) ++matched;
      }
      hm.cells[i][j].value =
          static_cast<double>(matched) / static_cast<double>(row_frames.size());
    }
  }
  return hm;
}

void export_heatmap_csv(const TemporalHeatmap& heatmap, const std::string& path,
                        const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write heatmap csv: " + path);
  out.precision(17);
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "t";
  for (int t : heatmap.times) out << ',' << t;
  out << '\n';
  for (std::size_t i = 0; i < heatmap.times.size(); ++i) {
    out << heatmap.times[i];
    for (std::size_t j = 0; j < heatmap.times.size(); ++j) {
      out << ',';
      if (heatmap.cells[i][j].value) out << *heatmap.cells[i][j].value;
    }
    out << '\n';
  }
}

}  // namespace framemix
