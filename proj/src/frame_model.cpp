#include "framemix/frame_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace framemix {

using nlohmann::json;

FrameSchema FrameSchema::default_schema() {
  FrameSchema s;
  s.roles = {"category", "event", "driver", "impact"};
  return s;
}

bool FrameSchema::has_role(const std::string& role) const {
  return std::find(roles.begin(), roles.end(), role) != roles.end();
}

int FrameSchema::role_index(const std::string& role) const {
  auto it = std::find(roles.begin(), roles.end(), role);
  return it == roles.end() ? -1 : static_cast<int>(it - roles.begin());
}

void FrameSchema::validate() const {
  if (roles.size() < 2) throw std::invalid_argument("schema needs K >= 2 roles");
  std::set<std::string> seen;
  for (const auto& r : roles) {
    if (r.empty()) throw std::invalid_argument("schema role name empty");
    if (!seen.insert(r).second)
      throw std::invalid_argument("duplicate schema role: " + r);
  }
}

void HierarchyWeights::set(const std::string& doc_i, const std::string& doc_j,
                           double w) {
  if (w < 0.0) throw std::invalid_argument("hierarchy weight must be >= 0");
  weights_[key(doc_i, doc_j)] = w;
}

double HierarchyWeights::weight(const std::string& doc_i,
                                const std::string& doc_j) const {
  auto it = weights_.find(key(doc_i, doc_j));
  return it == weights_.end() ? 1.0 : it->second;
}

std::pair<std::string, std::string> HierarchyWeights::key(const std::string& a,
                                                          const std::string& b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

HierarchyWeights HierarchyWeights::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hierarchy weights: " + path);
  HierarchyWeights w;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string a, b, val;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') ||
        !std::getline(ss, val, ',')) {
      throw std::runtime_error("malformed weights line " + std::to_string(lineno) +
                               " in " + path);
    }
    w.set(a, b, std::stod(val));
  }
  return w;
}

void HierarchyWeights::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write hierarchy weights: " + path);
  for (const auto& [k, v] : weights_)
    out << k.first << ',' << k.second << ',' << v << '\n';
}

ValidationResult validate_frame(const Frame& frame, const FrameSchema& schema) {
  ValidationResult result;
  if (frame.frame_id.value.empty())
    result.violations.push_back({"frame_id", "frame_id is empty"});
  if (frame.elements.size() != schema.arity()) {
    result.violations.push_back(
        {"elements", "arity " + std::to_string(frame.elements.size()) + " != " +
                         std::to_string(schema.arity())});
    return result;
  }
  for (std::size_t k = 0; k < frame.elements.size(); ++k) {
    const auto& el = frame.elements[k];
    if (!schema.has_role(el.role)) {
      result.violations.push_back({"elements[" + std::to_string(k) + "].role",
                                   "unknown role \"" + el.role + "\""});
    } else if (el.role != schema.roles[k]) {
      result.violations.push_back({"elements[" + std::to_string(k) + "].role",
                                   "role \"" + el.role + "\" out of order, expected \"" +
                                       schema.roles[k] + "\""});
    }
    if (el.text.empty())
      result.violations.push_back(
          {"elements[" + std::to_string(k) + "].text", "empty element text"});
  }
  return result;
}

const Document* Corpus::find_document(const std::string& id) const {
  for (const auto& d : documents)
    if (d.document_id == id) return &d;
  return nullptr;
}

const Frame* Corpus::find_frame(const FrameId& id) const {
  for (const auto& f : frames)
    if (f.frame_id == id) return &f;
  return nullptr;
}

std::vector<const Frame*> Corpus::frames_of(const std::string& document_id) const {
  std::vector<const Frame*> out;
  for (const auto& f : frames)
    if (f.document_id == document_id) out.push_back(&f);
  return out;
}

namespace {

[[noreturn]] void line_error(int lineno, const std::string& what) {
  throw std::runtime_error("corpus line " + std::to_string(lineno) + ": " + what);
}

Frame frame_from_json(const json& obj, const FrameSchema& schema, int lineno) {
  Frame f;
  if (!obj.contains("id")) line_error(lineno, "frame missing \"id\"");
  if (!obj.contains("document_id")) line_error(lineno, "frame missing \"document_id\"");
  f.frame_id.value = obj.at("id").get<std::string>();
  f.document_id = obj.at("document_id").get<std::string>();
  if (obj.contains("time_index") && !obj.at("time_index").is_null())
    f.time_index = obj.at("time_index").get<int>();
  if (!obj.contains("elements")) line_error(lineno, "frame missing \"elements\"");
  const auto& els = obj.at("elements");
  for (const auto& role : schema.roles) {
    if (!els.contains(role))
      line_error(lineno, "frame " + f.frame_id.value + " missing element role \"" +
                             role + "\"");
    f.elements.push_back({role, els.at(role).get<std::string>()});
  }
  return f;
}

}  // namespace

Corpus load_corpus(const std::string& path, const FrameSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus: " + path);
  schema.validate();
  Corpus corpus;
  corpus.schema = schema;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(lineno, std::string("malformed JSON: ") + e.what());
    }
    const std::string kind = obj.value("kind", "");
    if (kind == "document") {
      Document d;
      if (!obj.contains("id")) line_error(lineno, "document missing \"id\"");
      d.document_id = obj.at("id").get<std::string>();
      d.raw_text = obj.value("text", "");
      if (obj.contains("hierarchy_label") && !obj.at("hierarchy_label").is_null())
        d.hierarchy_label = obj.at("hierarchy_label").get<std::string>();
      if (obj.contains("time_index") && !obj.at("time_index").is_null())
        d.time_index = obj.at("time_index").get<int>();
      corpus.documents.push_back(std::move(d));
    } else if (kind == "frame" || kind == "mined_frame") {
      corpus.frames.push_back(frame_from_json(obj, schema, lineno));
    } else if (kind == "schema") {
      FrameSchema s;
      s.roles = obj.at("roles").get<std::vector<std::string>>();
      if (obj.contains("category_vocabulary"))
        s.category_vocabulary =
            obj.at("category_vocabulary").get<std::vector<std::string>>();
      s.validate();
      corpus.schema = s;
    } else {
      line_error(lineno, "unknown kind \"" + kind + "\"");
    }
  }

  std::set<std::string> frame_ids;
  for (auto& f : corpus.frames) {
    if (!frame_ids.insert(f.frame_id.value).second)
      throw std::runtime_error("duplicate frame id: " + f.frame_id.value);
    if (!corpus.find_document(f.document_id))
      throw std::runtime_error("frame " + f.frame_id.value +
                               " references unknown document " + f.document_id);
    auto v = validate_frame(f, corpus.schema);
    if (!v.ok())
      throw std::runtime_error("invalid frame " + f.frame_id.value + ": " +
                               v.violations.front().message);
  }
  // Frames inherit the document time index when they carry none themselves.
  for (auto& f : corpus.frames) {
    if (!f.time_index) f.time_index = corpus.find_document(f.document_id)->time_index;
  }
  for (auto& d : corpus.documents) {
    if (d.frames.empty()) {
      for (const auto& f : corpus.frames)
        if (f.document_id == d.document_id) d.frames.push_back(f.frame_id);
    }
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus: " + path);
  {
    json s;
    s["kind"] = "schema";
    s["roles"] = corpus.schema.roles;
    if (!corpus.schema.category_vocabulary.empty())
      s["category_vocabulary"] = corpus.schema.category_vocabulary;
    out << s.dump() << '\n';
  }
  for (const auto& d : corpus.documents) {
    json obj;
    obj["kind"] = "document";
    obj["id"] = d.document_id;
    obj["text"] = d.raw_text;
    if (d.hierarchy_label) obj["hierarchy_label"] = *d.hierarchy_label;
    if (d.time_index) obj["time_index"] = *d.time_index;
    out << obj.dump() << '\n';
  }
  for (const auto& f : corpus.frames) {
    json obj;
    obj["kind"] = "frame";
    obj["id"] = f.frame_id.value;
    obj["document_id"] = f.document_id;
    // A time index inherited from the document is derivable; writing only
    // explicit per-frame values keeps save(load(x)) byte-identical to x.
    const Document* doc = corpus.find_document(f.document_id);
    if (f.time_index && (!doc || doc->time_index != f.time_index))
      obj["time_index"] = *f.time_index;
    json els;
    for (const auto& el : f.elements) els[el.role] = el.text;
    obj["elements"] = els;
    out << obj.dump() << '\n';
  }
}

}  // namespace framemix
