#pragma once
// Core domain types: frame schemas, frames, documents and corpus-level
// annotations (hierarchy weights, timestamps), plus JSONL corpus I/O.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace framemix {

struct FrameSchema {
  std::vector<std::string> roles;
  std::vector<std::string> category_vocabulary;  // empty = open vocabulary

  static FrameSchema default_schema();

  std::size_t arity() const { return roles.size(); }
  bool has_role(const std::string& role) const;
  int role_index(const std::string& role) const;  // -1 if unknown
  void validate() const;  // throws std::invalid_argument on bad schema
};

struct FrameElement {
  std::string role;
  std::string text;  // "n/a" is a legal literal value
};

struct FrameId {
  std::string value;
  bool operator==(const FrameId& o) const { return value == o.value; }
  bool operator<(const FrameId& o) const { return value < o.value; }
};

struct Frame {
  FrameId frame_id;
  std::string document_id;
  std::optional<int> time_index;
  std::vector<FrameElement> elements;  // schema role order

  const std::string& element_text(std::size_t k) const { return elements[k].text; }
};

struct Document {
  std::string document_id;
  std::string raw_text;
  std::optional<std::string> hierarchy_label;
  std::optional<int> time_index;
  std::vector<FrameId> frames;
};

// Symmetric nonnegative document-pair weights, defaulting to 1.0.
class HierarchyWeights {
 public:
  void set(const std::string& doc_i, const std::string& doc_j, double w);
  double weight(const std::string& doc_i, const std::string& doc_j) const;
  bool empty() const { return weights_.empty(); }

  static HierarchyWeights load_csv(const std::string& path);
  void save_csv(const std::string& path) const;

 private:
  static std::pair<std::string, std::string> key(const std::string& a,
                                                 const std::string& b);
  std::map<std::pair<std::string, std::string>, double> weights_;
};

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationResult validate_frame(const Frame& frame, const FrameSchema& schema);

struct Corpus {
  FrameSchema schema;
  std::vector<Document> documents;
  std::vector<Frame> frames;
  HierarchyWeights hierarchy;

  const Document* find_document(const std::string& id) const;
  const Frame* find_frame(const FrameId& id) const;
  std::vector<const Frame*> frames_of(const std::string& document_id) const;
};

// Corpus JSONL: one object per line, kinds "document" and "frame".
// Throws std::runtime_error with the offending line number / id on bad input.
Corpus load_corpus(const std::string& path,
                   const FrameSchema& schema = FrameSchema::default_schema());
void save_corpus(const Corpus& corpus, const std::string& path);

}  // namespace framemix
