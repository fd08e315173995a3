// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ncodip contributors

#include "ncodip/corpus/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ncodip/rng.hpp"

namespace ncodip {

using nlohmann::json;

const Utterance& ConversationTree::node(const std::string& node_id) const {
  for (const auto& n : nodes) {
    if (n.node_id == node_id) return n;
  }
  throw DataError("tree " + tree_id + ": no such node: " + node_id);
}

std::vector<std::string> ConversationTree::children_of(
    const std::string& node_id) const {
  std::vector<std::string> out;
  for (const auto& n : nodes) {
    if (n.parent_id && *n.parent_id == node_id) out.push_back(n.node_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> FoldPlan::trees_in_fold(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : assignments) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

int FoldPlan::n_folds() const {
  int mx = -1;
  for (const auto& [_, f] : assignments) mx = std::max(mx, f);
  return mx + 1;
}

namespace {

LabelIdSet parse_labels(const json& arr, const std::string& node_id) {
  const TagSet& tags = TagSet::instance();
  std::set<int> ids;
  for (const auto& item : arr) {
    if (item.is_string()) {
      ids.insert(tags.id_of(item.get<std::string>()));
    } else if (item.is_number_integer()) {
      int id = item.get<int>();
      if (id < 0 || id >= kNumLabels) {
        throw DataError("node " + node_id +
                        ": label id out of range: " + std::to_string(id));
      }
      ids.insert(id);
    } else {
      throw DataError("node " + node_id + ": label must be a name or id");
    }
  }
  return LabelIdSet(ids.begin(), ids.end());
}

Utterance parse_node(const json& jn, const std::string& tree_id) {
  if (!jn.is_object() || !jn.contains("node_id") || !jn["node_id"].is_string()) {
    throw DataError("tree " + tree_id + ": malformed record, missing node_id");
  }
  Utterance u;
  u.node_id = jn["node_id"].get<std::string>();
  auto fail = [&](const std::string& what) {
    throw DataError("malformed record for node " + u.node_id + ": " + what);
  };
  if (jn.contains("parent_id") && !jn["parent_id"].is_null()) {
    if (!jn["parent_id"].is_string()) fail("parent_id must be a string");
    u.parent_id = jn["parent_id"].get<std::string>();
  }
  if (!jn.contains("author_id") || !jn["author_id"].is_string()) {
    fail("missing author_id");
  }
  u.author_id = jn["author_id"].get<std::string>();
  if (!jn.contains("text") || !jn["text"].is_string()) fail("missing text");
  u.text = jn["text"].get<std::string>();
  if (u.text.empty()) fail("empty text");
  if (jn.contains("labels")) {
    if (!jn["labels"].is_array()) fail("labels must be an array");
    u.gold_labels = parse_labels(jn["labels"], u.node_id);
  }
  return u;
}

ConversationTree parse_tree_jsonl(const json& jt) {
  if (!jt.is_object() || !jt.contains("tree_id") || !jt["tree_id"].is_string()) {
    throw DataError("malformed record: tree without tree_id");
  }
  ConversationTree tree;
  tree.tree_id = jt["tree_id"].get<std::string>();
  if (!jt.contains("nodes") || !jt["nodes"].is_array()) {
    throw DataError("tree " + tree.tree_id + ": missing nodes array");
  }
  for (const auto& jn : jt["nodes"]) {
    tree.nodes.push_back(parse_node(jn, tree.tree_id));
  }
  return tree;
}

// Nested layout: a node object carries "children"; node/author/label keys
// appear under a few alias spellings in the wild.
const char* pick_key(const json& jn, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (jn.contains(k)) return k;
  }
  return nullptr;
}

void flatten_nested(const json& jn, const std::optional<std::string>& parent,
                    const std::string& tree_id, ConversationTree& tree) {
  const char* idk = pick_key(jn, {"node_id", "id", "name"});
  if (!idk) {
    throw DataError("tree " + tree_id + ": nested node without an id field");
  }
  json flat;
  flat["node_id"] = jn[idk].is_string()
                        ? jn[idk].get<std::string>()
                        : std::to_string(jn[idk].get<long long>());
  if (parent) flat["parent_id"] = *parent;
  const char* ak = pick_key(jn, {"author_id", "author", "user", "speaker"});
  flat["author_id"] = ak ? jn[ak] : json();
  const char* tk = pick_key(jn, {"text", "body"});
  flat["text"] = tk ? jn[tk] : json();
  const char* lk = pick_key(jn, {"labels", "tags"});
  if (lk) flat["labels"] = jn[lk];
  tree.nodes.push_back(parse_node(flat, tree_id));
  if (jn.contains("children")) {
    for (const auto& child : jn["children"]) {
      flatten_nested(child, tree.nodes.back().node_id, tree_id, tree);
    }
  }
}

ConversationTree parse_tree_nested(const json& jt, std::size_t ordinal) {
  ConversationTree tree;
  const char* idk = pick_key(jt, {"tree_id", "id"});
  tree.tree_id = idk ? (jt[idk].is_string()
                            ? jt[idk].get<std::string>()
                            : std::to_string(jt[idk].get<long long>()))
                     : "tree" + std::to_string(ordinal);
  if (jt.contains("nodes") && jt["nodes"].is_array()) {
    for (const auto& jn : jt["nodes"]) {
      tree.nodes.push_back(parse_node(jn, tree.tree_id));
    }
  } else if (jt.contains("root")) {
    flatten_nested(jt["root"], std::nullopt, tree.tree_id, tree);
  } else {
    // The tree object itself is the root node.
    flatten_nested(jt, std::nullopt, tree.tree_id, tree);
  }
  return tree;
}

}  // namespace

void validate_tree(const ConversationTree& tree) {
  if (tree.nodes.empty()) {
    throw DataError("tree " + tree.tree_id + ": no nodes");
  }
  std::unordered_map<std::string, const Utterance*> by_id;
  for (const auto& n : tree.nodes) {
    if (!by_id.emplace(n.node_id, &n).second) {
      throw DataError("tree " + tree.tree_id +
                      ": duplicate node_id: " + n.node_id);
    }
  }
  std::string root;
  for (const auto& n : tree.nodes) {
    if (!n.parent_id) {
      if (!root.empty()) {
        throw DataError("tree " + tree.tree_id + ": two roots: " + root +
                        " and " + n.node_id);
      }
      root = n.node_id;
    } else if (!by_id.count(*n.parent_id)) {
      throw DataError("tree " + tree.tree_id + ": orphan node " + n.node_id +
                      " (parent " + *n.parent_id + " missing)");
    }
  }
  if (root.empty()) {
    throw DataError("tree " + tree.tree_id + ": no root node");
  }
  // Reachability from the root doubles as the cycle check: parent links with
  // one root and no unreachable nodes form a tree.
  std::unordered_map<std::string, std::vector<std::string>> children;
  for (const auto& n : tree.nodes) {
    if (n.parent_id) children[*n.parent_id].push_back(n.node_id);
  }
  std::vector<std::string> stack{root};
  std::unordered_set<std::string> seen;
  while (!stack.empty()) {
    std::string id = stack.back();
    stack.pop_back();
    if (!seen.insert(id).second) continue;
    for (const auto& c : children[id]) stack.push_back(c);
  }
  for (const auto& n : tree.nodes) {
    if (!seen.count(n.node_id)) {
      throw DataError("tree " + tree.tree_id + ": node " + n.node_id +
                      " unreachable from root (cycle?)");
    }
  }
  if (tree.root_id != root) {
    throw DataError("tree " + tree.tree_id + ": root_id mismatch");
  }
}

std::vector<ConversationTree> ingest_stream(std::istream& in,
                                            const std::string& origin) {
  std::string first_line;
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  // Strip BOM and leading whitespace to sniff the layout.
  std::size_t pos = 0;
  if (content.rfind("\xEF\xBB\xBF", 0) == 0) pos = 3;
  while (pos < content.size() && std::isspace(static_cast<unsigned char>(content[pos]))) ++pos;
  if (pos >= content.size()) {
    throw DataError(origin + ": empty corpus file");
  }

  std::vector<ConversationTree> trees;
  if (content[pos] == '[') {
    // One JSON document holding an array of trees (nested or flat layout).
    json doc = json::parse(content.substr(pos));
    std::size_t i = 0;
    for (const auto& jt : doc) {
      trees.push_back(jt.contains("nodes") && !jt.contains("root")
                          ? parse_tree_jsonl(jt)
                          : parse_tree_nested(jt, i));
      ++i;
    }
  } else {
    std::istringstream lines(content.substr(pos));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json jt;
      try {
        jt = json::parse(line);
      } catch (const json::exception& e) {
        throw DataError(origin + ":" + std::to_string(lineno) +
                        ": invalid JSON: " + e.what());
      }
      trees.push_back(jt.contains("root") ? parse_tree_nested(jt, lineno)
                                          : parse_tree_jsonl(jt));
    }
  }
  if (trees.empty()) {
    throw DataError(origin + ": empty corpus file");
  }
  for (auto& tree : trees) {
    for (const auto& n : tree.nodes) {
      if (!n.parent_id) tree.root_id = n.node_id;
    }
    validate_tree(tree);
  }
  return trees;
}

std::vector<ConversationTree> ingest(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open corpus file: " + path);
  }
  return ingest_stream(in, path);
}

void serialize(const std::vector<ConversationTree>& trees, std::ostream& out) {
  const TagSet& tags = TagSet::instance();
  for (const auto& tree : trees) {
    json jt;
    jt["tree_id"] = tree.tree_id;
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      json jn;
      jn["node_id"] = n.node_id;
      if (n.parent_id) {
        jn["parent_id"] = *n.parent_id;
      } else {
        jn["parent_id"] = nullptr;
      }
      jn["author_id"] = n.author_id;
      jn["text"] = n.text;
      json labels = json::array();
      for (int id : n.gold_labels) labels.push_back(tags.label(id).name);
      jn["labels"] = labels;
      nodes.push_back(std::move(jn));
    }
    jt["nodes"] = std::move(nodes);
    out << jt.dump() << '\n';
  }
}

void serialize_to_file(const std::vector<ConversationTree>& trees,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  serialize(trees, out);
}

std::vector<BranchSequence> enumerate_branches(const ConversationTree& tree) {
  std::unordered_map<std::string, const Utterance*> by_id;
  std::unordered_set<std::string> has_child;
  for (const auto& n : tree.nodes) {
    by_id[n.node_id] = &n;
    if (n.parent_id) has_child.insert(*n.parent_id);
  }
  std::vector<std::string> leaves;
  for (const auto& n : tree.nodes) {
    if (!has_child.count(n.node_id)) leaves.push_back(n.node_id);
  }
  std::sort(leaves.begin(), leaves.end());

  std::vector<BranchSequence> out;
  out.reserve(leaves.size());
  for (const auto& leaf : leaves) {
    BranchSequence b;
    b.tree_id = tree.tree_id;
    const Utterance* cur = by_id.at(leaf);
    std::vector<const Utterance*> path{cur};
    while (cur->parent_id) {
      cur = by_id.at(*cur->parent_id);
      path.push_back(cur);
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      b.utterances.push_back(**it);
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<BranchSequence> enumerate_branches(
    const std::vector<ConversationTree>& trees) {
  std::vector<BranchSequence> out;
  for (const auto& t : trees) {
    auto bs = enumerate_branches(t);
    out.insert(out.end(), bs.begin(), bs.end());
  }
  return out;
}

PriorTable compute_priors(const std::vector<ConversationTree>& trees) {
  std::size_t total = 0;
  std::array<std::size_t, kNumLabels> counts{};
  for (const auto& tree : trees) {
    for (const auto& n : tree.nodes) {
      ++total;
      for (int id : n.gold_labels) ++counts[static_cast<std::size_t>(id)];
    }
  }
  if (total == 0) {
    throw DataError("cannot compute priors over an empty corpus");
  }
  PriorTable p;
  for (int i = 0; i < kNumLabels; ++i) {
    p.w[static_cast<std::size_t>(i)] =
        static_cast<double>(counts[static_cast<std::size_t>(i)]) /
        static_cast<double>(total);
  }
  return p;
}

FoldPlan plan_folds(const std::vector<ConversationTree>& trees, int n_folds,
                    std::uint64_t seed) {
  if (n_folds < 2) {
    throw ConfigError("n_folds must be >= 2, got " + std::to_string(n_folds));
  }
  if (static_cast<std::size_t>(n_folds) > trees.size()) {
    throw ConfigError("n_folds (" + std::to_string(n_folds) +
                      ") exceeds number of trees (" +
                      std::to_string(trees.size()) + ")");
  }
  std::vector<std::string> ids;
  ids.reserve(trees.size());
  for (const auto& t : trees) ids.push_back(t.tree_id);
  std::sort(ids.begin(), ids.end());  // input order must not matter
  Rng rng(seed);
  rng.shuffle(ids);

  // First (n mod k) folds take the extra tree.
  FoldPlan plan;
  const std::size_t n = ids.size();
  const std::size_t k = static_cast<std::size_t>(n_folds);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t len = base + (f < extra ? 1 : 0);
    for (std::size_t j = 0; j < len; ++j) {
      plan.assignments[ids[at++]] = static_cast<int>(f);
    }
  }
  return plan;
}

CorpusStats corpus_stats(const std::vector<ConversationTree>& trees) {
  CorpusStats s;
  std::unordered_set<std::string> authors;
  for (const auto& tree : trees) {
    ++s.trees;
    s.branches += enumerate_branches(tree).size();
    for (const auto& n : tree.nodes) {
      ++s.utterances;
      s.label_assignments += n.gold_labels.size();
      authors.insert(n.author_id);
    }
  }
  s.authors = authors.size();
  return s;
}

std::string fold_plan_to_json(const FoldPlan& plan) {
  json j = json::object();
  for (const auto& [id, f] : plan.assignments) j[id] = f;
  return j.dump(2);
}

FoldPlan fold_plan_from_json(const std::string& json_text) {
  FoldPlan plan;
  json j = json::parse(json_text);
  for (auto it = j.begin(); it != j.end(); ++it) {
    plan.assignments[it.key()] = it.value().get<int>();
  }
  return plan;
}

std::string priors_to_csv(const PriorTable& priors) {
  const TagSet& tags = TagSet::instance();
  std::ostringstream os;
  os << "label,name,category,prior\n";
  for (int i = 0; i < kNumLabels; ++i) {
    const auto& def = tags.label(i);
    os << i << ',' << def.name << ',' << category_name(def.category) << ','
       << std::setprecision(10) << priors.w[static_cast<std::size_t>(i)]
       << '\n';
  }
  return os.str();
}

}  // namespace ncodip
