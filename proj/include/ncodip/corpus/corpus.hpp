// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ncodip contributors

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ncodip/corpus/tagset.hpp"

namespace ncodip {

struct Utterance {
  std::string node_id;
  std::optional<std::string> parent_id;   // absent only for the root
  std::string author_id;
  std::string text;                       // nonempty
  LabelIdSet gold_labels;                 // sorted unique ids, possibly empty

  bool labeled() const { return !gold_labels.empty(); }
};

struct ConversationTree {
  std::string tree_id;
  std::vector<Utterance> nodes;           // root first, then original order
  std::string root_id;

  const Utterance& node(const std::string& node_id) const;
  // Children of a node, sorted by child node_id.
  std::vector<std::string> children_of(const std::string& node_id) const;
  std::size_t size() const { return nodes.size(); }
};

// Root-to-leaf utterance sequence; the unit of autoregressive parsing.
struct BranchSequence {
  std::string tree_id;
  std::vector<Utterance> utterances;      // root first, leaf last
};

struct FoldPlan {
  std::map<std::string, int> assignments;  // tree_id -> fold index

  std::vector<std::string> trees_in_fold(int fold) const;
  int n_folds() const;
};

struct PriorTable {
  std::array<double, kNumLabels> w{};  // P(label i) over all utterances
};

struct CorpusStats {
  std::size_t trees = 0;
  std::size_t branches = 0;
  std::size_t utterances = 0;
  std::size_t authors = 0;
  std::size_t label_assignments = 0;
};

// --- ingestion ---------------------------------------------------------

// Reads a corpus file and returns validated trees. Accepts the canonical
// JSON-lines layout (one tree per line) and auto-detects the nested
// children-array layout, converting it on the fly. Validation failures are
// DataErrors naming the offending node.
std::vector<ConversationTree> ingest(const std::string& path);
std::vector<ConversationTree> ingest_stream(std::istream& in,
                                            const std::string& origin);

// Structural validation used by ingest; public so tests can drive it on
// hand-built trees.
void validate_tree(const ConversationTree& tree);

// Canonical JSON-lines serialization (one tree per line).
void serialize(const std::vector<ConversationTree>& trees, std::ostream& out);
void serialize_to_file(const std::vector<ConversationTree>& trees,
                       const std::string& path);

// --- derived views ------------------------------------------------------

// One branch per leaf, ordered by leaf node_id.
std::vector<BranchSequence> enumerate_branches(const ConversationTree& tree);
std::vector<BranchSequence> enumerate_branches(
    const std::vector<ConversationTree>& trees);

// Corpus-level label priors: w_i = #utterances bearing label i / #utterances.
PriorTable compute_priors(const std::vector<ConversationTree>& trees);

// Tree-grouped fold assignment; deterministic in (trees, n_folds, seed);
// fold sizes differ by at most one.
FoldPlan plan_folds(const std::vector<ConversationTree>& trees, int n_folds,
                    std::uint64_t seed);

CorpusStats corpus_stats(const std::vector<ConversationTree>& trees);

// Fold plan round-trip as a JSON object {tree_id: fold}.
std::string fold_plan_to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const std::string& json_text);

// Priors as CSV rows: label,name,category,prior.
std::string priors_to_csv(const PriorTable& priors);

}  // namespace ncodip
