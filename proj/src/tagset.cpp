// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ncodip contributors

#include "ncodip/corpus/tagset.hpp"

#include <unordered_map>

namespace ncodip {

const char* category_name(Category c) {
  switch (c) {
    case Category::kPromotesDiscussion: return "PromotesDiscussion";
    case Category::kLowResponsiveness: return "LowResponsiveness";
    case Category::kToneAndStyle: return "ToneAndStyle";
    case Category::kDisagreementStrategies: return "DisagreementStrategies";
  }
  throw Error("invalid category");
}

Category category_from_name(std::string_view name) {
  if (name == "PromotesDiscussion") return Category::kPromotesDiscussion;
  if (name == "LowResponsiveness") return Category::kLowResponsiveness;
  if (name == "ToneAndStyle") return Category::kToneAndStyle;
  if (name == "DisagreementStrategies") return Category::kDisagreementStrategies;
  throw DataError("unknown category name: " + std::string(name));
}

namespace {

struct Row {
  const char* name;
  Category cat;
  const char* desc;
};

// Category blocks in registry order. Within a block, ascending corpus
// frequency of the tag.
const Row kRows[kNumLabels] = {
    // Discursive moves that promote the discussion.
    {"ViableTransformation", Category::kPromotesDiscussion,
     "workable shift of the discussion topic"},
    {"Answer", Category::kPromotesDiscussion,
     "informative answer to a question"},
    {"Extension", Category::kPromotesDiscussion,
     "builds on and extends the previous argument"},
    {"AttackValidity", Category::kPromotesDiscussion,
     "challenges the validity of the argument"},
    {"Moderation", Category::kPromotesDiscussion,
     "moderating or regulating the discussion"},
    {"RequestClarification", Category::kPromotesDiscussion,
     "asks the previous speaker to clarify"},
    {"Personal", Category::kPromotesDiscussion,
     "personal statement or experience"},
    {"Clarification", Category::kPromotesDiscussion,
     "clarifies an earlier statement"},
    {"CounterArgument", Category::kPromotesDiscussion,
     "reasoned disagreement or refutation"},
    // Moves with low responsiveness.
    {"NoReasonDisagreement", Category::kLowResponsiveness,
     "disagreement given without reasoning"},
    {"AgreeToDisagree", Category::kLowResponsiveness,
     "declares the issue unsolvable"},
    {"Repetition", Category::kLowResponsiveness,
     "repeats an earlier argument without variation"},
    {"BAD", Category::kLowResponsiveness,
     "severe low responsiveness, continuous squabbling"},
    {"NegTransformation", Category::kLowResponsiveness,
     "derails into an ancillary topic"},
    {"Convergence", Category::kLowResponsiveness,
     "converges toward the previous speaker"},
    // Tone and style.
    {"WQualifiers", Category::kToneAndStyle,
     "weakening qualifiers hedging the claim"},
    {"Ridicule", Category::kToneAndStyle,
     "ridicules the partner or their argument"},
    {"Sarcasm", Category::kToneAndStyle,
     "sarcastic, cynical or patronizing tone"},
    {"Aggressive", Category::kToneAndStyle,
     "aggressive, blatant tone"},
    {"Positive", Category::kToneAndStyle,
     "respectful or tension-reducing tone"},
    {"Complaint", Category::kToneAndStyle,
     "complains about the partner's negative approach"},
    // Explicit disagreement strategies.
    {"Alternative", Category::kDisagreementStrategies,
     "offers an alternative without direct refutation"},
    {"RephraseAttack", Category::kDisagreementStrategies,
     "reframes or paraphrases the previous comment"},
    {"DoubleVoicing", Category::kDisagreementStrategies,
     "explicitly voices other participants' positions"},
    {"Softening", Category::kDisagreementStrategies,
     "softens the blow of a disagreement"},
    {"Sources", Category::kDisagreementStrategies,
     "supports a claim with an external source"},
    {"AgreeBut", Category::kDisagreementStrategies,
     "partial disagreement"},
    {"Irrelevance", Category::kDisagreementStrategies,
     "disputes the relevance of the previous claim"},
    {"Nitpicking", Category::kDisagreementStrategies,
     "picks the previous argument apart incoherently"},
    {"DirectNo", Category::kDisagreementStrategies,
     "direct unqualified disagreement"},
    {"CriticalQuestion", Category::kDisagreementStrategies,
     "counter-argument phrased as a question"},
};

const std::unordered_map<std::string_view, int>& name_index() {
  static const std::unordered_map<std::string_view, int> idx = [] {
    std::unordered_map<std::string_view, int> m;
    for (int i = 0; i < kNumLabels; ++i) m.emplace(kRows[i].name, i);
    return m;
  }();
  return idx;
}

}  // namespace

TagSet::TagSet() {
  labels_.reserve(kNumLabels);
  for (int i = 0; i < kNumLabels; ++i) {
    labels_.push_back({i, kRows[i].name, kRows[i].cat, kRows[i].desc});
  }
}

const TagSet& TagSet::instance() {
  static const TagSet t;
  return t;
}

const LabelDef& TagSet::label(int id) const {
  if (id < 0 || id >= kNumLabels) {
    throw DataError("label id out of range: " + std::to_string(id));
  }
  return labels_[static_cast<std::size_t>(id)];
}

const LabelDef& TagSet::label(std::string_view name) const {
  return labels_[static_cast<std::size_t>(id_of(name))];
}

int TagSet::id_of(std::string_view name) const {
  auto it = name_index().find(name);
  if (it == name_index().end()) {
    throw DataError("unknown label name: " + std::string(name));
  }
  return it->second;
}

bool TagSet::has(std::string_view name) const {
  return name_index().count(name) > 0;
}

std::vector<int> TagSet::category_members(Category c) const {
  std::vector<int> out;
  for (const auto& l : labels_) {
    if (l.category == c) out.push_back(l.id);
  }
  return out;
}

}  // namespace ncodip
