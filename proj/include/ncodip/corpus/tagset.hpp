// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ncodip contributors

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ncodip/error.hpp"

namespace ncodip {

inline constexpr int kNumLabels = 31;

enum class Category {
  kPromotesDiscussion,
  kLowResponsiveness,
  kToneAndStyle,
  kDisagreementStrategies,
};

inline constexpr int kNumCategories = 4;

const char* category_name(Category c);
Category category_from_name(std::string_view name);

struct LabelDef {
  int id;                   // contiguous 0..30
  std::string name;
  Category category;
  std::string description;  // short gloss of what the tag marks
};

// Registry of the 31-tag scheme. Ids are assigned per category block, in
// ascending corpus-frequency order within each block; the mapping is fixed and
// part of every on-disk artifact (scores arrays, priors CSV).
class TagSet {
 public:
  static const TagSet& instance();

  const LabelDef& label(int id) const;
  const LabelDef& label(std::string_view name) const;   // throws DataError
  int id_of(std::string_view name) const;               // throws DataError
  bool has(std::string_view name) const;

  const std::vector<LabelDef>& labels() const { return labels_; }
  // Label ids belonging to one category, ascending.
  std::vector<int> category_members(Category c) const;

 private:
  TagSet();
  std::vector<LabelDef> labels_;
};

using LabelIdSet = std::vector<int>;  // sorted, unique label ids

}  // namespace ncodip
