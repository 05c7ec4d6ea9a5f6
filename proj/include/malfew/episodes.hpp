#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "malfew/binfeed.hpp"

namespace malfew::episodes {

struct ClassSplit {
  std::vector<std::string> train_classes;
  std::vector<std::string> test_classes;
  std::uint64_t seed = 0;
};

/// Uniform random disjoint split of the manifest's families.
ClassSplit split_classes(const binfeed::Manifest& manifest, std::size_t n_train, std::size_t n_test,
                         std::uint64_t seed);

/// Sampling units for one side of a split: the non-obfuscated entries of
/// each class (augmented rotations optional), plus each unit's root original.
struct SamplePool {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> members;  // manifest indices, per class
  std::vector<std::size_t> root;                  // indexed by manifest index

  static SamplePool from(const binfeed::Manifest& manifest, std::span<const std::string> classes,
                         bool include_augmented = true);
};

struct EpisodeSample {
  std::size_t entry = 0;  // manifest index
  std::size_t slot = 0;   // class position within the episode, 0..C-1
};

/// One C-way K-shot task. Support is class-major; queries are grouped by
/// slot. labels is N x C row-major, one-hot per query.
struct Episode {
  std::size_t ways = 0;
  std::size_t shots = 0;
  std::vector<std::size_t> class_ids;  // pool class index per slot
  std::vector<EpisodeSample> support;
  std::vector<EpisodeSample> query;
  std::vector<std::uint8_t> labels;
};

/// Per-class query counts: an even spread, remainder to the lowest slots.
std::vector<std::size_t> query_quotas(std::size_t ways, std::size_t n_query);

/// C classes without replacement; K support per class without replacement;
/// queries disjoint from support and never sharing a root original with a
/// support sample of the same episode.
Episode sample_episode(const SamplePool& pool, std::size_t ways, std::size_t shots, std::size_t n_query,
                       std::uint64_t seed);

/// y[q][c] = 1 iff query q's class equals support class c.
std::vector<std::uint8_t> pair_labels(const Episode& episode);

/// Debug dump: one line per sample ("support"/"query", slot, origin_id), then
/// one "y" line per query row.
std::string dump_episode(const Episode& episode, const SamplePool& pool, const binfeed::Manifest& manifest);

}  // namespace malfew::episodes
