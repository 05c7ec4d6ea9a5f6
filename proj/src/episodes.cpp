#include "malfew/episodes.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "malfew/error.hpp"
#include "malfew/random.hpp"

namespace malfew::episodes {

using binfeed::LineageKind;

ClassSplit split_classes(const binfeed::Manifest& manifest, std::size_t n_train, std::size_t n_test,
                         std::uint64_t seed) {
  auto families = manifest.families();
  if (n_train == 0 || n_test == 0) throw Error(ErrorCode::InvalidArgument, "both split sides must be non-empty");
  if (n_train + n_test > families.size()) {
    throw Error(ErrorCode::InsufficientClasses, std::to_string(n_train) + "+" + std::to_string(n_test) +
                                                    " classes requested, manifest has " +
                                                    std::to_string(families.size()));
  }
  Rng rng(derive_seed(seed, "episodes", "split"));
  rng.shuffle(families);
  ClassSplit split;
  split.seed = seed;
  split.train_classes.assign(families.begin(), families.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_classes.assign(families.begin() + static_cast<std::ptrdiff_t>(n_train),
                            families.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
  return split;
}

SamplePool SamplePool::from(const binfeed::Manifest& manifest, std::span<const std::string> classes,
                            bool include_augmented) {
  SamplePool pool;
  pool.root.resize(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) pool.root[i] = manifest.root_of(i);
  for (const auto& family : classes) {
    auto it = manifest.class_index().find(family);
    if (it == manifest.class_index().end()) {
      throw Error(ErrorCode::InvalidArgument, "class '" + family + "' not in manifest");
    }
    std::vector<std::size_t> members;
    for (auto i : it->second) {
      const auto kind = manifest.at(i).lineage.kind;
      if (kind == LineageKind::Original || (include_augmented && kind == LineageKind::Augmented)) {
        members.push_back(i);
      }
    }
    pool.classes.push_back(family);
    pool.members.push_back(std::move(members));
  }
  return pool;
}

std::vector<std::size_t> query_quotas(std::size_t ways, std::size_t n_query) {
  std::vector<std::size_t> quotas(ways, ways ? n_query / ways : 0);
  for (std::size_t c = 0; c < (ways ? n_query % ways : 0); ++c) ++quotas[c];
  return quotas;
}

Episode sample_episode(const SamplePool& pool, std::size_t ways, std::size_t shots, std::size_t n_query,
                       std::uint64_t seed) {
  if (ways == 0 || shots == 0) throw Error(ErrorCode::InvalidArgument, "ways and shots must be >= 1");
  if (pool.classes.size() < ways) {
    throw Error(ErrorCode::InsufficientClasses, std::to_string(ways) + "-way episode from " +
                                                    std::to_string(pool.classes.size()) + " classes");
  }
  const auto quotas = query_quotas(ways, n_query);
  Rng rng(seed);

  std::vector<std::size_t> order(pool.classes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  Episode ep;
  ep.ways = ways;
  ep.shots = shots;
  ep.class_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ways));

  for (std::size_t slot = 0; slot < ways; ++slot) {
    const auto& members = pool.members[ep.class_ids[slot]];
    const auto& name = pool.classes[ep.class_ids[slot]];
    if (members.size() < shots + quotas[slot]) {
      throw Error(ErrorCode::InsufficientSamples, "class '" + name + "' has " + std::to_string(members.size()) +
                                                      " samples, needs " + std::to_string(shots + quotas[slot]));
    }
    auto shuffled = members;
    rng.shuffle(shuffled);
    std::set<std::size_t> support_roots;
    for (std::size_t k = 0; k < shots; ++k) {
      ep.support.push_back({shuffled[k], slot});
      support_roots.insert(pool.root[shuffled[k]]);
    }
    std::size_t taken = 0;
    for (std::size_t i = shots; i < shuffled.size() && taken < quotas[slot]; ++i) {
      if (support_roots.contains(pool.root[shuffled[i]])) continue;
      ep.query.push_back({shuffled[i], slot});
      ++taken;
    }
    if (taken < quotas[slot]) {
      throw Error(ErrorCode::InsufficientSamples,
                  "class '" + name + "' lacks " + std::to_string(quotas[slot]) + " queries unrelated to its support");
    }
  }
  ep.labels = pair_labels(ep);
  return ep;
}

std::vector<std::uint8_t> pair_labels(const Episode& episode) {
  std::vector<std::uint8_t> y(episode.query.size() * episode.ways, 0);
  for (std::size_t q = 0; q < episode.query.size(); ++q) {
    for (std::size_t c = 0; c < episode.ways; ++c) {
      y[q * episode.ways + c] = episode.query[q].slot == c ? 1 : 0;
    }
  }
  return y;
}

std::string dump_episode(const Episode& episode, const SamplePool& pool, const binfeed::Manifest& manifest) {
  std::ostringstream os;
  os << "episode\t" << episode.ways << "-way\t" << episode.shots << "-shot\t" << episode.query.size() << "-query\n";
  for (std::size_t c = 0; c < episode.ways; ++c) os << "class\t" << c << '\t' << pool.classes[episode.class_ids[c]] << '\n';
  for (const auto& s : episode.support) os << "support\t" << s.slot << '\t' << manifest.at(s.entry).origin_id << '\n';
  for (const auto& s : episode.query) os << "query\t" << s.slot << '\t' << manifest.at(s.entry).origin_id << '\n';
  for (std::size_t q = 0; q < episode.query.size(); ++q) {
    os << "y";
    for (std::size_t c = 0; c < episode.ways; ++c) os << '\t' << int(episode.labels[q * episode.ways + c]);
    os << '\n';
  }
  return os.str();
}

}  // namespace malfew::episodes
