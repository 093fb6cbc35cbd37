#include <algorithm>

#include "tweetbench/common/error.hpp"
#include "tweetbench/common/hash.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/corpus.hpp"

namespace tweetbench::corpus {

std::vector<int> stratified_fold_ids(std::span<const int> labels, int num_classes, int k,
                                     std::uint64_t seed, std::span<const std::string> label_names) {
  if (k < 2) throw ConfigError("fold count must be at least 2, got " + std::to_string(k));
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) members.at(static_cast<std::size_t>(labels[i])).push_back(i);

  for (int c = 0; c < num_classes; ++c) {
    const auto n = members[c].size();
    if (n < static_cast<std::size_t>(k)) {
      const std::string name = c < static_cast<int>(label_names.size()) ? label_names[c] : std::to_string(c);
      throw DataError("class '" + name + "' has " + std::to_string(n) + " tweets, fewer than k=" +
                      std::to_string(k) + " folds");
    }
  }

  Rng rng(seed);
  std::vector<int> fold(labels.size(), -1);
  std::size_t next = 0;
  for (auto& idx : members) {
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t i : idx) fold[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return fold;
}

FoldAssignment stratified_folds(const Corpus& corpus, int k, std::uint64_t seed) {
  FoldAssignment out;
  out.k = k;
  out.fold_of = stratified_fold_ids(corpus.label_ids(), static_cast<int>(corpus.num_classes()), k, seed,
                                    corpus.labels());
  out.ids.reserve(corpus.size());
  for (const auto& t : corpus.tweets()) out.ids.push_back(t.id);
  return out;
}

int FoldAssignment::fold(std::string_view id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw DataError("tweet id not in fold assignment: " + std::string(id));
  return fold_of[static_cast<std::size_t>(it - ids.begin())];
}

std::vector<std::size_t> FoldAssignment::validation_indices(int f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == f) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::training_indices(int f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != f) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
  for (int f : fold_of) ++out.at(static_cast<std::size_t>(f));
  return out;
}

std::string FoldAssignment::hash() const {
  Fnv1a h;
  h.update(k);
  for (std::size_t i = 0; i < fold_of.size(); ++i) h.update(ids[i]).update(fold_of[i]);
  return h.hex();
}

nlohmann::json FoldAssignment::to_json() const {
  nlohmann::json assignment = nlohmann::json::object();
  for (std::size_t i = 0; i < fold_of.size(); ++i) assignment[ids[i]] = fold_of[i];
  return {{"k", k}, {"hash", hash()}, {"assignment", std::move(assignment)}};
}

}  // namespace tweetbench::corpus
