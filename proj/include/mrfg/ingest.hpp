#pragma once
// Corpus loading/validation, corpus statistics, and stratified splits.
//
// File formats (UTF-8, one JSON object per line):
//   users:  {"id", "description", "target", "label"?, "followee_ids": [...]}
//   tweets: {"id", "author_id", "text"}
//   edges:  {"src_user_id", "dst_user_id"}   src follows dst

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mrfg/core.hpp"

namespace mrfg {

struct Corpus {
  std::vector<User> users;
  std::vector<Tweet> tweets;
};

struct DatasetSplit {
  TargetId target;
  uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

struct TargetStats {
  size_t users = 0;
  size_t tweets = 0;
  std::array<size_t, kNumClasses> label_counts{};  // indexed by class_index
  std::array<double, kNumClasses> label_pct{};
  size_t unlabeled = 0;
};

struct CorpusStats {
  std::map<std::string, TargetStats> per_target;
  std::array<size_t, 3> role_counts{};  // followee, follower, isolated
  std::array<double, 3> role_pct{};
  size_t total_users = 0;
  size_t total_tweets = 0;
};

// Percent with two decimals, half rounded away from zero.
double percent(size_t count, size_t total);

Corpus load_corpus(const std::string& users_path, const std::string& tweets_path,
                   const std::string& edges_path);

void save_corpus(const Corpus& corpus, const std::string& users_path,
                 const std::string& tweets_path, const std::string& edges_path);

// Per-label 70/15/15 stratification: train floor(0.7c), val floor(0.15c),
// test the remainder. Every user must carry a label for `target`.
DatasetSplit split_dataset(const std::vector<User>& users, const TargetId& target, uint64_t seed);

CorpusStats corpus_stats(const std::vector<User>& users, const std::vector<Tweet>& tweets);

void save_split(const DatasetSplit& split, const std::string& path);
DatasetSplit load_split(const std::string& path);

}  // namespace mrfg
