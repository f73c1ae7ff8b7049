// Copyright 2026 The vfgnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Rating ingestion, vertical item partitioning and user-item graphs.

#ifndef VFGNN_DATAGRAPH_H_
#define VFGNN_DATAGRAPH_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "vfgnn/common.h"

namespace vfgnn {

// One observed rating. `user` and `item` are dense indices into the owning
// dataset's ID tables.
struct RatingRecord {
  int user = 0;
  int item = 0;
  double rating = 0.0;
};

struct RatingScale {
  double min = 1.0;
  double max = 5.0;
};

struct RatingDataset {
  std::vector<RatingRecord> records;
  // Dense index -> original identifier.
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  RatingScale scale;

  int num_users() const { return static_cast<int>(user_ids.size()); }
  int num_items() const { return static_cast<int>(item_ids.size()); }
  std::size_t num_records() const { return records.size(); }
};

enum class RatingFormat {
  kMovieLensDat,  // user::item::rating::timestamp
  kCsv,           // header row user_id,item_id,rating
};

RatingFormat parse_rating_format(const std::string& name);

// Throws ParseError naming the line number on malformed input, "no records"
// on an empty body, and the offending pair on duplicate (user, item) rows.
RatingDataset load_ratings(const std::string& path, RatingFormat format,
                           RatingScale scale = {});
RatingDataset parse_ratings(std::istream& in, RatingFormat format,
                            RatingScale scale = {});

// Canonical export: CSV with header user_id,item_id,rating using the original
// identifiers.
void write_ratings_csv(const RatingDataset& dataset, std::ostream& out);
void save_ratings_csv(const RatingDataset& dataset, const std::string& path);

// Repeatedly drops users with fewer than `thd` ratings until no such user
// remains; items left without ratings are dropped. IDs are re-densified.
RatingDataset filter_by_threshold(const RatingDataset& dataset, int thd);

// Seeded uniform sample of users (and items, when `num_items` > 0).
RatingDataset subsample(const RatingDataset& dataset, int num_users,
                        int num_items, std::uint64_t seed);

// Bernoulli(density) interactions with a uniform rating level in
// {1, ..., rating_levels}.
RatingDataset generate_synthetic(int num_users, int num_items, double density,
                                 int rating_levels, std::uint64_t seed);

// Ratings from a rank-`rank` latent factor model with a skewed per-user
// activity level, rounded onto {1, ..., 5}. Used as a stand-in for real
// rating data in desk-scale experiments.
RatingDataset generate_latent_factor(int num_users, int num_items,
                                     double density, int rank,
                                     std::uint64_t seed);

// Items split across parties; all parties share the user universe.
struct PartyPartition {
  int num_parties = 0;
  int num_users = 0;
  std::vector<int> item_party;              // global item -> party
  std::vector<int> item_local;              // global item -> local index
  std::vector<std::vector<int>> party_items;  // party -> global items

  int party_size(int party) const {
    return static_cast<int>(party_items[party].size());
  }
  std::vector<int> sizes() const;
  int total_items() const { return static_cast<int>(item_party.size()); }
};

// Shuffles items by seed and deals them into `num_parties` near-equal groups.
// Each party's item list is kept in ascending global order.
PartyPartition partition_items(const RatingDataset& dataset, int num_parties,
                               std::uint64_t seed);

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
};

DatasetSplit split_train_val_test(const RatingDataset& dataset,
                                  std::array<double, 3> ratios,
                                  std::uint64_t seed);

// Bipartite user-item graph in compressed adjacency form. Users always span
// the shared universe [0, N); items are indexed locally [0, M).
class BipartiteGraph {
 public:
  struct Edge {
    int user = 0;
    int item = 0;
    double rating = 0.0;
  };

  BipartiteGraph() = default;
  BipartiteGraph(int num_users, int num_items, std::vector<Edge> edges);

  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  // Edge indices incident to a node, in ascending neighbor order.
  std::span<const int> user_edges(int user) const {
    return {user_edge_ids_.data() + user_offsets_[user],
            user_edge_ids_.data() + user_offsets_[user + 1]};
  }
  std::span<const int> item_edges(int item) const {
    return {item_edge_ids_.data() + item_offsets_[item],
            item_edge_ids_.data() + item_offsets_[item + 1]};
  }
  int user_degree(int user) const {
    return user_offsets_[user + 1] - user_offsets_[user];
  }
  int item_degree(int item) const {
    return item_offsets_[item + 1] - item_offsets_[item];
  }

 private:
  int num_users_ = 0;
  int num_items_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> user_offsets_{0};
  std::vector<int> user_edge_ids_;
  std::vector<int> item_offsets_{0};
  std::vector<int> item_edge_ids_;
};

// Graph over all items of `dataset` built from the listed records.
BipartiteGraph build_graph(const RatingDataset& dataset,
                           std::span<const std::size_t> records);

// Party `party`'s local subgraph over the given records, with items indexed
// by `partition.item_local`.
BipartiteGraph build_party_graph(const RatingDataset& dataset,
                                 const PartyPartition& partition, int party,
                                 std::span<const std::size_t> records);

// (user, global item, rating) triples of a set of party graphs, sorted.
std::vector<std::tuple<int, int, double>> merge_party_edges(
    std::span<const BipartiteGraph> graphs, const PartyPartition& partition);

std::vector<std::size_t> all_record_indices(const RatingDataset& dataset);

}  // namespace vfgnn

#endif  // VFGNN_DATAGRAPH_H_
