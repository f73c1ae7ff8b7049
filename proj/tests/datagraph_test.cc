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


#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "test_util.h"
#include "vfgnn/datagraph.h"

namespace vfgnn {
namespace {

RatingDataset parse(const std::string& text, RatingFormat format) {
  std::istringstream in(text);
  return parse_ratings(in, format);
}

// (user id, item id, rating) triples, independent of dense indexing.
std::set<std::tuple<std::string, std::string, double>> triples(
    const RatingDataset& ds) {
  std::set<std::tuple<std::string, std::string, double>> out;
  for (const auto& r : ds.records) {
    out.insert({ds.user_ids[r.user], ds.item_ids[r.item], r.rating});
  }
  return out;
}

TEST(ParseRatings, MovieLensDat) {
  const RatingDataset ds =
      parse("1::10::4::978300760\n1::11::5::978300760\n",
            RatingFormat::kMovieLensDat);
  EXPECT_EQ(ds.num_users(), 1);
  EXPECT_EQ(ds.num_items(), 2);
  ASSERT_EQ(ds.records.size(), 2u);
  EXPECT_EQ(ds.records[0].rating, 4.0);
  EXPECT_EQ(ds.records[1].rating, 5.0);
  EXPECT_EQ(ds.user_ids[0], "1");
  EXPECT_EQ(ds.item_ids[1], "11");
}

TEST(ParseRatings, CsvAndErrors) {
  const RatingDataset ds = parse("user_id,item_id,rating\na,x,3\nb,x,1\n",
                                 RatingFormat::kCsv);
  EXPECT_EQ(ds.num_users(), 2);
  EXPECT_EQ(ds.num_items(), 1);

  try {
    parse("user_id,item_id,rating\n", RatingFormat::kCsv);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("no records"), std::string::npos);
  }
  try {
    parse("user_id,item_id,rating\na,x,3\na,x,4\n", RatingFormat::kCsv);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("(a, x)"), std::string::npos);
  }
  try {
    parse("1::10::4::1\n1::oops\n", RatingFormat::kMovieLensDat);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse("user_id,item_id,rating\na,x,9\n", RatingFormat::kCsv),
               ParseError);
  EXPECT_THROW(parse_rating_format("xml"), InvalidArgument);
}

TEST(ParseRatings, CsvRoundTrip) {
  const RatingDataset ds = generate_synthetic(20, 15, 0.3, 5, 4);
  std::ostringstream out;
  write_ratings_csv(ds, out);
  const RatingDataset back = parse(out.str(), RatingFormat::kCsv);
  EXPECT_EQ(triples(back), triples(ds));
}

RatingDataset from_degrees(const std::vector<int>& degrees) {
  RatingDataset ds;
  int items = 0;
  for (int d : degrees) items = std::max(items, d);
  for (std::size_t u = 0; u < degrees.size(); ++u)
    ds.user_ids.push_back("u" + std::to_string(u));
  for (int v = 0; v < items; ++v) ds.item_ids.push_back("i" + std::to_string(v));
  for (std::size_t u = 0; u < degrees.size(); ++u)
    for (int v = 0; v < degrees[u]; ++v)
      ds.records.push_back({static_cast<int>(u), v, 3.0});
  return ds;
}

TEST(FilterByThreshold, Examples) {
  const RatingDataset ds = from_degrees({2, 5, 7});
  const RatingDataset f = filter_by_threshold(ds, 4);
  EXPECT_EQ(f.user_ids, (std::vector<std::string>{"u1", "u2"}));
  EXPECT_EQ(triples(filter_by_threshold(ds, 1)), triples(ds));
  EXPECT_THROW(filter_by_threshold(ds, 8), InvalidArgument);
  EXPECT_THROW(filter_by_threshold(ds, 0), InvalidArgument);
}

TEST(FilterByThreshold, DropsOrphanedItems) {
  RatingDataset ds = from_degrees({3, 3});
  ds.item_ids.push_back("lonely");
  ds.records.push_back({0, 3, 2.0});
  ds.user_ids.push_back("weak");
  ds.item_ids.push_back("only_weak");
  ds.records.push_back({2, 4, 2.0});
  const RatingDataset f = filter_by_threshold(ds, 2);
  EXPECT_EQ(f.num_users(), 2);
  EXPECT_EQ(f.num_items(), 4);
  for (const auto& id : f.item_ids) EXPECT_NE(id, "only_weak");
}

// Oracle: naive repeated filtering over id triples until stable.
std::set<std::tuple<std::string, std::string, double>> naive_filter(
    std::set<std::tuple<std::string, std::string, double>> rows, int thd) {
  while (true) {
    std::map<std::string, int> deg;
    for (const auto& [u, v, r] : rows) ++deg[u];
    std::set<std::tuple<std::string, std::string, double>> next;
    for (const auto& row : rows)
      if (deg[std::get<0>(row)] >= thd) next.insert(row);
    if (next == rows) return rows;
    rows = std::move(next);
  }
}

TEST(FilterByThreshold, MatchesFixedPointOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RatingDataset ds = generate_synthetic(40, 30, 0.1, 5, seed);
    const RatingDataset f = filter_by_threshold(ds, 3);
    EXPECT_EQ(triples(f), naive_filter(triples(ds), 3));
    std::vector<int> deg(f.num_users(), 0);
    for (const auto& r : f.records) ++deg[r.user];
    for (int d : deg) EXPECT_GE(d, 3);
  }
}

TEST(PartitionItems, Examples) {
  const RatingDataset ds = generate_synthetic(5, 4, 1.0, 5, 1);
  const PartyPartition two = partition_items(ds, 2, 7);
  EXPECT_EQ(two.party_size(0), 2);
  EXPECT_EQ(two.party_size(1), 2);
  std::set<int> all;
  for (const auto& items : two.party_items) all.insert(items.begin(), items.end());
  EXPECT_EQ(all.size(), 4u);
  const PartyPartition one = partition_items(ds, 1, 7);
  EXPECT_EQ(one.party_items[0], (std::vector<int>{0, 1, 2, 3}));
  const PartyPartition again = partition_items(ds, 2, 7);
  EXPECT_EQ(again.item_party, two.item_party);
  EXPECT_THROW(partition_items(ds, 5, 7), InvalidArgument);
}

TEST(PartitionItems, SoundAndBalanced) {
  const RatingDataset ds = generate_synthetic(10, 23, 0.5, 5, 2);
  const PartyPartition p = partition_items(ds, 4, 3);
  int total = 0;
  for (int k = 0; k < 4; ++k) {
    total += p.party_size(k);
    EXPECT_GE(p.party_size(k), 5);
    EXPECT_LE(p.party_size(k), 6);
    for (std::size_t l = 0; l < p.party_items[k].size(); ++l) {
      const int v = p.party_items[k][l];
      EXPECT_EQ(p.item_party[v], k);
      EXPECT_EQ(p.item_local[v], static_cast<int>(l));
    }
  }
  EXPECT_EQ(total, 23);
  EXPECT_EQ(p.sizes(), (std::vector<int>{p.party_size(0), p.party_size(1),
                                         p.party_size(2), p.party_size(3)}));
}

TEST(SplitTrainValTest, SizesAndDeterminism) {
  RatingDataset ds = from_degrees({10, 10, 10, 10, 10, 10, 10, 10, 10, 10});
  ASSERT_EQ(ds.records.size(), 100u);
  const DatasetSplit s = split_train_val_test(ds, {0.6, 0.2, 0.2}, 3);
  EXPECT_EQ(s.train.size(), 60u);
  EXPECT_EQ(s.validation.size(), 20u);
  EXPECT_EQ(s.test.size(), 20u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 100u);
  const DatasetSplit again = split_train_val_test(ds, {0.6, 0.2, 0.2}, 3);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.test, s.test);
  EXPECT_THROW(split_train_val_test(ds, {1.0, 0.0, 0.0}, 3), InvalidArgument);
  EXPECT_THROW(split_train_val_test(ds, {0.5, 0.2, 0.2}, 3), InvalidArgument);
}

TEST(GenerateSynthetic, Examples) {
  EXPECT_EQ(generate_synthetic(6, 5, 1.0, 5, 1).records.size(), 30u);
  const RatingDataset one = generate_synthetic(1, 1, 1.0, 5, 1);
  ASSERT_EQ(one.records.size(), 1u);
  EXPECT_EQ(triples(generate_synthetic(30, 30, 0.2, 5, 9)),
            triples(generate_synthetic(30, 30, 0.2, 5, 9)));
  EXPECT_THROW(generate_synthetic(10, 10, 0.001, 5, 1), InvalidArgument);
}

TEST(GenerateSynthetic, DensityWithinBinomialBand) {
  const double p = 0.1;
  const double n = 100.0 * 100.0;
  const RatingDataset ds = generate_synthetic(100, 100, p, 5, 11);
  const double measured = ds.records.size() / n;
  EXPECT_NEAR(measured, p, 3.0 * std::sqrt(p * (1 - p) / n));
  for (const auto& r : ds.records) {
    EXPECT_GE(r.rating, 1.0);
    EXPECT_LE(r.rating, 5.0);
    EXPECT_EQ(r.rating, std::round(r.rating));
  }
}

TEST(GenerateLatentFactor, ShapeAndScale) {
  const RatingDataset ds = generate_latent_factor(200, 100, 0.05, 3, 4);
  EXPECT_LE(ds.num_users(), 200);
  EXPECT_LE(ds.num_items(), 100);
  EXPECT_GT(ds.num_users(), 150);
  EXPECT_GT(ds.records.size(), 0u);
  for (const auto& r : ds.records) {
    EXPECT_GE(r.rating, 1.0);
    EXPECT_LE(r.rating, 5.0);
  }
}

TEST(Subsample, KeepsWholeUsers) {
  const RatingDataset ds = generate_synthetic(50, 40, 0.2, 5, 3);
  const RatingDataset s = subsample(ds, 10, 0, 5);
  EXPECT_EQ(s.num_users(), 10);
  std::map<std::string, int> full_deg, sub_deg;
  for (const auto& r : ds.records) ++full_deg[ds.user_ids[r.user]];
  for (const auto& r : s.records) ++sub_deg[s.user_ids[r.user]];
  for (const auto& [u, d] : sub_deg) EXPECT_EQ(d, full_deg[u]);
}

TEST(BipartiteGraph, AdjacencySymmetricAndDegrees) {
  const BipartiteGraph g = testing::random_graph(12, 9, 0.3, 5);
  int user_sum = 0, item_sum = 0;
  for (int u = 0; u < g.num_users(); ++u) {
    user_sum += g.user_degree(u);
    int last = -1;
    for (int e : g.user_edges(u)) {
      EXPECT_EQ(g.edge(e).user, u);
      EXPECT_GT(g.edge(e).item, last);
      last = g.edge(e).item;
      const auto ie = g.item_edges(g.edge(e).item);
      EXPECT_NE(std::find(ie.begin(), ie.end(), e), ie.end());
    }
  }
  for (int v = 0; v < g.num_items(); ++v) {
    item_sum += g.item_degree(v);
    for (int e : g.item_edges(v)) EXPECT_EQ(g.edge(e).item, v);
  }
  EXPECT_EQ(user_sum, static_cast<int>(g.num_edges()));
  EXPECT_EQ(item_sum, static_cast<int>(g.num_edges()));
  EXPECT_THROW(BipartiteGraph(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}),
               InvalidArgument);
  EXPECT_THROW(BipartiteGraph(2, 2, {{0, 3, 1.0}}), InvalidArgument);
}

TEST(BipartiteGraph, PartyGraphsMergeBackToInput) {
  const RatingDataset ds = generate_synthetic(30, 25, 0.2, 5, 8);
  const PartyPartition part = partition_items(ds, 3, 2);
  const auto records = all_record_indices(ds);
  std::vector<BipartiteGraph> graphs;
  for (int p = 0; p < 3; ++p) {
    graphs.push_back(build_party_graph(ds, part, p, records));
    EXPECT_EQ(graphs.back().num_users(), 30);
    EXPECT_EQ(graphs.back().num_items(), part.party_size(p));
  }
  std::vector<std::tuple<int, int, double>> expected;
  for (const auto& r : ds.records) expected.emplace_back(r.user, r.item, r.rating);
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(merge_party_edges(graphs, part), expected);
}

}  // namespace
}  // namespace vfgnn
