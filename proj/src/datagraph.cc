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

#include "vfgnn/datagraph.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace vfgnn {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' ||
                        s.back() == '\t' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line,
                                    std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + sep.size();
  }
}

[[noreturn]] void fail_line(std::size_t line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

double parse_rating_value(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() ||
      !std::isfinite(value)) {
    fail_line(line_no, "invalid rating '" + std::string(field) + "'");
  }
  return value;
}

// Accumulates parsed rows with first-appearance dense re-indexing.
class DatasetBuilder {
 public:
  explicit DatasetBuilder(RatingScale scale) { dataset_.scale = scale; }

  void add(std::string_view user, std::string_view item, double rating,
           std::size_t line_no) {
    if (user.empty() || item.empty()) fail_line(line_no, "empty identifier");
    if (rating < dataset_.scale.min || rating > dataset_.scale.max) {
      std::ostringstream msg;
      msg << "rating " << rating << " outside scale [" << dataset_.scale.min
          << ", " << dataset_.scale.max << "]";
      fail_line(line_no, msg.str());
    }
    const int u = intern(user_index_, dataset_.user_ids, user);
    const int v = intern(item_index_, dataset_.item_ids, item);
    if (!seen_.insert({u, v}).second) {
      fail_line(line_no, "duplicate rating for pair (" + std::string(user) +
                             ", " + std::string(item) + ")");
    }
    dataset_.records.push_back({u, v, rating});
  }

  RatingDataset finish() {
    if (dataset_.records.empty()) throw ParseError("no records");
    return std::move(dataset_);
  }

 private:
  static int intern(std::unordered_map<std::string, int>& index,
                    std::vector<std::string>& ids, std::string_view key) {
    auto [it, inserted] =
        index.try_emplace(std::string(key), static_cast<int>(ids.size()));
    if (inserted) ids.emplace_back(key);
    return it->second;
  }

  RatingDataset dataset_;
  std::unordered_map<std::string, int> user_index_;
  std::unordered_map<std::string, int> item_index_;
  std::set<std::pair<int, int>> seen_;
};

// Keeps the records whose user and item survive, re-densifying both axes in
// their existing order.
RatingDataset restrict(const RatingDataset& dataset,
                       const std::vector<bool>& keep_user,
                       const std::vector<bool>& keep_item) {
  std::vector<int> user_count(dataset.num_users(), 0);
  std::vector<int> item_count(dataset.num_items(), 0);
  for (const auto& r : dataset.records) {
    if (keep_user[r.user] && keep_item[r.item]) {
      ++user_count[r.user];
      ++item_count[r.item];
    }
  }
  RatingDataset out;
  out.scale = dataset.scale;
  std::vector<int> user_map(dataset.num_users(), -1);
  std::vector<int> item_map(dataset.num_items(), -1);
  for (int u = 0; u < dataset.num_users(); ++u) {
    if (user_count[u] > 0) {
      user_map[u] = out.num_users();
      out.user_ids.push_back(dataset.user_ids[u]);
    }
  }
  for (int v = 0; v < dataset.num_items(); ++v) {
    if (item_count[v] > 0) {
      item_map[v] = out.num_items();
      out.item_ids.push_back(dataset.item_ids[v]);
    }
  }
  for (const auto& r : dataset.records) {
    if (keep_user[r.user] && keep_item[r.item]) {
      out.records.push_back({user_map[r.user], item_map[r.item], r.rating});
    }
  }
  return out;
}

std::vector<std::string> numbered_ids(int count) {
  std::vector<std::string> ids(count);
  for (int i = 0; i < count; ++i) ids[i] = std::to_string(i);
  return ids;
}

}  // namespace

RatingFormat parse_rating_format(const std::string& name) {
  if (name == "movielens-dat" || name == "dat") {
    return RatingFormat::kMovieLensDat;
  }
  if (name == "csv") return RatingFormat::kCsv;
  throw InvalidArgument("unknown rating format '" + name +
                        "' (expected movielens-dat or csv)");
}

RatingDataset parse_ratings(std::istream& in, RatingFormat format,
                            RatingScale scale) {
  DatasetBuilder builder(scale);
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (format == RatingFormat::kCsv && !header_seen) {
      if (line.empty()) continue;
      const auto fields = split(line, ",");
      if (fields.size() != 3 || fields[0] != "user_id" ||
          fields[1] != "item_id" || fields[2] != "rating") {
        fail_line(line_no, "expected header user_id,item_id,rating");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    if (format == RatingFormat::kMovieLensDat) {
      const auto fields = split(line, "::");
      if (fields.size() != 4) {
        fail_line(line_no, "expected user::item::rating::timestamp");
      }
      builder.add(fields[0], fields[1], parse_rating_value(fields[2], line_no),
                  line_no);
    } else {
      const auto fields = split(line, ",");
      if (fields.size() != 3) fail_line(line_no, "expected 3 csv fields");
      builder.add(fields[0], fields[1], parse_rating_value(fields[2], line_no),
                  line_no);
    }
  }
  return builder.finish();
}

RatingDataset load_ratings(const std::string& path, RatingFormat format,
                           RatingScale scale) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_ratings(in, format, scale);
}

void write_ratings_csv(const RatingDataset& dataset, std::ostream& out) {
  out << "user_id,item_id,rating\n";
  char buf[64];
  for (const auto& r : dataset.records) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), r.rating);
    out << dataset.user_ids[r.user] << ',' << dataset.item_ids[r.item] << ','
        << std::string_view(buf, res.ptr - buf) << '\n';
  }
}

void save_ratings_csv(const RatingDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_ratings_csv(dataset, out);
}

RatingDataset filter_by_threshold(const RatingDataset& dataset, int thd) {
  if (thd < 1) throw InvalidArgument("thd must be >= 1");
  std::vector<bool> keep_user(dataset.num_users(), true);
  std::vector<bool> keep_item(dataset.num_items(), true);
  while (true) {
    std::vector<int> degree(dataset.num_users(), 0);
    std::vector<int> item_degree(dataset.num_items(), 0);
    for (const auto& r : dataset.records) {
      if (keep_user[r.user] && keep_item[r.item]) {
        ++degree[r.user];
        ++item_degree[r.item];
      }
    }
    bool changed = false;
    for (int u = 0; u < dataset.num_users(); ++u) {
      if (keep_user[u] && degree[u] < thd) {
        keep_user[u] = false;
        changed = true;
      }
    }
    for (int v = 0; v < dataset.num_items(); ++v) {
      if (keep_item[v] && item_degree[v] == 0) {
        keep_item[v] = false;
        changed = true;
      }
    }
    if (!changed) break;
  }
  RatingDataset out = restrict(dataset, keep_user, keep_item);
  if (out.records.empty()) throw InvalidArgument("empty after threshold");
  return out;
}

RatingDataset subsample(const RatingDataset& dataset, int num_users,
                        int num_items, std::uint64_t seed) {
  if (num_users < 1) throw InvalidArgument("num_users must be >= 1");
  Rng rng(seed);
  auto pick = [&rng](int total, int count) {
    std::vector<bool> keep(total, count <= 0 || count >= total);
    if (count > 0 && count < total) {
      std::vector<int> order(total);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int i = 0; i < count; ++i) keep[order[i]] = true;
    }
    return keep;
  };
  const auto keep_user = pick(dataset.num_users(), num_users);
  const auto keep_item = pick(dataset.num_items(), num_items);
  RatingDataset out = restrict(dataset, keep_user, keep_item);
  if (out.records.empty()) throw InvalidArgument("empty after subsample");
  return out;
}

RatingDataset generate_synthetic(int num_users, int num_items, double density,
                                 int rating_levels, std::uint64_t seed) {
  if (num_users < 1 || num_items < 1) {
    throw InvalidArgument("synthetic dataset needs at least one user and item");
  }
  if (!(density > 0.0 && density <= 1.0)) {
    throw InvalidArgument("density must lie in (0, 1]");
  }
  if (density * num_users * num_items < 1.0) {
    throw InvalidArgument("density * users * items must be >= 1");
  }
  if (rating_levels < 1) throw InvalidArgument("rating_levels must be >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> level(1, rating_levels);
  RatingDataset out;
  out.scale = {1.0, static_cast<double>(rating_levels)};
  out.user_ids = numbered_ids(num_users);
  out.item_ids = numbered_ids(num_items);
  for (int u = 0; u < num_users; ++u) {
    for (int v = 0; v < num_items; ++v) {
      if (coin(rng) < density) {
        out.records.push_back({u, v, static_cast<double>(level(rng))});
      }
    }
  }
  if (out.records.empty()) throw InvalidArgument("no interactions sampled");
  return out;
}

RatingDataset generate_latent_factor(int num_users, int num_items,
                                     double density, int rank,
                                     std::uint64_t seed) {
  if (num_users < 1 || num_items < 1 || rank < 1) {
    throw InvalidArgument("latent factor dataset needs positive sizes");
  }
  if (!(density > 0.0 && density <= 1.0)) {
    throw InvalidArgument("density must lie in (0, 1]");
  }
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::lognormal_distribution<double> activity(0.0, 0.7);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const double factor_scale = 1.0 / std::sqrt(static_cast<double>(rank));

  Matrix user_f(num_users, rank), item_f(num_items, rank);
  Vector user_bias(num_users), item_bias(num_items);
  Vector user_act(num_users), item_pop(num_items);
  for (int u = 0; u < num_users; ++u) {
    for (int j = 0; j < rank; ++j) user_f(u, j) = gauss(rng) * factor_scale;
    user_bias(u) = 0.4 * gauss(rng);
    user_act(u) = activity(rng);
  }
  for (int v = 0; v < num_items; ++v) {
    for (int j = 0; j < rank; ++j) item_f(v, j) = gauss(rng) * factor_scale;
    item_bias(v) = 0.4 * gauss(rng);
    item_pop(v) = activity(rng);
  }
  user_act /= user_act.mean();
  item_pop /= item_pop.mean();

  RatingDataset out;
  out.scale = {1.0, 5.0};
  out.user_ids = numbered_ids(num_users);
  out.item_ids = numbered_ids(num_items);
  for (int u = 0; u < num_users; ++u) {
    for (int v = 0; v < num_items; ++v) {
      const double p = std::min(1.0, density * user_act(u) * item_pop(v));
      const double draw = coin(rng);
      const double noise = 0.5 * gauss(rng);
      if (draw >= p) continue;
      const double score = 3.6 + user_bias(u) + item_bias(v) +
                           user_f.row(u).dot(item_f.row(v)) + noise;
      out.records.push_back({u, v, std::clamp(std::round(score), 1.0, 5.0)});
    }
  }
  if (out.records.empty()) throw InvalidArgument("no interactions sampled");
  // Drop users/items that ended up without ratings.
  return restrict(out, std::vector<bool>(num_users, true),
                  std::vector<bool>(num_items, true));
}

std::vector<int> PartyPartition::sizes() const {
  std::vector<int> out(num_parties);
  for (int p = 0; p < num_parties; ++p) out[p] = party_size(p);
  return out;
}

PartyPartition partition_items(const RatingDataset& dataset, int num_parties,
                               std::uint64_t seed) {
  const int total = dataset.num_items();
  if (num_parties < 1) throw InvalidArgument("party count must be >= 1");
  if (num_parties > total) {
    throw InvalidArgument("party count " + std::to_string(num_parties) +
                          " exceeds item count " + std::to_string(total));
  }
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  PartyPartition out;
  out.num_parties = num_parties;
  out.num_users = dataset.num_users();
  out.item_party.assign(total, -1);
  out.item_local.assign(total, -1);
  out.party_items.resize(num_parties);
  for (int p = 0; p < num_parties; ++p) {
    const auto begin = static_cast<std::size_t>(
        static_cast<long long>(total) * p / num_parties);
    const auto end = static_cast<std::size_t>(
        static_cast<long long>(total) * (p + 1) / num_parties);
    auto& items = out.party_items[p];
    items.assign(order.begin() + begin, order.begin() + end);
    std::sort(items.begin(), items.end());
    for (std::size_t i = 0; i < items.size(); ++i) {
      out.item_party[items[i]] = p;
      out.item_local[items[i]] = static_cast<int>(i);
    }
  }
  return out;
}

DatasetSplit split_train_val_test(const RatingDataset& dataset,
                                  std::array<double, 3> ratios,
                                  std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0)) throw InvalidArgument("split ratios must be positive");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw InvalidArgument("split ratios must sum to 1");
  }
  const std::size_t n = dataset.num_records();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(ratios[0] * n)));
  const auto n_val = std::min<std::size_t>(
      n - n_train, static_cast<std::size_t>(std::llround(ratios[1] * n)));
  DatasetSplit out;
  out.ratios = ratios;
  out.train.assign(order.begin(), order.begin() + n_train);
  out.validation.assign(order.begin() + n_train,
                        order.begin() + n_train + n_val);
  out.test.assign(order.begin() + n_train + n_val, order.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

BipartiteGraph::BipartiteGraph(int num_users, int num_items,
                               std::vector<Edge> edges)
    : num_users_(num_users), num_items_(num_items), edges_(std::move(edges)) {
  if (num_users < 0 || num_items < 0) {
    throw InvalidArgument("graph sizes must be non-negative");
  }
  for (const auto& e : edges_) {
    if (e.user < 0 || e.user >= num_users || e.item < 0 ||
        e.item >= num_items) {
      throw InvalidArgument("edge (" + std::to_string(e.user) + ", " +
                            std::to_string(e.item) + ") out of range");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i].user == edges_[i - 1].user &&
        edges_[i].item == edges_[i - 1].item) {
      throw InvalidArgument("duplicate edge (" +
                            std::to_string(edges_[i].user) + ", " +
                            std::to_string(edges_[i].item) + ")");
    }
  }
  user_offsets_.assign(num_users + 1, 0);
  item_offsets_.assign(num_items + 1, 0);
  for (const auto& e : edges_) {
    ++user_offsets_[e.user + 1];
    ++item_offsets_[e.item + 1];
  }
  std::partial_sum(user_offsets_.begin(), user_offsets_.end(),
                   user_offsets_.begin());
  std::partial_sum(item_offsets_.begin(), item_offsets_.end(),
                   item_offsets_.begin());
  user_edge_ids_.resize(edges_.size());
  item_edge_ids_.resize(edges_.size());
  std::vector<int> user_fill(user_offsets_.begin(), user_offsets_.end() - 1);
  std::vector<int> item_fill(item_offsets_.begin(), item_offsets_.end() - 1);
  // Edges are sorted by (user, item), so both adjacency lists come out sorted
  // by neighbor index.
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    user_edge_ids_[user_fill[edges_[e].user]++] = e;
    item_edge_ids_[item_fill[edges_[e].item]++] = e;
  }
}

BipartiteGraph build_graph(const RatingDataset& dataset,
                           std::span<const std::size_t> records) {
  std::vector<BipartiteGraph::Edge> edges;
  edges.reserve(records.size());
  for (std::size_t idx : records) {
    const auto& r = dataset.records.at(idx);
    edges.push_back({r.user, r.item, r.rating});
  }
  return BipartiteGraph(dataset.num_users(), dataset.num_items(),
                        std::move(edges));
}

BipartiteGraph build_party_graph(const RatingDataset& dataset,
                                 const PartyPartition& partition, int party,
                                 std::span<const std::size_t> records) {
  if (party < 0 || party >= partition.num_parties) {
    throw InvalidArgument("party index out of range");
  }
  if (partition.total_items() != dataset.num_items()) {
    throw InvalidArgument("partition does not match dataset item count");
  }
  std::vector<BipartiteGraph::Edge> edges;
  for (std::size_t idx : records) {
    const auto& r = dataset.records.at(idx);
    if (partition.item_party[r.item] == party) {
      edges.push_back({r.user, partition.item_local[r.item], r.rating});
    }
  }
  return BipartiteGraph(dataset.num_users(), partition.party_size(party),
                        std::move(edges));
}

std::vector<std::tuple<int, int, double>> merge_party_edges(
    std::span<const BipartiteGraph> graphs, const PartyPartition& partition) {
  std::vector<std::tuple<int, int, double>> out;
  for (std::size_t p = 0; p < graphs.size(); ++p) {
    for (const auto& e : graphs[p].edges()) {
      out.emplace_back(e.user, partition.party_items[p][e.item], e.rating);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> all_record_indices(const RatingDataset& dataset) {
  std::vector<std::size_t> out(dataset.num_records());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

}  // namespace vfgnn
