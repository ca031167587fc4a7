#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "slfr/io.hpp"
#include "slfr/rng.hpp"
#include "slfr/types.hpp"

namespace slfr {

constexpr std::int64_t kNoTimestamp = -1;

struct Interaction {
  int user = 0;
  int item = 0;
  double value = 0.0;
  std::int64_t timestamp = kNoTimestamp;
};

struct Dataset {
  int n_users = 0;
  int n_items = 0;
  std::vector<Interaction> interactions;
  FeedbackKind feedback_kind = FeedbackKind::Explicit;
  // Dense id -> id in the source file. Identity when data was born dense.
  std::vector<std::int64_t> user_ids;
  std::vector<std::int64_t> item_ids;
};

// Per-user held-out positives. Leave-one-out yields at most one item per
// user in each list; users below the positive threshold have empty lists.
struct Split {
  Dataset train;
  std::vector<std::vector<int>> valid;
  std::vector<std::vector<int>> test;
};

enum class MatrixAxis { ByUser, ByItem };

struct InteractionMatrix {
  MatrixAxis axis = MatrixAxis::ByUser;
  Matrixd rows;  // n_users x n_items for ByUser, transposed for ByItem
};

enum class CsvFormat { Csv, Tsv };

struct CsvSchema {
  std::string user = "user";
  std::string item = "item";
  std::string value = "value";
  std::string timestamp = "timestamp";  // column may be absent
};

enum class BinarizeRule { RatingGe4, WatchRatioGe2, Passthrough };

inline BinarizeRule binarize_rule_from_string(const std::string& s) {
  if (s == "rating_ge_4") return BinarizeRule::RatingGe4;
  if (s == "watch_ratio_ge_2") return BinarizeRule::WatchRatioGe2;
  if (s == "passthrough") return BinarizeRule::Passthrough;
  throw InputError("unknown binarize rule '" + s +
                   "' (valid: rating_ge_4, watch_ratio_ge_2, passthrough)");
}

inline std::string to_string(BinarizeRule r) {
  switch (r) {
    case BinarizeRule::RatingGe4: return "rating_ge_4";
    case BinarizeRule::WatchRatioGe2: return "watch_ratio_ge_2";
    case BinarizeRule::Passthrough: return "passthrough";
  }
  return "?";
}

namespace detail {

inline int column_index(const std::vector<std::string>& header,
                        const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (strip(header[i]) == name) return static_cast<int>(i);
  return -1;
}

}  // namespace detail

// Reads a delimited interaction log with a header row, re-indexes user and
// item ids densely (sorted by source id) and collapses duplicate
// (user, item) pairs keeping the highest timestamp (last row wins ties).
inline Dataset load_interactions(const std::filesystem::path& path,
                                 CsvFormat format = CsvFormat::Csv,
                                 const CsvSchema& schema = CsvSchema{}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open interactions file: " + path.string());
  const char sep = format == CsvFormat::Csv ? ',' : '\t';

  std::string line;
  if (!std::getline(in, line)) throw InputError("empty interactions file: " + path.string());
  const auto header = split_line(line, sep);
  const int ui = detail::column_index(header, schema.user);
  const int ii = detail::column_index(header, schema.item);
  const int vi = detail::column_index(header, schema.value);
  const int ti = detail::column_index(header, schema.timestamp);
  if (ui < 0 || ii < 0 || vi < 0)
    throw InputError("header of " + path.string() + " must contain columns '" +
                     schema.user + "', '" + schema.item + "', '" + schema.value + "'");

  struct RawRow {
    long long user = 0, item = 0, timestamp = kNoTimestamp;
    double value = 0.0;
    std::size_t order = 0;
  };
  std::vector<RawRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto fields = split_line(line, sep);
    const int needed = std::max({ui, ii, vi, ti >= 0 ? ti : 0});
    if (static_cast<int>(fields.size()) <= needed)
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected at least " + std::to_string(needed + 1) + " columns");
    RawRow r{};
    if (!parse_long(fields[ui], r.user))
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": non-numeric user id '" + fields[ui] + "'");
    if (!parse_long(fields[ii], r.item))
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": non-numeric item id '" + fields[ii] + "'");
    if (!parse_double(fields[vi], r.value) || !std::isfinite(r.value))
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": bad value '" + fields[vi] + "'");
    r.timestamp = kNoTimestamp;
    if (ti >= 0 && !strip(fields[ti]).empty()) {
      if (!parse_long(fields[ti], r.timestamp))
        throw InputError(path.string() + ":" + std::to_string(line_no) +
                         ": non-numeric timestamp '" + fields[ti] + "'");
    }
    r.order = rows.size();
    rows.push_back(r);
  }
  if (rows.empty()) throw InputError("no interaction rows in " + path.string());

  std::vector<std::int64_t> users, items;
  users.reserve(rows.size());
  items.reserve(rows.size());
  for (const auto& r : rows) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());

  std::unordered_map<std::int64_t, int> user_index, item_index;
  for (std::size_t i = 0; i < users.size(); ++i) user_index[users[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < items.size(); ++i) item_index[items[i]] = static_cast<int>(i);

  // Deduplicate: keep max timestamp, tie broken by file order (later wins).
  std::map<std::pair<int, int>, RawRow> best;
  for (const auto& r : rows) {
    const std::pair<int, int> key{user_index[r.user], item_index[r.item]};
    auto it = best.find(key);
    if (it == best.end() || r.timestamp > it->second.timestamp ||
        (r.timestamp == it->second.timestamp && r.order > it->second.order)) {
      best[key] = r;
    }
  }

  Dataset d;
  d.n_users = static_cast<int>(users.size());
  d.n_items = static_cast<int>(items.size());
  d.user_ids = std::move(users);
  d.item_ids = std::move(items);
  d.interactions.reserve(best.size());
  for (const auto& [key, r] : best)
    d.interactions.push_back({key.first, key.second, r.value, r.timestamp});
  return d;
}

struct BinarizeCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

inline Dataset binarize(const Dataset& d, BinarizeRule rule,
                        BinarizeCounts* counts_out = nullptr) {
  Dataset out = d;
  out.feedback_kind = FeedbackKind::Implicit;
  BinarizeCounts counts;
  for (auto& it : out.interactions) {
    switch (rule) {
      case BinarizeRule::RatingGe4:
        if (it.value < 0.0)
          throw InputError("negative rating " + format_double(it.value) +
                           " under rating_ge_4");
        it.value = it.value >= 4.0 ? 1.0 : 0.0;
        break;
      case BinarizeRule::WatchRatioGe2:
        if (it.value < 0.0)
          throw InputError("negative watch ratio " + format_double(it.value) +
                           " under watch_ratio_ge_2");
        it.value = it.value >= 2.0 ? 1.0 : 0.0;
        break;
      case BinarizeRule::Passthrough:
        if (it.value != 0.0 && it.value != 1.0)
          throw InputError("passthrough requires {0,1} values, saw " +
                           format_double(it.value));
        break;
    }
    (it.value == 1.0 ? counts.positives : counts.negatives)++;
  }
  if (counts_out) *counts_out = counts;
  std::clog << "binarize[" << to_string(rule) << "]: " << counts.positives
            << " positives, " << counts.negatives << " negatives\n";
  return out;
}

inline bool is_positive(const Interaction& it, FeedbackKind kind) {
  // Explicit logs treat every observed rating as a held-out-able event;
  // implicit logs only the value-1 rows.
  return kind == FeedbackKind::Explicit || it.value == 1.0;
}

// Latest positive per user goes to test, second-latest to valid, rest stay
// in train. Users with fewer than 3 positives keep everything in train.
// Order is by timestamp; ties and missing timestamps fall back to a
// seed-deterministic shuffle rank.
inline Split leave_one_out_split(const Dataset& d, std::uint64_t seed) {
  std::vector<std::uint64_t> rank(d.interactions.size());
  Rng rng = Rng::stream(seed, "leave_one_out");
  for (auto& r : rank) r = rng.next();

  // Per-user indices of positive interactions ordered oldest -> newest.
  std::vector<std::vector<std::size_t>> positives(d.n_users);
  for (std::size_t idx = 0; idx < d.interactions.size(); ++idx)
    if (is_positive(d.interactions[idx], d.feedback_kind))
      positives[d.interactions[idx].user].push_back(idx);
  for (auto& p : positives) {
    std::sort(p.begin(), p.end(), [&](std::size_t a, std::size_t b) {
      const auto& ia = d.interactions[a];
      const auto& ib = d.interactions[b];
      if (ia.timestamp != ib.timestamp) return ia.timestamp < ib.timestamp;
      return rank[a] < rank[b];
    });
  }

  Split s;
  s.valid.assign(d.n_users, {});
  s.test.assign(d.n_users, {});
  std::vector<bool> held(d.interactions.size(), false);
  for (int u = 0; u < d.n_users; ++u) {
    if (positives[u].size() < 3) continue;
    const std::size_t test_idx = positives[u][positives[u].size() - 1];
    const std::size_t valid_idx = positives[u][positives[u].size() - 2];
    s.test[u].push_back(d.interactions[test_idx].item);
    s.valid[u].push_back(d.interactions[valid_idx].item);
    held[test_idx] = held[valid_idx] = true;
  }

  s.train = d;
  s.train.interactions.clear();
  for (std::size_t idx = 0; idx < d.interactions.size(); ++idx)
    if (!held[idx]) s.train.interactions.push_back(d.interactions[idx]);
  return s;
}

inline std::vector<std::vector<int>> train_positive_lists(const Split& s) {
  std::vector<std::vector<int>> lists(s.train.n_users);
  for (const auto& it : s.train.interactions)
    if (is_positive(it, s.train.feedback_kind)) lists[it.user].push_back(it.item);
  for (auto& l : lists) std::sort(l.begin(), l.end());
  return lists;
}

inline InteractionMatrix interaction_matrix(const Split& s, MatrixAxis axis) {
  InteractionMatrix m;
  m.axis = axis;
  const int nu = s.train.n_users;
  const int ni = s.train.n_items;
  m.rows = axis == MatrixAxis::ByUser ? Matrixd::Zero(nu, ni) : Matrixd::Zero(ni, nu);
  for (const auto& it : s.train.interactions) {
    if (!is_positive(it, s.train.feedback_kind)) continue;
    if (axis == MatrixAxis::ByUser)
      m.rows(it.user, it.item) = 1.0;
    else
      m.rows(it.item, it.user) = 1.0;
  }
  return m;
}

struct Triple {
  int user = 0;
  int item = 0;
  double label = 0.0;
};

// Emits every train positive once plus `ratio` uniform negatives per
// positive, drawn from items outside the user's train positives. The stream
// for a given (seed, epoch) is identical across runs. Users whose positives
// cover the whole catalog contribute positives only.
class NegativeSampler {
 public:
  NegativeSampler(const Split& split, int ratio, std::uint64_t seed)
      : ratio_(ratio), seed_(seed), n_items_(split.train.n_items),
        positives_(train_positive_lists(split)) {
    if (ratio < 1) throw InputError("negative sampling ratio must be >= 1");
    for (int u = 0; u < split.train.n_users; ++u)
      for (int i : positives_[u]) flat_positives_.push_back({u, i, 1.0});
  }

  std::size_t positives_per_epoch() const { return flat_positives_.size(); }

  std::vector<Triple> epoch(std::uint64_t epoch_index) const {
    Rng rng = Rng::stream(seed_, "negative_sampling", epoch_index);
    std::vector<std::size_t> order(flat_positives_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<Triple> out;
    out.reserve(flat_positives_.size() * (1 + ratio_));
    for (std::size_t idx : order) {
      const Triple pos = flat_positives_[idx];
      out.push_back(pos);
      const auto& user_pos = positives_[pos.user];
      if (static_cast<int>(user_pos.size()) >= n_items_) {
        if (!warned_) {
          std::clog << "negative sampling: user " << pos.user
                    << " has all items positive; emitting positives only\n";
          warned_ = true;
        }
        continue;
      }
      for (int r = 0; r < ratio_; ++r) {
        int item;
        do {
          item = static_cast<int>(rng.uniform_int(n_items_));
        } while (std::binary_search(user_pos.begin(), user_pos.end(), item));
        out.push_back({pos.user, item, 0.0});
      }
    }
    return out;
  }

 private:
  int ratio_;
  std::uint64_t seed_;
  int n_items_;
  std::vector<std::vector<int>> positives_;
  std::vector<Triple> flat_positives_;
  mutable bool warned_ = false;
};

// ---------------------------------------------------------------------------
// Persistence. Datasets are CSV with header user,item,value[,timestamp];
// a split directory holds train.csv, valid.csv, test.csv, metadata.json and
// the id mapping tables.

inline void save_dataset_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "user,item,value,timestamp\n";
  for (const auto& it : d.interactions)
    out << it.user << ',' << it.item << ',' << format_double(it.value) << ','
        << it.timestamp << '\n';
}

inline void save_id_map(const std::vector<std::int64_t>& ids,
                        const std::filesystem::path& path, const char* role) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "dense_id,source_id\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << i << ',' << ids[i] << '\n';
  (void)role;
}

inline void save_split(const Split& s, const std::filesystem::path& dir,
                       std::uint64_t seed, const std::string& rule) {
  std::filesystem::create_directories(dir);
  save_dataset_csv(s.train, dir / "train.csv");
  for (const char* name : {"valid", "test"}) {
    std::ofstream out(dir / (std::string(name) + ".csv"));
    const auto& lists = std::string(name) == "valid" ? s.valid : s.test;
    out << "user,item\n";
    for (int u = 0; u < s.train.n_users; ++u)
      for (int i : lists[u]) out << u << ',' << i << '\n';
  }
  save_id_map(s.train.user_ids, dir / "user_map.csv", "user");
  save_id_map(s.train.item_ids, dir / "item_map.csv", "item");
  json meta{{"n_users", s.train.n_users},
            {"n_items", s.train.n_items},
            {"seed", seed},
            {"rule", rule},
            {"feedback_kind", to_string(s.train.feedback_kind)}};
  write_json_file(dir / "metadata.json", meta);
}

inline Split load_split(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "metadata.json"))
    throw InputError("not a split directory (missing metadata.json): " + dir.string());
  const json meta = read_json_file(dir / "metadata.json");
  Split s;
  // train.csv carries dense ids already; undo the loader's re-indexing and
  // restore the universe sizes (train may not touch every user or item).
  const Dataset raw = load_interactions(dir / "train.csv", CsvFormat::Csv);
  s.train.n_users = meta.at("n_users").get<int>();
  s.train.n_items = meta.at("n_items").get<int>();
  s.train.feedback_kind = feedback_kind_from_string(meta.at("feedback_kind").get<std::string>());
  s.train.user_ids.resize(s.train.n_users);
  s.train.item_ids.resize(s.train.n_items);
  for (int u = 0; u < s.train.n_users; ++u) s.train.user_ids[u] = u;
  for (int i = 0; i < s.train.n_items; ++i) s.train.item_ids[i] = i;
  s.train.interactions.reserve(raw.interactions.size());
  for (const auto& it : raw.interactions)
    s.train.interactions.push_back({static_cast<int>(raw.user_ids[it.user]),
                                    static_cast<int>(raw.item_ids[it.item]),
                                    it.value, it.timestamp});
  s.valid.assign(s.train.n_users, {});
  s.test.assign(s.train.n_users, {});
  for (const char* name : {"valid", "test"}) {
    std::ifstream in(dir / (std::string(name) + ".csv"));
    if (!in) throw InputError("missing " + std::string(name) + ".csv in " + dir.string());
    auto& lists = std::string(name) == "valid" ? s.valid : s.test;
    std::string line;
    std::getline(in, line);  // header
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (strip(line).empty()) continue;
      const auto f = split_line(line, ',');
      long long u, i;
      if (f.size() < 2 || !parse_long(f[0], u) || !parse_long(f[1], i))
        throw InputError(dir.string() + "/" + name + ".csv:" + std::to_string(line_no) +
                         ": bad row");
      lists[static_cast<int>(u)].push_back(static_cast<int>(i));
    }
  }
  return s;
}

}  // namespace slfr
