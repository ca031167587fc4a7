#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "slfr/data.hpp"
#include "slfr/io.hpp"
#include "slfr/model.hpp"
#include "slfr/types.hpp"

namespace slfr {

// Items ranked by descending score over the whole catalog minus the user's
// train positives. Score ties break toward the smaller item id so rankings
// are reproducible bit-for-bit.
inline std::vector<int> rank_items(const Vectord& scores,
                                   const std::vector<int>& exclude_sorted) {
  std::vector<int> ids;
  ids.reserve(scores.size());
  for (int i = 0; i < scores.size(); ++i)
    if (!std::binary_search(exclude_sorted.begin(), exclude_sorted.end(), i))
      ids.push_back(i);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return ids;
}

// Fraction of the user's held-out items that appear in the top k.
inline double recall_at_k(const std::vector<int>& ranked,
                          const std::vector<int>& relevant, int k) {
  if (relevant.empty()) return 0.0;
  const int top = std::min<int>(k, static_cast<int>(ranked.size()));
  int hits = 0;
  for (int p = 0; p < top; ++p)
    if (std::find(relevant.begin(), relevant.end(), ranked[p]) != relevant.end())
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

// DCG with binary gains discounted by log2(position + 1), normalized by the
// best achievable ordering of the relevant items.
inline double ndcg_at_k(const std::vector<int>& ranked,
                        const std::vector<int>& relevant, int k) {
  if (relevant.empty()) return 0.0;
  const int top = std::min<int>(k, static_cast<int>(ranked.size()));
  double dcg = 0.0;
  for (int p = 0; p < top; ++p)
    if (std::find(relevant.begin(), relevant.end(), ranked[p]) != relevant.end())
      dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  double idcg = 0.0;
  const int ideal = std::min<int>(k, static_cast<int>(relevant.size()));
  for (int p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

struct EvalReport {
  std::vector<int> ks;
  std::vector<double> recall;  // parallel to ks
  std::vector<double> ndcg;    // parallel to ks
  int n_evaluated_users = 0;
  std::string config_digest;   // filled by the caller that owns the config
  double wall_seconds = 0.0;

  double recall_at(int k) const {
    for (std::size_t i = 0; i < ks.size(); ++i)
      if (ks[i] == k) return recall[i];
    throw InputError("k=" + std::to_string(k) + " not in report");
  }
  double ndcg_at(int k) const {
    for (std::size_t i = 0; i < ks.size(); ++i)
      if (ks[i] == k) return ndcg[i];
    throw InputError("k=" + std::to_string(k) + " not in report");
  }
};

namespace detail {

// Top-k prefix of rank_items without sorting the whole catalog. Produces
// the identical list because (score desc, id asc) is a total order.
inline std::vector<int> top_k_items(const Vectord& scores,
                                    const std::vector<int>& exclude_sorted, int k) {
  std::vector<int> ids;
  ids.reserve(scores.size());
  for (int i = 0; i < scores.size(); ++i)
    if (!std::binary_search(exclude_sorted.begin(), exclude_sorted.end(), i))
      ids.push_back(i);
  const auto better = [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  if (static_cast<int>(ids.size()) > k) {
    std::nth_element(ids.begin(), ids.begin() + k, ids.end(), better);
    ids.resize(k);
  }
  std::sort(ids.begin(), ids.end(), better);
  return ids;
}

}  // namespace detail

// Averages per-user metrics over users with at least one relevant item.
// `labels` defaults to the split's test lists; pass external lists (e.g.
// ground-truth preference sets) to score against a different notion of
// relevance. Train positives are always excluded from the candidate pool.
inline EvalReport evaluate(const MfModel& m, const Split& split,
                           const std::vector<int>& ks,
                           const std::vector<std::vector<int>>* labels = nullptr) {
  if (ks.empty()) throw InputError("evaluate: need at least one cutoff k");
  for (int k : ks)
    if (k < 1) throw InputError("evaluate: cutoffs must be positive");
  const auto& relevant_lists = labels ? *labels : split.test;
  if (static_cast<int>(relevant_lists.size()) != split.train.n_users)
    throw InputError("evaluate: label lists cover " +
                     std::to_string(relevant_lists.size()) + " users, split has " +
                     std::to_string(split.train.n_users));
  const auto train_pos = train_positive_lists(split);
  const int max_k = *std::max_element(ks.begin(), ks.end());

  EvalReport rep;
  rep.ks = ks;
  rep.recall.assign(ks.size(), 0.0);
  rep.ndcg.assign(ks.size(), 0.0);
  std::vector<int> missing;
  const int n_users = split.train.n_users;
  const int block = 256;
  for (int u0 = 0; u0 < n_users; u0 += block) {
    const int bs = std::min(block, n_users - u0);
    // One GEMM per user block instead of per-user matvecs.
    const Matrixd block_scores = m.user.middleRows(u0, bs) * m.item.transpose();
    for (int r = 0; r < bs; ++r) {
      const int u = u0 + r;
      if (relevant_lists[u].empty()) {
        if (labels) missing.push_back(u);
        continue;
      }
      const Vectord scores = block_scores.row(r).transpose();
      const auto ranked = detail::top_k_items(scores, train_pos[u], max_k);
      ++rep.n_evaluated_users;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        rep.recall[i] += recall_at_k(ranked, relevant_lists[u], ks[i]);
        rep.ndcg[i] += ndcg_at_k(ranked, relevant_lists[u], ks[i]);
      }
    }
  }
  if (labels && rep.n_evaluated_users == 0) {
    std::string msg = "evaluate: no user has a non-empty label list;"
                      " users with empty labels:";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i)
      msg += " " + std::to_string(missing[i]);
    if (missing.size() > 10) msg += " ...";
    throw InputError(msg);
  }
  if (rep.n_evaluated_users > 0) {
    for (std::size_t i = 0; i < ks.size(); ++i) {
      rep.recall[i] /= rep.n_evaluated_users;
      rep.ndcg[i] /= rep.n_evaluated_users;
    }
  }
  return rep;
}

inline json report_to_json(const EvalReport& rep) {
  json metrics = json::object();
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    metrics["recall@" + std::to_string(rep.ks[i])] = rep.recall[i];
    metrics["ndcg@" + std::to_string(rep.ks[i])] = rep.ndcg[i];
  }
  return json{{"metrics", metrics},
              {"n_evaluated_users", rep.n_evaluated_users},
              {"config_digest", rep.config_digest},
              {"wall_seconds", rep.wall_seconds}};
}

inline void save_report(const EvalReport& rep, const std::filesystem::path& json_path,
                        const std::filesystem::path& csv_path) {
  write_json_file(json_path, report_to_json(rep));
  std::ofstream csv(csv_path);
  if (!csv) throw InputError("cannot write " + csv_path.string());
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    csv << (i ? "," : "") << "recall@" << rep.ks[i] << ",ndcg@" << rep.ks[i];
  }
  csv << ",n_evaluated_users,config_digest,wall_seconds\n";
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    csv << (i ? "," : "") << format_double(rep.recall[i]) << ','
        << format_double(rep.ndcg[i]);
  }
  csv << ',' << rep.n_evaluated_users << ',' << rep.config_digest << ','
      << format_double(rep.wall_seconds) << '\n';
}

}  // namespace slfr
