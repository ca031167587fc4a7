// Shared fixtures for the test suites: scratch directories and slow,
// straight-from-the-definition reference implementations used as oracles
// against the optimized library code.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <slfr/types.hpp>

namespace testutil {

// Creates a unique scratch directory and removes it (recursively) on scope
// exit, so suites can write files without polluting the source tree.
class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto candidate = base / ("slfr_test_" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = std::move(candidate);
        return;
      }
    }
    throw std::runtime_error("TempDir: could not create scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const {
    return path_ / leaf;
  }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// ---------------------------------------------------------------------------
// Ranking-metric oracles. Deliberately naive: build explicit (score, id)
// pairs, stable rules spelled out longhand, O(n log n) or worse everywhere.
// ---------------------------------------------------------------------------

// Full ranking by descending score, ascending id on ties, skipping excluded
// ids. `excluded` need not be sorted here — the oracle does its own lookup.
inline std::vector<int> oracle_rank(const std::vector<double>& scores,
                                    const std::vector<int>& excluded) {
  std::set<int> drop(excluded.begin(), excluded.end());
  std::vector<std::pair<double, int>> keyed;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    if (drop.count(i)) continue;
    keyed.emplace_back(scores[static_cast<std::size_t>(i)], i);
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  out.reserve(keyed.size());
  for (const auto& kv : keyed) out.push_back(kv.second);
  return out;
}

inline double oracle_recall(const std::vector<int>& ranked,
                            const std::vector<int>& relevant, int k) {
  if (relevant.empty()) return 0.0;
  std::set<int> rel(relevant.begin(), relevant.end());
  int hits = 0;
  for (int p = 0; p < k && p < static_cast<int>(ranked.size()); ++p)
    if (rel.count(ranked[static_cast<std::size_t>(p)])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(rel.size());
}

inline double oracle_ndcg(const std::vector<int>& ranked,
                          const std::vector<int>& relevant, int k) {
  if (relevant.empty()) return 0.0;
  std::set<int> rel(relevant.begin(), relevant.end());
  double dcg = 0.0;
  for (int p = 0; p < k && p < static_cast<int>(ranked.size()); ++p)
    if (rel.count(ranked[static_cast<std::size_t>(p)]))
      dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  double idcg = 0.0;
  const int ideal = std::min<int>(k, static_cast<int>(rel.size()));
  for (int p = 0; p < ideal; ++p)
    idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

// ---------------------------------------------------------------------------
// Gaussian-mixture oracle for the KL decomposition: exact log-density of the
// aggregate posterior q(z) = (1/N) sum_m q(z|x_m) and of its per-dimension
// marginals, evaluated by direct summation over all N components.
// ---------------------------------------------------------------------------

inline double log_normal_pdf(double z, double mu, double logvar) {
  static const double kLog2Pi = std::log(2.0 * std::acos(-1.0));
  const double var = std::exp(logvar);
  const double d = z - mu;
  return -0.5 * (kLog2Pi + logvar + d * d / var);
}

// log[(1/N) sum_m prod_k N(z_k; mu_mk, var_mk)] over the full component set.
inline double oracle_log_mixture(const slfr::Vectord& z, const slfr::Matrixd& mu,
                                 const slfr::Matrixd& logvar) {
  const auto n = mu.rows();
  std::vector<double> logs(static_cast<std::size_t>(n));
  for (Eigen::Index m = 0; m < n; ++m) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < mu.cols(); ++k)
      acc += log_normal_pdf(z[k], mu(m, k), logvar(m, k));
    logs[static_cast<std::size_t>(m)] = acc;
  }
  const double peak = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double v : logs) sum += std::exp(v - peak);
  return peak + std::log(sum) - std::log(static_cast<double>(n));
}

inline double oracle_log_mixture_dim(double zk, Eigen::Index k,
                                     const slfr::Matrixd& mu,
                                     const slfr::Matrixd& logvar) {
  const auto n = mu.rows();
  std::vector<double> logs(static_cast<std::size_t>(n));
  for (Eigen::Index m = 0; m < n; ++m)
    logs[static_cast<std::size_t>(m)] = log_normal_pdf(zk, mu(m, k), logvar(m, k));
  const double peak = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double v : logs) sum += std::exp(v - peak);
  return peak + std::log(sum) - std::log(static_cast<double>(n));
}

// Analytic KL(N(mu, diag var) || N(0, I)) for one diagonal Gaussian.
inline double analytic_standard_kl(const slfr::Vectord& mu, const slfr::Vectord& logvar) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < mu.size(); ++k)
    acc += 0.5 * (mu[k] * mu[k] + std::exp(logvar[k]) - logvar[k] - 1.0);
  return acc;
}

}  // namespace testutil
