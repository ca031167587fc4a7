#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "slfr/adam.hpp"
#include "slfr/data.hpp"
#include "slfr/io.hpp"
#include "slfr/model.hpp"
#include "slfr/rng.hpp"
#include "slfr/train.hpp"
#include "slfr/types.hpp"

namespace slfr {

struct SynthConfig {
  int n_users = 500;
  int n_items = 1000;
  int d_true = 8;
  double conf_strength = 1.0;  // scale on the confounder score sum
  int exposure_k = 30;         // items shown per user per round
  int rounds = 1;
  double density = 0.1;        // fraction of items each user truly likes
  std::uint64_t seed = 42;

  // Generator shape: factors carry a positive mean so confounder scores
  // are positive on average and push observations toward extra positives.
  double factor_mean = 0.3;
  double factor_sd = 0.35;
  double conf_mean = 0.4;
  double conf_sd = 0.35;

  // The "former recommender" driving exposure from round 2 on.
  int former_d = 16;
  int former_epochs = 15;
  double former_lr = 0.01;
  int former_batch = 2048;
};

struct SynthWorld {
  Matrixd true_user;   // n_users x d_true
  Matrixd true_item;   // n_items x d_true
  Matrixd conf_user;   // n_users x d_true
  Matrixd conf_item;   // n_items x d_true
  std::vector<std::vector<int>> true_positives;  // per user, sorted item ids

  int n_users() const { return static_cast<int>(true_user.rows()); }
  int n_items() const { return static_cast<int>(true_item.rows()); }
  bool is_true_positive(int u, int i) const {
    return std::binary_search(true_positives[u].begin(), true_positives[u].end(), i);
  }
};

struct RoundStats {
  int round = 0;  // 1-based
  double false_positive_rate = 0.0;
  double false_negative_rate = 0.0;
  double positive_rate = 0.0;
};

namespace detail {

inline Matrixd gaussian_matrix(int rows, int cols, double mean, double sd,
                               std::uint64_t seed, const char* stream) {
  Rng rng = Rng::stream(seed, stream);
  Matrixd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal(mean, sd);
  return m;
}

}  // namespace detail

// Ground truth: a user truly likes the top `density` fraction of items by
// the noise-free true score. The confounder factors live alongside but do
// not influence what is truly liked.
inline SynthWorld generate_world(const SynthConfig& cfg) {
  if (cfg.n_users < 1 || cfg.n_items < 1 || cfg.d_true < 1)
    throw InputError("generate_world: positive n_users, n_items, d_true required");
  if (cfg.density < 0.0 || cfg.density > 1.0)
    throw InputError("generate_world: density must be in [0, 1]");
  SynthWorld w;
  w.true_user = detail::gaussian_matrix(cfg.n_users, cfg.d_true, cfg.factor_mean,
                                        cfg.factor_sd, cfg.seed, "true_user");
  w.true_item = detail::gaussian_matrix(cfg.n_items, cfg.d_true, cfg.factor_mean,
                                        cfg.factor_sd, cfg.seed, "true_item");
  w.conf_user = detail::gaussian_matrix(cfg.n_users, cfg.d_true, cfg.conf_mean,
                                        cfg.conf_sd, cfg.seed, "conf_user");
  w.conf_item = detail::gaussian_matrix(cfg.n_items, cfg.d_true, cfg.conf_mean,
                                        cfg.conf_sd, cfg.seed, "conf_item");

  const int n_pos = static_cast<int>(std::lround(cfg.density * cfg.n_items));
  w.true_positives.assign(cfg.n_users, {});
  std::vector<int> ids(cfg.n_items);
  for (int u = 0; u < cfg.n_users; ++u) {
    const Vectord scores = w.true_item * w.true_user.row(u).transpose();
    for (int i = 0; i < cfg.n_items; ++i) ids[i] = i;
    const auto better = [&](int a, int b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    };
    if (n_pos < cfg.n_items)
      std::nth_element(ids.begin(), ids.begin() + n_pos, ids.end(), better);
    w.true_positives[u].assign(ids.begin(), ids.begin() + n_pos);
    std::sort(w.true_positives[u].begin(), w.true_positives[u].end());
  }
  return w;
}

// Probability that user u gives positive feedback when shown item i: the
// true relevance score plus the scaled confounder scores, squashed.
inline double observation_probability(const SynthWorld& w, double conf_strength,
                                      int u, int i) {
  const double s_true = w.true_user.row(u).dot(w.true_item.row(i));
  const double s_conf_u = w.conf_user.row(u).dot(w.true_item.row(i));
  const double s_conf_i = w.conf_item.row(i).dot(w.true_user.row(u));
  return sigmoid(s_true + conf_strength * (s_conf_u + s_conf_i));
}

inline Matrixd observation_probability_matrix(const SynthWorld& w,
                                              double conf_strength) {
  Matrixd p(w.n_users(), w.n_items());
  for (int u = 0; u < w.n_users(); ++u)
    for (int i = 0; i < w.n_items(); ++i)
      p(u, i) = observation_probability(w, conf_strength, u, i);
  return p;
}

struct SimulationResult {
  Dataset data;  // implicit observations, timestamp = round index
  std::vector<RoundStats> rounds;
};

namespace detail {

// Plain MF fitted to the accumulated observations — the biased predecessor
// system whose rankings drive later exposure rounds.
inline MfModel train_former_recommender(const Dataset& observed,
                                        const SynthConfig& cfg, int round) {
  MfModel m = init_mf(observed.n_users, observed.n_items, cfg.former_d,
                      Rng::mix(cfg.seed, "former_init", round));
  AdamSparseRows opt_user(observed.n_users, cfg.former_d, {cfg.former_lr});
  AdamSparseRows opt_item(observed.n_items, cfg.former_d, {cfg.former_lr});
  Matrixd d_user = Matrixd::Zero(observed.n_users, cfg.former_d);
  Matrixd d_item = Matrixd::Zero(observed.n_items, cfg.former_d);

  std::vector<Triple> triples;
  triples.reserve(observed.interactions.size());
  for (const auto& it : observed.interactions)
    triples.push_back({it.user, it.item, it.value});

  TrainConfig tc;
  tc.gamma = 0.0;
  tc.l2 = 0.0;
  tc.d = cfg.former_d;
  tc.feedback_kind = FeedbackKind::Implicit;

  long long step = 0;
  std::vector<int> touched_u, touched_i;
  for (int epoch = 0; epoch < cfg.former_epochs; ++epoch) {
    Rng rng = Rng::stream(cfg.seed, "former_shuffle",
                          static_cast<std::uint64_t>(round) * 10000 + epoch);
    rng.shuffle(triples);
    for (std::size_t start = 0; start < triples.size();
         start += static_cast<std::size_t>(cfg.former_batch)) {
      const std::size_t bs =
          std::min<std::size_t>(cfg.former_batch, triples.size() - start);
      const std::vector<Triple> batch(triples.begin() + start,
                                      triples.begin() + start + bs);
      const BatchLoss bl = slfr_batch_grad(m, nullptr, batch, tc, d_user,
                                           d_item, touched_u, touched_i);
      if (!std::isfinite(bl.total))
        throw NumericalError("former recommender diverged in round " +
                             std::to_string(round));
      ++step;
      opt_user.step(m.user, d_user, touched_u, step);
      opt_item.step(m.item, d_item, touched_i, step);
      for (int u : touched_u) d_user.row(u).setZero();
      for (int i : touched_i) d_item.row(i).setZero();
    }
  }
  return m;
}

}  // namespace detail

// Runs the exposure/feedback loop: uniform exposure in round 1, then each
// later round exposes the top-scoring not-yet-seen items of an MF model
// fitted to everything observed so far. Per-round error rates are measured
// against the ground-truth preference labels.
inline SimulationResult simulate_exposure(const SynthWorld& w,
                                          const SynthConfig& cfg) {
  if (cfg.exposure_k < 1 || cfg.exposure_k > cfg.n_items)
    throw InputError("simulate_exposure: exposure_k must be in [1, n_items]");
  if (cfg.rounds < 1) throw InputError("simulate_exposure: rounds must be >= 1");
  if (w.n_users() != cfg.n_users || w.n_items() != cfg.n_items)
    throw InputError("simulate_exposure: world does not match config");

  SimulationResult res;
  res.data.n_users = cfg.n_users;
  res.data.n_items = cfg.n_items;
  res.data.feedback_kind = FeedbackKind::Implicit;
  res.data.user_ids.resize(cfg.n_users);
  res.data.item_ids.resize(cfg.n_items);
  for (int u = 0; u < cfg.n_users; ++u) res.data.user_ids[u] = u;
  for (int i = 0; i < cfg.n_items; ++i) res.data.item_ids[i] = i;

  std::vector<std::vector<char>> exposed(
      cfg.n_users, std::vector<char>(cfg.n_items, 0));

  for (int round = 1; round <= cfg.rounds; ++round) {
    // Which items each user sees this round.
    std::vector<std::vector<int>> shown(cfg.n_users);
    if (round == 1) {
      Rng ex = Rng::stream(cfg.seed, "exposure", round);
      for (int u = 0; u < cfg.n_users; ++u)
        shown[u] = ex.sample_without_replacement(cfg.n_items, cfg.exposure_k);
    } else {
      const MfModel former =
          detail::train_former_recommender(res.data, cfg, round);
      for (int u = 0; u < cfg.n_users; ++u) {
        const Vectord scores = score_all(former, u);
        std::vector<int> candidates;
        candidates.reserve(cfg.n_items);
        for (int i = 0; i < cfg.n_items; ++i)
          if (!exposed[u][i]) candidates.push_back(i);
        const auto better = [&](int a, int b) {
          if (scores[a] != scores[b]) return scores[a] > scores[b];
          return a < b;
        };
        const int k = std::min<int>(cfg.exposure_k,
                                    static_cast<int>(candidates.size()));
        std::nth_element(candidates.begin(), candidates.begin() + k,
                         candidates.end(), better);
        candidates.resize(k);
        std::sort(candidates.begin(), candidates.end(), better);
        shown[u] = candidates;
      }
    }

    Rng ob = Rng::stream(cfg.seed, "observe", round);
    long long tp = 0, fp = 0, tn = 0, fn = 0, pos = 0, shown_total = 0;
    for (int u = 0; u < cfg.n_users; ++u) {
      for (int i : shown[u]) {
        exposed[u][i] = 1;
        const double p = observation_probability(w, cfg.conf_strength, u, i);
        const double y = ob.uniform() < p ? 1.0 : 0.0;
        res.data.interactions.push_back({u, i, y, round});
        ++shown_total;
        pos += y == 1.0;
        const bool truly = w.is_true_positive(u, i);
        if (truly && y == 1.0) ++tp;
        else if (truly) ++fn;
        else if (y == 1.0) ++fp;
        else ++tn;
      }
    }
    RoundStats st;
    st.round = round;
    st.false_positive_rate = fp + tn > 0 ? static_cast<double>(fp) / (fp + tn) : 0.0;
    st.false_negative_rate = fn + tp > 0 ? static_cast<double>(fn) / (fn + tp) : 0.0;
    st.positive_rate = shown_total > 0 ? static_cast<double>(pos) / shown_total : 0.0;
    res.rounds.push_back(st);
  }
  return res;
}

// External label set for evaluate(): the items each user truly likes,
// minus what training already showed them as positives.
struct TrueLabelSet {
  std::vector<std::vector<int>> labels;
  int n_excluded_users = 0;  // users left with no unseen true positive
};

inline TrueLabelSet true_label_testset(const SynthWorld& w, const Split& split) {
  if (w.n_users() != split.train.n_users || w.n_items() != split.train.n_items)
    throw InputError("true_label_testset: world does not match split");
  const auto train_pos = train_positive_lists(split);
  TrueLabelSet out;
  out.labels.assign(w.n_users(), {});
  for (int u = 0; u < w.n_users(); ++u) {
    for (int i : w.true_positives[u])
      if (!std::binary_search(train_pos[u].begin(), train_pos[u].end(), i))
        out.labels[u].push_back(i);
    if (out.labels[u].empty()) ++out.n_excluded_users;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark construction: a small confounded rating log in the shape of a
// real ratings dataset, with a per-user tail of unconfounded measurements
// so that the held-out rows probe true preference rather than exposure.

// Adds `per_user` positive rows per user drawn uniformly from the user's
// not-yet-seen true positives, timestamped after every simulated round.
inline void append_unbiased_measurements(const SynthWorld& w, Dataset& data,
                                         int per_user, int rounds,
                                         std::uint64_t seed) {
  std::vector<std::vector<char>> seen(
      w.n_users(), std::vector<char>(w.n_items(), 0));
  for (const auto& it : data.interactions) seen[it.user][it.item] = 1;
  Rng rng = Rng::stream(seed, "unbiased_measurements");
  for (int u = 0; u < w.n_users(); ++u) {
    std::vector<int> candidates;
    for (int i : w.true_positives[u])
      if (!seen[u][i]) candidates.push_back(i);
    rng.shuffle(candidates);
    const int take = std::min<int>(per_user, static_cast<int>(candidates.size()));
    for (int t = 0; t < take; ++t)
      data.interactions.push_back({u, candidates[t], 1.0, rounds + 1 + t});
  }
}

// Converts implicit observations to a 1–5 rating log: positives rate 4–5,
// negatives 1–3, uniformly.
inline Dataset to_rating_log(const Dataset& implicit_data, std::uint64_t seed) {
  Dataset out = implicit_data;
  out.feedback_kind = FeedbackKind::Explicit;
  Rng rng = Rng::stream(seed, "ratings");
  for (auto& it : out.interactions) {
    if (it.value == 1.0)
      it.value = 4.0 + static_cast<double>(rng.uniform_int(2));
    else
      it.value = 1.0 + static_cast<double>(rng.uniform_int(3));
  }
  return out;
}

// A 290-user x 300-item confounded rating log with exactly 24 ratings per
// user (6960 total): 22 exposure-driven rows from a two-round feedback
// loop plus 2 unconfounded positive measurements that land in the
// validation/test slots of a temporal leave-one-out split.
struct CoatShapedBenchmark {
  SynthWorld world;
  SynthConfig config;
  Dataset ratings;  // explicit 1..5 values
};

inline CoatShapedBenchmark coat_shaped_benchmark(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_users = 290;
  cfg.n_items = 300;
  cfg.d_true = 8;
  // Moderate confounding: exposure is biased, but observed ratings still
  // carry preference signal, the way self-selected rating logs do.
  cfg.conf_strength = 0.5;
  cfg.exposure_k = 11;
  cfg.rounds = 2;
  cfg.density = 0.05;
  cfg.seed = seed;

  CoatShapedBenchmark b;
  b.config = cfg;
  b.world = generate_world(cfg);
  SimulationResult sim = simulate_exposure(b.world, cfg);
  append_unbiased_measurements(b.world, sim.data, 2, cfg.rounds, seed);
  b.ratings = to_rating_log(sim.data, seed);
  return b;
}

// ---------------------------------------------------------------------------
// Persistence.

inline void save_round_stats(const std::vector<RoundStats>& rounds,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "round,fpr,fnr,positive_rate\n";
  for (const auto& r : rounds)
    out << r.round << ',' << format_double(r.false_positive_rate) << ','
        << format_double(r.false_negative_rate) << ','
        << format_double(r.positive_rate) << '\n';
}

inline void save_world(const SynthWorld& w, const std::filesystem::path& path) {
  json labels = json::array();
  for (const auto& l : w.true_positives) labels.push_back(l);
  json j{{"format", "synth_world"},
         {"n_users", w.n_users()},
         {"n_items", w.n_items()},
         {"d_true", static_cast<int>(w.true_user.cols())},
         {"true_user", matrix_to_json(w.true_user)},
         {"true_item", matrix_to_json(w.true_item)},
         {"conf_user", matrix_to_json(w.conf_user)},
         {"conf_item", matrix_to_json(w.conf_item)},
         {"true_positives", labels}};
  write_json_file(path, j);
}

inline SynthWorld load_world(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  if (j.value("format", "") != "synth_world")
    throw InputError("not a synthetic world file: " + path.string());
  const int nu = j.at("n_users").get<int>();
  const int ni = j.at("n_items").get<int>();
  const int d = j.at("d_true").get<int>();
  SynthWorld w;
  w.true_user = matrix_from_json(j.at("true_user"), nu, d);
  w.true_item = matrix_from_json(j.at("true_item"), ni, d);
  w.conf_user = matrix_from_json(j.at("conf_user"), nu, d);
  w.conf_item = matrix_from_json(j.at("conf_item"), ni, d);
  w.true_positives.clear();
  for (const auto& l : j.at("true_positives"))
    w.true_positives.push_back(l.get<std::vector<int>>());
  if (static_cast<int>(w.true_positives.size()) != nu)
    throw InputError("world file label table has wrong row count");
  return w;
}

}  // namespace slfr
