#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <vector>

#include "slfr/adam.hpp"
#include "slfr/data.hpp"
#include "slfr/eval.hpp"
#include "slfr/model.hpp"
#include "slfr/rng.hpp"
#include "slfr/types.hpp"

namespace slfr {

struct TrainConfig {
  double gamma = 0.0;
  double lr = 1e-3;
  double l2 = 1e-6;
  int d = 64;
  int epochs = 500;
  int patience = 10;
  int neg_ratio = 4;
  int batch = 1024;
  std::uint64_t seed = 42;
  FeedbackKind feedback_kind = FeedbackKind::Implicit;
  BiasComposition composition = BiasComposition::Standard;
  bool full_l2 = false;   // decay every row instead of batch-touched rows
  double ips_eta = 0.0;   // > 0 enables inverse-propensity reweighting
};

namespace detail {

inline std::vector<int> distinct_sorted(const std::vector<Triple>& batch,
                                        bool users) {
  std::vector<int> ids;
  ids.reserve(batch.size());
  for (const auto& t : batch) ids.push_back(users ? t.user : t.item);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

// Per-sample fit criterion and its derivative in the raw composed score.
// Implicit: Bernoulli cross-entropy through a sigmoid; explicit: squared
// error with identity link.
inline double fit_loss(double raw, double y, FeedbackKind kind, double& d_raw) {
  if (kind == FeedbackKind::Implicit) {
    d_raw = sigmoid(raw) - y;
    return softplus(raw) - y * raw;
  }
  d_raw = 2.0 * (raw - y);
  const double e = raw - y;
  return e * e;
}

inline double l2_penalty(const MfModel& m, const std::vector<int>& users,
                         const std::vector<int>& items, double l2) {
  if (l2 == 0.0) return 0.0;
  double s = 0.0;
  for (int u : users) s += m.user.row(u).squaredNorm();
  for (int i : items) s += m.item.row(i).squaredNorm();
  return l2 * s;
}

}  // namespace detail

// Mean fit criterion over the batch plus l2 on the distinct embedding rows
// the batch touches. Optional per-sample weights (e.g. inverse propensity).
inline double loss_normal(const MfModel& m, const std::vector<Triple>& batch,
                          FeedbackKind kind, double l2 = 0.0,
                          const std::vector<double>* weights = nullptr) {
  if (batch.empty()) throw InputError("loss_normal: empty batch");
  if (weights && weights->size() != batch.size())
    throw InputError("loss_normal: one weight per sample required");
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& t = batch[b];
    if (kind == FeedbackKind::Implicit && t.label != 0.0 && t.label != 1.0)
      throw InputError("loss_normal: implicit labels must be 0/1");
    double unused;
    double l = detail::fit_loss(score(m, t.user, t.item), t.label, kind, unused);
    if (weights) l *= (*weights)[b];
    total += l;
  }
  total /= static_cast<double>(batch.size());
  total += detail::l2_penalty(m, detail::distinct_sorted(batch, true),
                              detail::distinct_sorted(batch, false), l2);
  if (!std::isfinite(total))
    throw NumericalError("loss_normal: non-finite loss");
  return total;
}

// Same criterion applied to the bias-composed score. The confounder
// representations are inputs only — no gradient ever reaches them.
inline double loss_bias(const MfModel& m, const ConfounderReps& reps,
                        const std::vector<Triple>& batch, FeedbackKind kind,
                        BiasComposition comp = BiasComposition::Standard) {
  if (batch.empty()) throw InputError("loss_bias: empty batch");
  if (reps.user.rows() != m.user.rows() || reps.item.rows() != m.item.rows() ||
      reps.user.cols() != m.user.cols() || reps.item.cols() != m.item.cols())
    throw InputError("loss_bias: representation shape does not match model");
  double total = 0.0;
  for (const auto& t : batch) {
    const ScoreBundle s = score_bundle(m, reps, t.user, t.item, kind, comp);
    double unused;
    total += detail::fit_loss(s.score_bias, t.label, kind, unused);
  }
  total /= static_cast<double>(batch.size());
  if (!std::isfinite(total)) throw NumericalError("loss_bias: non-finite loss");
  return total;
}

inline double loss_slfr(const MfModel& m, const ConfounderReps* reps,
                        const std::vector<Triple>& batch, const TrainConfig& cfg,
                        const std::vector<double>* weights = nullptr) {
  if (cfg.gamma < 0.0) throw InputError("loss_slfr: gamma must be >= 0");
  double total = loss_normal(m, batch, cfg.feedback_kind, cfg.l2, weights);
  if (cfg.gamma > 0.0) {
    if (!reps) throw InputError("loss_slfr: gamma > 0 requires representations");
    total += cfg.gamma *
             loss_bias(m, *reps, batch, cfg.feedback_kind, cfg.composition);
  }
  return total;
}

struct BatchLoss {
  double normal = 0.0;
  double bias = 0.0;
  double total = 0.0;
};

// Loss and gradients of loss_slfr for one batch. Gradient matrices must be
// full-sized and zero on the touched rows; the touched-row lists come back
// for the sparse optimizer step and for re-zeroing.
inline BatchLoss slfr_batch_grad(const MfModel& m, const ConfounderReps* reps,
                                 const std::vector<Triple>& batch,
                                 const TrainConfig& cfg, Matrixd& d_user,
                                 Matrixd& d_item, std::vector<int>& touched_users,
                                 std::vector<int>& touched_items,
                                 const std::vector<double>* weights = nullptr) {
  if (batch.empty()) throw InputError("slfr_batch_grad: empty batch");
  if (cfg.gamma > 0.0 && !reps)
    throw InputError("slfr_batch_grad: gamma > 0 requires representations");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const FeedbackKind kind = cfg.feedback_kind;

  BatchLoss out;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& t = batch[b];
    const double w = weights ? (*weights)[b] : 1.0;
    const double s = score(m, t.user, t.item);

    double d_raw;
    double l = detail::fit_loss(s, t.label, kind, d_raw);
    out.normal += w * l;
    const double c_normal = w * d_raw * inv_b;
    d_user.row(t.user) += c_normal * m.item.row(t.item);
    d_item.row(t.item) += c_normal * m.user.row(t.user);

    if (cfg.gamma > 0.0) {
      const double bias_u = reps->user.row(t.user).dot(m.item.row(t.item));
      const double bias_i = reps->item.row(t.item).dot(m.user.row(t.user));
      const double composed =
          compose_bias(s, bias_u, bias_i, kind, cfg.composition);
      double d_comp;
      out.bias += detail::fit_loss(composed, t.label, kind, d_comp);
      const double c_bias = cfg.gamma * d_comp * inv_b;
      if (kind == FeedbackKind::Implicit &&
          cfg.composition == BiasComposition::Standard) {
        // composed = s · bias_u · bias_i with s = w_u·v_i, bias_u = r_u·v_i,
        // bias_i = r_i·w_u
        d_user.row(t.user) +=
            c_bias * (bias_u * bias_i * m.item.row(t.item) +
                      s * bias_u * reps->item.row(t.item));
        d_item.row(t.item) +=
            c_bias * (bias_u * bias_i * m.user.row(t.user) +
                      s * bias_i * reps->user.row(t.user));
      } else {
        // composed = s + bias_u + bias_i
        d_user.row(t.user) +=
            c_bias * (m.item.row(t.item) + reps->item.row(t.item));
        d_item.row(t.item) +=
            c_bias * (m.user.row(t.user) + reps->user.row(t.user));
      }
    }
  }
  out.normal *= inv_b;
  out.bias *= inv_b;

  touched_users = detail::distinct_sorted(batch, true);
  touched_items = detail::distinct_sorted(batch, false);
  if (cfg.full_l2) {
    touched_users.resize(m.n_users());
    touched_items.resize(m.n_items());
    for (int u = 0; u < m.n_users(); ++u) touched_users[u] = u;
    for (int i = 0; i < m.n_items(); ++i) touched_items[i] = i;
  }
  if (cfg.l2 > 0.0) {
    double reg = 0.0;
    for (int u : touched_users) {
      reg += m.user.row(u).squaredNorm();
      d_user.row(u) += 2.0 * cfg.l2 * m.user.row(u);
    }
    for (int i : touched_items) {
      reg += m.item.row(i).squaredNorm();
      d_item.row(i) += 2.0 * cfg.l2 * m.item.row(i);
    }
    out.normal += cfg.l2 * reg;
  }
  out.total = out.normal + cfg.gamma * out.bias;
  return out;
}

// ---------------------------------------------------------------------------
// Inverse propensity weights (popularity-power propensity model).

inline Vectord item_popularity(const Split& s) {
  // Add-one smoothing keeps zero-interaction items at a defined propensity.
  Vectord pop = Vectord::Ones(s.train.n_items);
  for (const auto& it : s.train.interactions)
    if (is_positive(it, s.train.feedback_kind)) pop[it.item] += 1.0;
  return pop;
}

inline std::vector<double> ips_reweight(const std::vector<Triple>& batch,
                                        const Vectord& item_popularity,
                                        double eta) {
  if (item_popularity.size() == 0 || item_popularity.minCoeff() < 1.0)
    throw InputError("ips_reweight: popularity counts must be >= 1 (smoothed)");
  const double max_pop = item_popularity.maxCoeff();
  std::vector<double> w(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double p = item_popularity[batch[b].item] / max_pop;
    w[b] = std::clamp(std::pow(p, -eta), 1.0, 100.0);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

struct GradCoord {
  double* value = nullptr;
  double analytic = 0.0;
};

inline void append_coords(std::vector<GradCoord>& out, Matrixd& param,
                          const Matrixd& grad) {
  for (Eigen::Index r = 0; r < param.rows(); ++r)
    for (Eigen::Index c = 0; c < param.cols(); ++c)
      out.push_back({&param(r, c), grad(r, c)});
}

inline void append_coords(std::vector<GradCoord>& out, Vectord& param,
                          const Vectord& grad) {
  for (Eigen::Index r = 0; r < param.rows(); ++r)
    out.push_back({&param(r), grad(r)});
}

// Central finite differences on a random subset of at least `min_coords`
// coordinates; returns the worst guarded relative error.
inline double gradient_check(const std::function<double()>& loss,
                             std::vector<GradCoord>& coords,
                             std::size_t min_coords, std::uint64_t seed,
                             double step = 1e-4) {
  if (coords.empty()) throw InputError("gradient_check: no coordinates");
  std::vector<std::size_t> idx(coords.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng = Rng::stream(seed, "gradient_check");
  rng.shuffle(idx);
  const std::size_t n = std::min(coords.size(), std::max<std::size_t>(min_coords, 1));

  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    GradCoord& c = coords[idx[j]];
    const double saved = *c.value;
    *c.value = saved + step;
    const double up = loss();
    *c.value = saved - step;
    const double down = loss();
    *c.value = saved;
    const double fd = (up - down) / (2.0 * step);
    const double rel =
        std::abs(fd - c.analytic) / std::max(std::abs(fd) + std::abs(c.analytic), 1e-2);
    worst = std::max(worst, rel);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Stage-2 training loop.

struct TrainLogRow {
  int epoch = 0;  // 1-based
  double loss_normal = 0.0;
  double loss_bias = 0.0;
  double loss_total = 0.0;
  double valid_recall10 = 0.0;
  double valid_ndcg10 = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  MfModel model;  // best-validation checkpoint
  std::vector<TrainLogRow> log;
  bool diverged = false;
  int best_epoch = 0;  // 1-based; 0 when no epoch completed
  double best_valid_ndcg10 = 0.0;
};

inline void save_train_log(const std::vector<TrainLogRow>& log,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "epoch,loss_normal,loss_bias,loss_total,valid_recall@10,valid_ndcg@10,seconds\n";
  for (const auto& r : log)
    out << r.epoch << ',' << format_double(r.loss_normal) << ','
        << format_double(r.loss_bias) << ',' << format_double(r.loss_total) << ','
        << format_double(r.valid_recall10) << ',' << format_double(r.valid_ndcg10)
        << ',' << format_double(r.seconds) << '\n';
}

// Minibatch Adam on loss_slfr with early stopping on validation NDCG@10.
// Divergence (non-finite batch loss) stops training and returns the best
// checkpoint seen, flagged; it never throws away completed work.
inline TrainResult train_slfr(const Split& split, const ConfounderReps* reps,
                              const TrainConfig& cfg) {
  if (cfg.lr <= 0.0) throw InputError("train_slfr: lr must be positive");
  if (cfg.gamma < 0.0) throw InputError("train_slfr: gamma must be >= 0");
  if (cfg.epochs < 1 || cfg.epochs > 500)
    throw InputError("train_slfr: epochs must be in [1, 500]");
  if (cfg.patience < 1) throw InputError("train_slfr: patience must be >= 1");
  if (cfg.batch < 1) throw InputError("train_slfr: batch must be >= 1");
  if (cfg.gamma > 0.0) {
    if (!reps) throw InputError("train_slfr: gamma > 0 requires representations");
    if (reps->user.rows() != split.train.n_users ||
        reps->item.rows() != split.train.n_items)
      throw InputError("train_slfr: representation rows do not match split");
    if (reps->user.cols() != cfg.d || reps->item.cols() != cfg.d)
      throw InputError("train_slfr: representation dim " +
                       std::to_string(reps->user.cols()) + " != d " +
                       std::to_string(cfg.d));
  }

  const int n_users = split.train.n_users;
  const int n_items = split.train.n_items;
  MfModel model = init_mf(n_users, n_items, cfg.d, cfg.seed);

  AdamSparseRows opt_user(n_users, cfg.d, {cfg.lr});
  AdamSparseRows opt_item(n_items, cfg.d, {cfg.lr});
  Matrixd d_user = Matrixd::Zero(n_users, cfg.d);
  Matrixd d_item = Matrixd::Zero(n_items, cfg.d);

  // Implicit feedback pairs every train positive with sampled negatives;
  // explicit feedback consumes the observed ratings directly.
  const bool implicit = cfg.feedback_kind == FeedbackKind::Implicit;
  NegativeSampler sampler = implicit
      ? NegativeSampler(split, cfg.neg_ratio, cfg.seed)
      : NegativeSampler(split, 1, cfg.seed);  // unused for explicit
  std::vector<Triple> explicit_triples;
  if (!implicit) {
    explicit_triples.reserve(split.train.interactions.size());
    for (const auto& it : split.train.interactions)
      explicit_triples.push_back({it.user, it.item, it.value});
    if (explicit_triples.empty())
      throw InputError("train_slfr: no training interactions");
  }

  const Vectord popularity =
      cfg.ips_eta > 0.0 ? item_popularity(split) : Vectord();

  TrainResult res;
  res.model = model;
  res.best_valid_ndcg10 = -1.0;
  long long step = 0;
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Triple> triples;
    if (implicit) {
      triples = sampler.epoch(static_cast<std::uint64_t>(epoch));
    } else {
      triples = explicit_triples;
      Rng rng = Rng::stream(cfg.seed, "epoch_shuffle", epoch);
      rng.shuffle(triples);
    }

    double sum_normal = 0.0, sum_bias = 0.0, sum_total = 0.0;
    std::vector<int> touched_users, touched_items;
    bool diverged = false;
    for (std::size_t start = 0; start < triples.size();
         start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t bs =
          std::min<std::size_t>(cfg.batch, triples.size() - start);
      const std::vector<Triple> batch(triples.begin() + start,
                                      triples.begin() + start + bs);
      std::vector<double> weights;
      if (cfg.ips_eta > 0.0)
        weights = ips_reweight(batch, popularity, cfg.ips_eta);
      const BatchLoss bl = slfr_batch_grad(
          model, reps, batch, cfg, d_user, d_item, touched_users, touched_items,
          cfg.ips_eta > 0.0 ? &weights : nullptr);
      if (!std::isfinite(bl.total)) {
        diverged = true;
        break;
      }
      ++step;
      opt_user.step(model.user, d_user, touched_users, step);
      opt_item.step(model.item, d_item, touched_items, step);
      for (int u : touched_users) d_user.row(u).setZero();
      for (int i : touched_items) d_item.row(i).setZero();
      sum_normal += bl.normal * static_cast<double>(bs);
      sum_bias += bl.bias * static_cast<double>(bs);
      sum_total += bl.total * static_cast<double>(bs);
    }
    if (diverged) {
      res.diverged = true;
      std::clog << "train_slfr: non-finite loss at epoch " << (epoch + 1)
                << "; returning best checkpoint (epoch " << res.best_epoch
                << ")\n";
      break;
    }

    const EvalReport valid = evaluate(model, split, {10}, &split.valid);
    const double n = static_cast<double>(triples.size());
    TrainLogRow row;
    row.epoch = epoch + 1;
    row.loss_normal = sum_normal / n;
    row.loss_bias = sum_bias / n;
    row.loss_total = sum_total / n;
    row.valid_recall10 = valid.recall_at(10);
    row.valid_ndcg10 = valid.ndcg_at(10);
    row.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0).count();
    res.log.push_back(row);

    if (row.valid_ndcg10 > res.best_valid_ndcg10) {
      res.best_valid_ndcg10 = row.valid_ndcg10;
      res.best_epoch = row.epoch;
      res.model = model;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= cfg.patience) break;
    }
  }
  if (res.best_epoch == 0) res.model = model;  // nothing ever validated better
  return res;
}

inline json train_config_to_json(const TrainConfig& cfg) {
  return json{{"gamma", cfg.gamma},
              {"lr", cfg.lr},
              {"l2", cfg.l2},
              {"d", cfg.d},
              {"epochs", cfg.epochs},
              {"patience", cfg.patience},
              {"neg_ratio", cfg.neg_ratio},
              {"batch", cfg.batch},
              {"seed", cfg.seed},
              {"feedback_kind", to_string(cfg.feedback_kind)},
              {"composition", to_string(cfg.composition)},
              {"full_l2", cfg.full_l2},
              {"ips_eta", cfg.ips_eta}};
}

}  // namespace slfr
