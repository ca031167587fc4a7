#pragma once

#include <cmath>
#include <filesystem>
#include <iostream>
#include <vector>

#include "slfr/adam.hpp"
#include "slfr/data.hpp"
#include "slfr/io.hpp"
#include "slfr/model.hpp"
#include "slfr/rng.hpp"
#include "slfr/types.hpp"

namespace slfr {

constexpr double kLogvarMin = -20.0;
constexpr double kLogvarMax = 20.0;

// One-hidden-layer tanh encoder/decoder with a diagonal-Gaussian latent
// and Bernoulli (logit) outputs. Small enough to differentiate by hand.
struct VaeBlock {
  Matrixd w_enc;     // hidden x input
  Vectord b_enc;     // hidden
  Matrixd w_mu;      // d_z x hidden
  Vectord b_mu;      // d_z
  Matrixd w_logvar;  // d_z x hidden
  Vectord b_logvar;  // d_z
  Matrixd w_dec;     // hidden x d_z
  Vectord b_dec;     // hidden
  Matrixd w_out;     // input x hidden
  Vectord b_out;     // input

  int input_dim() const { return static_cast<int>(w_enc.cols()); }
  int hidden_dim() const { return static_cast<int>(w_enc.rows()); }
  int latent_dim() const { return static_cast<int>(w_mu.rows()); }
};

inline VaeBlock init_vae(int input, int hidden, int d_z, std::uint64_t seed) {
  if (input < 1 || hidden < 1 || d_z < 1)
    throw InputError("init_vae requires positive dimensions");
  VaeBlock b;
  auto fill = [&](Matrixd& w, int rows, int cols, const char* name) {
    Rng rng = Rng::stream(seed, name);
    const double sd = 1.0 / std::sqrt(static_cast<double>(cols));
    w.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = rng.normal(0.0, sd);
  };
  fill(b.w_enc, hidden, input, "vae_init_enc");
  fill(b.w_mu, d_z, hidden, "vae_init_mu");
  fill(b.w_logvar, d_z, hidden, "vae_init_logvar");
  fill(b.w_dec, hidden, d_z, "vae_init_dec");
  fill(b.w_out, input, hidden, "vae_init_out");
  b.b_enc = Vectord::Zero(hidden);
  b.b_mu = Vectord::Zero(d_z);
  b.b_logvar = Vectord::Zero(d_z);
  b.b_dec = Vectord::Zero(hidden);
  b.b_out = Vectord::Zero(input);
  return b;
}

struct LatentGaussian {
  Vectord mu;
  Vectord logvar;
};

struct LatentBatch {
  Matrixd mu;      // M x d_z
  Matrixd logvar;  // M x d_z, clamped
};

inline LatentBatch encode_batch(const VaeBlock& b, const Matrixd& x) {
  if (x.cols() != b.input_dim())
    throw InputError("encode: input has " + std::to_string(x.cols()) +
                     " columns, block expects " + std::to_string(b.input_dim()));
  Matrixd h = ((x * b.w_enc.transpose()).rowwise() + b.b_enc.transpose())
                  .array().tanh().matrix();
  LatentBatch out;
  out.mu = (h * b.w_mu.transpose()).rowwise() + b.b_mu.transpose();
  out.logvar = ((h * b.w_logvar.transpose()).rowwise() + b.b_logvar.transpose())
                   .array().min(kLogvarMax).max(kLogvarMin).matrix();
  return out;
}

inline LatentGaussian encode(const VaeBlock& b, const Vectord& x) {
  const LatentBatch lb = encode_batch(b, x.transpose());
  return {lb.mu.row(0).transpose(), lb.logvar.row(0).transpose()};
}

inline Matrixd reparameterize(const LatentBatch& g, const Matrixd& eps) {
  if (eps.rows() != g.mu.rows() || eps.cols() != g.mu.cols())
    throw InputError("reparameterize: eps shape mismatch");
  return (g.mu.array() + (g.logvar.array() / 2.0).exp() * eps.array()).matrix();
}

inline Vectord reparameterize(const LatentGaussian& g, const Vectord& eps) {
  if (eps.size() != g.mu.size())
    throw InputError("reparameterize: eps length mismatch");
  return (g.mu.array() + (g.logvar.array() / 2.0).exp() * eps.array()).matrix();
}

// Negative Bernoulli log-likelihood of binary x under the given logits.
inline double reconstruction_loss(const Vectord& logits, const Vectord& x) {
  if (logits.size() != x.size())
    throw InputError("reconstruction_loss: length mismatch");
  double total = 0.0;
  for (Eigen::Index j = 0; j < logits.size(); ++j)
    total += softplus(logits[j]) - x[j] * logits[j];
  return total;
}

struct KlTerms {
  double index_code_mi = 0.0;
  double total_correlation = 0.0;
  double dimension_kl = 0.0;
};

// alpha re-weights only the datum-identity mutual-information term.
inline double kl_alpha(const KlTerms& t, double alpha) {
  if (alpha < 0.0) throw InputError("kl_alpha: alpha must be >= 0");
  return alpha * t.index_code_mi + t.total_correlation + t.dimension_kl;
}

namespace detail {

inline Vectord rowwise_lse_weighted(const Matrixd& a, double logw_diag,
                                    double logw_off) {
  Matrixd t = a;
  t.array() += logw_off;
  t.diagonal().array() += logw_diag - logw_off;
  const Vectord mx = t.rowwise().maxCoeff();
  return (mx.array() +
          (t.colwise() - mx).array().exp().rowwise().sum().log()).matrix();
}

// Log-density table for one latent dimension: entry (i, j) is
// log N(z_ik; mu_jk, var_jk).
inline Matrixd log_density_dim(const Vectord& zk, const Vectord& muk,
                               const Vectord& lvk) {
  static const double log2pi = std::log(8.0 * std::atan(1.0));
  const Eigen::Index m = zk.size();
  const Matrixd diff = zk.replicate(1, m) - muk.transpose().replicate(m, 1);
  Eigen::ArrayXXd b =
      diff.array().square().rowwise() * (-lvk).array().exp().transpose();
  b.rowwise() += (log2pi + lvk.array()).transpose();
  return (-0.5 * b).matrix();
}

struct KlWork {
  Matrixd joint_logdensity;   // M x M: log q(z_i | x_j)
  Matrixd dim_log_marginal;   // M x d_z: estimated log q_k(z_ik)
  Vectord log_marginal;       // M: estimated log q(z_i)
  double logw_diag = 0.0;
  double logw_off = 0.0;
  KlTerms terms;
};

// Minibatch estimate of the aggregate posterior log-density with
// stratified mixture weights: the held-out datum's own component carries
// weight 1/n_total, the other M-1 sampled components share the rest. The
// weights sum to one, and when the batch is the whole dataset the estimate
// is the exact mixture.
inline KlWork kl_forward(const Matrixd& mu, const Matrixd& logvar,
                         const Matrixd& z, long long n_total) {
  const Eigen::Index m = mu.rows();
  const Eigen::Index dz = mu.cols();
  if (m < 2)
    throw InputError("kl_decompose: batch size " + std::to_string(m) +
                     " < 2, aggregate posterior undefined");
  if (n_total < m)
    throw InputError("kl_decompose: n_total " + std::to_string(n_total) +
                     " smaller than batch size " + std::to_string(m));
  if (logvar.rows() != m || logvar.cols() != dz || z.rows() != m || z.cols() != dz)
    throw InputError("kl_decompose: shape mismatch between mu/logvar/z");

  KlWork w;
  const double n = static_cast<double>(n_total);
  w.logw_diag = -std::log(n);
  w.logw_off = std::log(n - 1.0) - std::log(n) - std::log(static_cast<double>(m - 1));

  w.joint_logdensity = Matrixd::Zero(m, m);
  w.dim_log_marginal.resize(m, dz);
  for (Eigen::Index k = 0; k < dz; ++k) {
    const Matrixd bk = log_density_dim(z.col(k), mu.col(k), logvar.col(k));
    w.joint_logdensity += bk;
    w.dim_log_marginal.col(k) = rowwise_lse_weighted(bk, w.logw_diag, w.logw_off);
  }
  w.log_marginal = rowwise_lse_weighted(w.joint_logdensity, w.logw_diag, w.logw_off);

  w.terms.index_code_mi =
      (w.joint_logdensity.diagonal() - w.log_marginal).mean();
  w.terms.total_correlation =
      (w.log_marginal - w.dim_log_marginal.rowwise().sum()).mean();
  w.terms.dimension_kl =
      0.5 * (mu.array().square() + logvar.array().exp() - logvar.array() - 1.0)
                .rowwise().sum().mean();
  return w;
}

// Accumulates d kl_alpha / d{mu, logvar, z} into the given matrices.
inline void kl_backward(const Matrixd& mu, const Matrixd& logvar,
                        const Matrixd& z, const KlWork& w, double alpha,
                        Matrixd& dmu, Matrixd& dlv, Matrixd& dz_grad) {
  const Eigen::Index m = mu.rows();
  const Eigen::Index dz = mu.cols();
  const double inv_m = 1.0 / static_cast<double>(m);

  // Softmax responsibilities of component j for sample i under the
  // weighted mixture; gradient of the mi+tc pair w.r.t. the joint
  // log-density table is (alpha·I + (1−alpha)·S)/M.
  Matrixd resp = w.joint_logdensity;
  resp.array() += w.logw_off;
  resp.diagonal().array() += w.logw_diag - w.logw_off;
  resp.colwise() -= w.log_marginal;
  resp = resp.array().exp().matrix();
  Matrixd g_joint = ((1.0 - alpha) * inv_m) * resp;
  g_joint.diagonal().array() += alpha * inv_m;

  for (Eigen::Index k = 0; k < dz; ++k) {
    const Vectord zk = z.col(k);
    const Vectord muk = mu.col(k);
    const Vectord lvk = logvar.col(k);
    const Matrixd bk = log_density_dim(zk, muk, lvk);

    Matrixd respk = bk;
    respk.array() += w.logw_off;
    respk.diagonal().array() += w.logw_diag - w.logw_off;
    respk.colwise() -= w.dim_log_marginal.col(k);
    respk = respk.array().exp().matrix();

    // Total coefficient on the per-dimension log-density entries.
    const Matrixd coeff = g_joint - inv_m * respk;

    const Matrixd diff = zk.replicate(1, m) - muk.transpose().replicate(m, 1);
    const Eigen::ArrayXd vinv = (-lvk).array().exp();
    const Matrixd scaled =
        ((coeff.array() * diff.array()).rowwise() * vinv.transpose()).matrix();
    dz_grad.col(k) -= scaled.rowwise().sum();
    dmu.col(k) += scaled.colwise().sum().transpose();
    const Matrixd lv_term =
        (coeff.array() *
         (0.5 * (diff.array().square().rowwise() * vinv.transpose()) - 0.5))
            .matrix();
    dlv.col(k) += lv_term.colwise().sum().transpose();
  }

  // Closed-form per-sample KL to the prior.
  dmu += inv_m * mu;
  dlv.array() += 0.5 * inv_m * (logvar.array().exp() - 1.0);
}

}  // namespace detail

inline KlTerms kl_decompose(const Matrixd& mu, const Matrixd& logvar,
                            const Matrixd& z, long long n_total) {
  return detail::kl_forward(mu, logvar, z, n_total).terms;
}

inline KlTerms kl_decompose(const LatentBatch& batch, const Matrixd& z,
                            long long n_total) {
  return kl_decompose(batch.mu, batch.logvar, z, n_total);
}

inline KlTerms kl_decompose(const std::vector<LatentGaussian>& batch,
                            const std::vector<Vectord>& z_samples,
                            long long n_total) {
  if (batch.size() != z_samples.size())
    throw InputError("kl_decompose: one z sample per posterior required");
  if (batch.empty()) throw InputError("kl_decompose: empty batch");
  const Eigen::Index m = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index dz = batch[0].mu.size();
  Matrixd mu(m, dz), lv(m, dz), z(m, dz);
  for (Eigen::Index i = 0; i < m; ++i) {
    mu.row(i) = batch[i].mu.transpose();
    lv.row(i) = batch[i].logvar.transpose();
    z.row(i) = z_samples[i].transpose();
  }
  return kl_decompose(mu, lv, z, n_total);
}

struct VaeGradients {
  Matrixd w_enc, w_mu, w_logvar, w_dec, w_out;
  Vectord b_enc, b_mu, b_logvar, b_dec, b_out;
};

struct VaeLossResult {
  double loss = 0.0;
  double reconstruction = 0.0;
  KlTerms kl;
};

namespace detail {

struct VaeForward {
  Matrixd h;       // encoder hidden activations
  LatentBatch latent;
  Eigen::ArrayXXd clamp_mask;
  Matrixd z;
  Matrixd h_dec;
  Matrixd logits;
  KlWork kl;
  VaeLossResult result;
};

inline VaeForward vae_forward(const VaeBlock& b, const Matrixd& x, double alpha,
                              const Matrixd& eps, long long n_total) {
  if (x.rows() < 1) throw InputError("vae_loss: empty batch");
  if (x.cols() != b.input_dim())
    throw InputError("vae_loss: input width mismatch");
  VaeForward f;
  const Eigen::Index m = x.rows();
  f.h = ((x * b.w_enc.transpose()).rowwise() + b.b_enc.transpose())
            .array().tanh().matrix();
  f.latent.mu = (f.h * b.w_mu.transpose()).rowwise() + b.b_mu.transpose();
  const Matrixd lv_raw =
      (f.h * b.w_logvar.transpose()).rowwise() + b.b_logvar.transpose();
  f.latent.logvar =
      lv_raw.array().min(kLogvarMax).max(kLogvarMin).matrix();
  f.clamp_mask = (lv_raw.array() > kLogvarMin && lv_raw.array() < kLogvarMax)
                     .cast<double>();
  f.z = reparameterize(f.latent, eps);
  f.h_dec = ((f.z * b.w_dec.transpose()).rowwise() + b.b_dec.transpose())
                .array().tanh().matrix();
  f.logits = (f.h_dec * b.w_out.transpose()).rowwise() + b.b_out.transpose();

  const Eigen::ArrayXXd sp =
      f.logits.array().unaryExpr([](double v) { return softplus(v); });
  f.result.reconstruction =
      (sp - x.array() * f.logits.array()).sum() / static_cast<double>(m);
  f.kl = kl_forward(f.latent.mu, f.latent.logvar, f.z, n_total);
  f.result.kl = f.kl.terms;
  f.result.loss = f.result.reconstruction + kl_alpha(f.kl.terms, alpha);
  return f;
}

}  // namespace detail

// Mean reconstruction loss plus the alpha-weighted KL decomposition, with
// the noise draw supplied explicitly so callers control determinism.
inline double vae_loss(const VaeBlock& b, const Matrixd& x, double alpha,
                       const Matrixd& eps, long long n_total) {
  return detail::vae_forward(b, x, alpha, eps, n_total).result.loss;
}

inline VaeLossResult vae_loss_grad(const VaeBlock& b, const Matrixd& x,
                                   double alpha, const Matrixd& eps,
                                   long long n_total, VaeGradients& g) {
  const detail::VaeForward f = detail::vae_forward(b, x, alpha, eps, n_total);
  const Eigen::Index m = x.rows();
  const double inv_m = 1.0 / static_cast<double>(m);

  const Matrixd dlogits =
      ((f.logits.array().unaryExpr([](double v) { return sigmoid(v); }) -
        x.array()) * inv_m).matrix();
  g.w_out = dlogits.transpose() * f.h_dec;
  g.b_out = dlogits.colwise().sum().transpose();

  const Matrixd dh_dec_pre =
      ((dlogits * b.w_out).array() * (1.0 - f.h_dec.array().square())).matrix();
  g.w_dec = dh_dec_pre.transpose() * f.z;
  g.b_dec = dh_dec_pre.colwise().sum().transpose();

  Matrixd dz = dh_dec_pre * b.w_dec;
  Matrixd dmu = Matrixd::Zero(m, b.latent_dim());
  Matrixd dlv = Matrixd::Zero(m, b.latent_dim());
  detail::kl_backward(f.latent.mu, f.latent.logvar, f.z, f.kl, alpha, dmu, dlv, dz);

  // z = mu + exp(logvar/2) ⊙ eps
  dmu += dz;
  const Matrixd sd = (f.latent.logvar.array() / 2.0).exp().matrix();
  dlv.array() += dz.array() * 0.5 * sd.array() * eps.array();
  dlv.array() *= f.clamp_mask;  // clamped coordinates pass no gradient

  g.w_mu = dmu.transpose() * f.h;
  g.b_mu = dmu.colwise().sum().transpose();
  g.w_logvar = dlv.transpose() * f.h;
  g.b_logvar = dlv.colwise().sum().transpose();

  const Matrixd dh_pre =
      ((dmu * b.w_mu + dlv * b.w_logvar).array() * (1.0 - f.h.array().square()))
          .matrix();
  g.w_enc = dh_pre.transpose() * x;
  g.b_enc = dh_pre.colwise().sum().transpose();
  return f.result;
}

// Re-estimates the KL terms of a trained block over a full data matrix
// with a fixed noise stream (used to compare runs, e.g. across alpha).
inline KlTerms estimate_kl_terms(const VaeBlock& b, const Matrixd& x,
                                 std::uint64_t seed) {
  const LatentBatch latent = encode_batch(b, x);
  Rng rng = Rng::stream(seed, "kl_estimate");
  Matrixd eps(latent.mu.rows(), latent.mu.cols());
  for (Eigen::Index r = 0; r < eps.rows(); ++r)
    for (Eigen::Index c = 0; c < eps.cols(); ++c) eps(r, c) = rng.normal();
  return kl_decompose(latent, reparameterize(latent, eps), x.rows());
}

// ---------------------------------------------------------------------------
// Stage-1 pretraining.

struct VaeConfig {
  double alpha = 5.0;
  int d_z = 64;
  int hidden = 200;
  double lr = 1e-3;
  int epochs = 100;
  int batch = 256;
  std::uint64_t seed = 42;
};

struct VaeTrainResult {
  VaeBlock block;
  std::vector<double> epoch_loss;
};

inline VaeTrainResult train_vae(const InteractionMatrix& matrix,
                                const VaeConfig& cfg) {
  const Matrixd& x = matrix.rows;
  if (x.rows() < 2)
    throw InputError("train_vae: need at least 2 data rows, got " +
                     std::to_string(x.rows()));
  if (cfg.epochs < 1 || cfg.batch < 2)
    throw InputError("train_vae: epochs >= 1 and batch >= 2 required");

  VaeTrainResult res;
  res.block = init_vae(static_cast<int>(x.cols()), cfg.hidden, cfg.d_z, cfg.seed);
  VaeBlock& b = res.block;

  Adam<Matrixd> opt_w_enc(b.w_enc, {cfg.lr}), opt_w_mu(b.w_mu, {cfg.lr}),
      opt_w_lv(b.w_logvar, {cfg.lr}), opt_w_dec(b.w_dec, {cfg.lr}),
      opt_w_out(b.w_out, {cfg.lr});
  Adam<Vectord> opt_b_enc(b.b_enc, {cfg.lr}), opt_b_mu(b.b_mu, {cfg.lr}),
      opt_b_lv(b.b_logvar, {cfg.lr}), opt_b_dec(b.b_dec, {cfg.lr}),
      opt_b_out(b.b_out, {cfg.lr});

  const Eigen::Index n = x.rows();
  std::vector<int> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = static_cast<int>(i);

  long long step = 0;
  VaeGradients g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = Rng::stream(cfg.seed, "vae_shuffle", epoch);
    shuffle_rng.shuffle(order);
    Rng eps_rng = Rng::stream(cfg.seed, "vae_eps", epoch);

    double epoch_loss = 0.0;
    Eigen::Index start = 0;
    while (start < n) {
      Eigen::Index bs = std::min<Eigen::Index>(cfg.batch, n - start);
      // A trailing singleton batch cannot support the aggregate-posterior
      // estimate; fold it into this batch instead.
      if (n - start - bs == 1) bs += 1;
      Matrixd xb(bs, x.cols());
      for (Eigen::Index r = 0; r < bs; ++r) xb.row(r) = x.row(order[start + r]);
      Matrixd eps(bs, cfg.d_z);
      for (Eigen::Index r = 0; r < bs; ++r)
        for (int c = 0; c < cfg.d_z; ++c) eps(r, c) = eps_rng.normal();

      const VaeLossResult batch_result = vae_loss_grad(b, xb, cfg.alpha, eps, n, g);
      if (!std::isfinite(batch_result.loss))
        throw NumericalError("train_vae: non-finite loss at epoch " +
                             std::to_string(epoch) + ", step " +
                             std::to_string(step) + " (recon=" +
                             format_double(batch_result.reconstruction) + ")");
      ++step;
      opt_w_enc.step(b.w_enc, g.w_enc, step);
      opt_b_enc.step(b.b_enc, g.b_enc, step);
      opt_w_mu.step(b.w_mu, g.w_mu, step);
      opt_b_mu.step(b.b_mu, g.b_mu, step);
      opt_w_lv.step(b.w_logvar, g.w_logvar, step);
      opt_b_lv.step(b.b_logvar, g.b_logvar, step);
      opt_w_dec.step(b.w_dec, g.w_dec, step);
      opt_b_dec.step(b.b_dec, g.b_dec, step);
      opt_w_out.step(b.w_out, g.w_out, step);
      opt_b_out.step(b.b_out, g.b_out, step);

      epoch_loss += batch_result.loss * static_cast<double>(bs);
      start += bs;
    }
    res.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
    if ((epoch + 1) % 20 == 0 || epoch + 1 == cfg.epochs)
      std::clog << "vae epoch " << (epoch + 1) << "/" << cfg.epochs
                << " loss " << res.epoch_loss.back() << "\n";
  }
  return res;
}

// Posterior means of every user row and every item row; deterministic, no
// sampling involved.
inline ConfounderReps extract_confounders(const VaeBlock& user_block,
                                          const VaeBlock& item_block,
                                          const InteractionMatrix& by_user,
                                          const InteractionMatrix& by_item) {
  if (by_user.axis != MatrixAxis::ByUser || by_item.axis != MatrixAxis::ByItem)
    throw InputError("extract_confounders: matrices must be (by_user, by_item)");
  if (user_block.latent_dim() != item_block.latent_dim())
    throw InputError("extract_confounders: latent dims differ between blocks");
  ConfounderReps reps;
  reps.user = encode_batch(user_block, by_user.rows).mu;
  reps.item = encode_batch(item_block, by_item.rows).mu;
  return reps;
}

// ---------------------------------------------------------------------------
// Checkpoints.

inline void save_vae(const VaeBlock& b, const std::filesystem::path& path,
                     double alpha, std::uint64_t seed) {
  json j{{"format", "vae_checkpoint"},
         {"input", b.input_dim()},
         {"hidden", b.hidden_dim()},
         {"d_z", b.latent_dim()},
         {"alpha", alpha},
         {"seed", seed},
         {"w_enc", matrix_to_json(b.w_enc)},
         {"b_enc", vector_to_json(b.b_enc)},
         {"w_mu", matrix_to_json(b.w_mu)},
         {"b_mu", vector_to_json(b.b_mu)},
         {"w_logvar", matrix_to_json(b.w_logvar)},
         {"b_logvar", vector_to_json(b.b_logvar)},
         {"w_dec", matrix_to_json(b.w_dec)},
         {"b_dec", vector_to_json(b.b_dec)},
         {"w_out", matrix_to_json(b.w_out)},
         {"b_out", vector_to_json(b.b_out)}};
  write_json_file(path, j);
}

struct VaeCheckpoint {
  VaeBlock block;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

inline VaeCheckpoint load_vae(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  if (j.value("format", "") != "vae_checkpoint")
    throw InputError("not a vae checkpoint: " + path.string());
  const int input = j.at("input").get<int>();
  const int hidden = j.at("hidden").get<int>();
  const int d_z = j.at("d_z").get<int>();
  VaeCheckpoint c;
  c.alpha = j.at("alpha").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.block.w_enc = matrix_from_json(j.at("w_enc"), hidden, input);
  c.block.b_enc = vector_from_json(j.at("b_enc"), hidden);
  c.block.w_mu = matrix_from_json(j.at("w_mu"), d_z, hidden);
  c.block.b_mu = vector_from_json(j.at("b_mu"), d_z);
  c.block.w_logvar = matrix_from_json(j.at("w_logvar"), d_z, hidden);
  c.block.b_logvar = vector_from_json(j.at("b_logvar"), d_z);
  c.block.w_dec = matrix_from_json(j.at("w_dec"), hidden, d_z);
  c.block.b_dec = vector_from_json(j.at("b_dec"), hidden);
  c.block.w_out = matrix_from_json(j.at("w_out"), input, hidden);
  c.block.b_out = vector_from_json(j.at("b_out"), input);
  return c;
}

}  // namespace slfr
