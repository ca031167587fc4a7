#pragma once

#include <filesystem>
#include <string>

#include "slfr/io.hpp"
#include "slfr/rng.hpp"
#include "slfr/types.hpp"

namespace slfr {

enum class BiasComposition {
  Standard,       // explicit: add the two bias scores; implicit: multiply
                  // the two bias probabilities
  AdditiveLogit,  // implicit only: add bias logits before the sigmoid
};

inline std::string to_string(BiasComposition c) {
  return c == BiasComposition::Standard ? "standard" : "additive_logit";
}

inline BiasComposition bias_composition_from_string(const std::string& s) {
  if (s == "standard") return BiasComposition::Standard;
  if (s == "additive_logit") return BiasComposition::AdditiveLogit;
  throw InputError("unknown bias composition '" + s +
                   "' (valid: standard, additive_logit)");
}

// Plain matrix factorization without bias terms: one d-dimensional row per
// user and per item, score = dot product.
struct MfModel {
  Matrixd user;  // n_users x d
  Matrixd item;  // n_items x d

  int n_users() const { return static_cast<int>(user.rows()); }
  int n_items() const { return static_cast<int>(item.rows()); }
  int dim() const { return static_cast<int>(user.cols()); }
};

inline MfModel init_mf(int n_users, int n_items, int d, std::uint64_t seed) {
  if (n_users < 1 || n_items < 1 || d < 1)
    throw InputError("init_mf requires positive n_users, n_items, d");
  MfModel m;
  m.user.resize(n_users, d);
  m.item.resize(n_items, d);
  Rng user_rng = Rng::stream(seed, "mf_init_user");
  Rng item_rng = Rng::stream(seed, "mf_init_item");
  for (int r = 0; r < n_users; ++r)
    for (int c = 0; c < d; ++c) m.user(r, c) = user_rng.normal(0.0, 0.01);
  for (int r = 0; r < n_items; ++r)
    for (int c = 0; c < d; ++c) m.item(r, c) = item_rng.normal(0.0, 0.01);
  return m;
}

inline double score(const MfModel& m, int u, int i) {
  return m.user.row(u).dot(m.item.row(i));
}

// Scores one user against every item in a single pass.
inline Vectord score_all(const MfModel& m, int u) {
  return m.item * m.user.row(u).transpose();
}

// Confounder representations extracted from the two pretrained encoders.
// Rows are posterior means; frozen during recommender training.
struct ConfounderReps {
  Matrixd user;  // n_users x d
  Matrixd item;  // n_items x d
};

// How much of the observed score is explained by the user's confounder
// alone: the user's confounder representation against the item embedding.
inline double score_bias_user(const ConfounderReps& reps, const MfModel& m,
                              int u, int i) {
  return reps.user.row(u).dot(m.item.row(i));
}

// Item-side counterpart: item confounder representation against the user
// embedding.
inline double score_bias_item(const ConfounderReps& reps, const MfModel& m,
                              int u, int i) {
  return reps.item.row(i).dot(m.user.row(u));
}

// Combines the base relevance score with the two marginal confounder
// scores into the observed-feedback score. Explicit feedback composes
// additively; implicit multiplies the raw scores (negative factors can
// flip the sign — by design, see the additive_logit alternative which
// adds in logit space instead).
inline double compose_bias(double score, double bias_user, double bias_item,
                           FeedbackKind kind,
                           BiasComposition comp = BiasComposition::Standard) {
  if (comp == BiasComposition::AdditiveLogit) {
    if (kind != FeedbackKind::Implicit)
      throw InputError("additive_logit composition is implicit-only");
    return score + bias_user + bias_item;
  }
  if (kind == FeedbackKind::Explicit) return score + bias_user + bias_item;
  return score * bias_user * bias_item;
}

// Model output on the observation scale: probability for implicit
// feedback, raw score for explicit.
inline double predict(const MfModel& m, int u, int i, FeedbackKind kind) {
  const double s = score(m, u, i);
  return kind == FeedbackKind::Implicit ? sigmoid(s) : s;
}

// All scores for one (u, i) pair in one place.
struct ScoreBundle {
  double score = 0.0;
  double score_bias_u = 0.0;
  double score_bias_i = 0.0;
  double score_bias = 0.0;  // composed observed-feedback score
  FeedbackKind feedback_kind = FeedbackKind::Implicit;
};

inline ScoreBundle score_bundle(const MfModel& m, const ConfounderReps& reps,
                                int u, int i, FeedbackKind kind,
                                BiasComposition comp = BiasComposition::Standard) {
  ScoreBundle b;
  b.feedback_kind = kind;
  b.score = score(m, u, i);
  b.score_bias_u = score_bias_user(reps, m, u, i);
  b.score_bias_i = score_bias_item(reps, m, u, i);
  b.score_bias = compose_bias(b.score, b.score_bias_u, b.score_bias_i, kind, comp);
  return b;
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON with dimensions up front and flat row-major weights.

inline void save_mf(const MfModel& m, const std::filesystem::path& path) {
  json j{{"format", "mf_checkpoint"},
         {"n_users", m.n_users()},
         {"n_items", m.n_items()},
         {"d", m.dim()},
         {"user", matrix_to_json(m.user)},
         {"item", matrix_to_json(m.item)}};
  write_json_file(path, j);
}

inline MfModel load_mf(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  if (j.value("format", "") != "mf_checkpoint")
    throw InputError("not an mf checkpoint: " + path.string());
  const int nu = j.at("n_users").get<int>();
  const int ni = j.at("n_items").get<int>();
  const int d = j.at("d").get<int>();
  MfModel m;
  m.user = matrix_from_json(j.at("user"), nu, d);
  m.item = matrix_from_json(j.at("item"), ni, d);
  return m;
}

inline void save_reps(const ConfounderReps& r, const std::filesystem::path& path) {
  json j{{"format", "confounder_reps"},
         {"n_users", static_cast<int>(r.user.rows())},
         {"n_items", static_cast<int>(r.item.rows())},
         {"d", static_cast<int>(r.user.cols())},
         {"user", matrix_to_json(r.user)},
         {"item", matrix_to_json(r.item)}};
  write_json_file(path, j);
}

inline ConfounderReps load_reps(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  if (j.value("format", "") != "confounder_reps")
    throw InputError("not a confounder representation file: " + path.string());
  const int nu = j.at("n_users").get<int>();
  const int ni = j.at("n_items").get<int>();
  const int d = j.at("d").get<int>();
  ConfounderReps r;
  r.user = matrix_from_json(j.at("user"), nu, d);
  r.item = matrix_from_json(j.at("item"), ni, d);
  return r;
}

}  // namespace slfr
