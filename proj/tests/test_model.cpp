#include <doctest.h>

#include <slfr/eval.hpp>
#include <slfr/model.hpp>

#include "helpers.hpp"

using namespace slfr;
using testutil::TempDir;

namespace {

MfModel make_model(const Matrixd& user, const Matrixd& item) {
  MfModel m;
  m.user = user;
  m.item = item;
  return m;
}

}  // namespace

TEST_CASE("score is the embedding dot product") {
  Matrixd user(1, 2), item(1, 2);
  user << 1.0, 2.0;
  item << 3.0, -1.0;
  const MfModel m = make_model(user, item);
  CHECK(score(m, 0, 0) == 1.0);

  const MfModel zero = make_model(Matrixd::Zero(2, 3), Matrixd::Zero(2, 3));
  CHECK(score(zero, 1, 1) == 0.0);
}

TEST_CASE("dot-product ops agree with elementwise accumulation at d=64") {
  Rng rng(3);
  Matrixd user(2, 64), item(2, 64), rep_u(2, 64), rep_i(2, 64);
  for (Matrixd* mat : {&user, &item, &rep_u, &rep_i})
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 64; ++c) (*mat)(r, c) = rng.normal(0.0, 1.0);
  const MfModel m = make_model(user, item);
  ConfounderReps reps{rep_u, rep_i};

  auto dot_oracle = [](const Matrixd& a, int ra, const Matrixd& b, int rb) {
    double acc = 0.0;
    for (int c = 0; c < a.cols(); ++c) acc += a(ra, c) * b(rb, c);
    return acc;
  };
  for (int u = 0; u < 2; ++u)
    for (int i = 0; i < 2; ++i) {
      CHECK(score(m, u, i) ==
            doctest::Approx(dot_oracle(user, u, item, i)).epsilon(1e-12));
      CHECK(score_bias_user(reps, m, u, i) ==
            doctest::Approx(dot_oracle(rep_u, u, item, i)).epsilon(1e-12));
      CHECK(score_bias_item(reps, m, u, i) ==
            doctest::Approx(dot_oracle(rep_i, i, user, u)).epsilon(1e-12));
    }
}

TEST_CASE("bias scores: examples and zero item side") {
  Matrixd user(1, 2), item(1, 2), rep_u(1, 2), rep_i(1, 2);
  user << 2.0, 2.0;
  item << 3.0, -1.0;
  rep_u << 0.5, 0.5;
  rep_i << 0.0, 0.0;
  const MfModel m = make_model(user, item);
  ConfounderReps reps{rep_u, rep_i};
  CHECK(score_bias_user(reps, m, 0, 0) == 1.0);  // 0.5*3 + 0.5*(-1)
  CHECK(score_bias_item(reps, m, 0, 0) == 0.0);  // zero rep contributes nothing
}

TEST_CASE("compose_bias follows the per-kind composition rule") {
  CHECK(compose_bias(1.0, 1.0, 1.0, FeedbackKind::Explicit) == 3.0);
  CHECK(compose_bias(1.0, 1.0, 1.0, FeedbackKind::Implicit) == 1.0);
  CHECK(compose_bias(2.0, 0.0, 5.0, FeedbackKind::Implicit) == 0.0);

  // Neutral elements.
  for (double s : {-2.5, 0.0, 0.7}) {
    CHECK(compose_bias(s, 0.0, 0.0, FeedbackKind::Explicit) == s);
    CHECK(compose_bias(s, 1.0, 1.0, FeedbackKind::Implicit) == s);
  }

  // Alternative composition adds in logit space, implicit only.
  CHECK(compose_bias(1.0, 2.0, 3.0, FeedbackKind::Implicit,
                     BiasComposition::AdditiveLogit) == 6.0);
  CHECK_THROWS_AS(compose_bias(1.0, 2.0, 3.0, FeedbackKind::Explicit,
                               BiasComposition::AdditiveLogit),
                  InputError);
}

TEST_CASE("predict applies the observation link") {
  Matrixd user = Matrixd::Zero(1, 2);
  Matrixd item = Matrixd::Zero(1, 2);
  const MfModel zero = make_model(user, item);
  CHECK(predict(zero, 0, 0, FeedbackKind::Implicit) == 0.5);
  CHECK(predict(zero, 0, 0, FeedbackKind::Explicit) == 0.0);

  // Strictly monotone in score for both kinds.
  Rng rng(9);
  Matrixd u2(1, 4), i2(3, 4);
  for (int c = 0; c < 4; ++c) u2(0, c) = rng.normal(0.0, 1.0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) i2(r, c) = rng.normal(0.0, 1.0);
  const MfModel m = make_model(u2, i2);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      if (score(m, 0, a) < score(m, 0, b)) {
        CHECK(predict(m, 0, a, FeedbackKind::Implicit) <
              predict(m, 0, b, FeedbackKind::Implicit));
        CHECK(predict(m, 0, a, FeedbackKind::Explicit) <
              predict(m, 0, b, FeedbackKind::Explicit));
      }
    }
}

TEST_CASE("score_bundle composes consistently") {
  Rng rng(4);
  Matrixd user(2, 3), item(2, 3), rep_u(2, 3), rep_i(2, 3);
  for (Matrixd* mat : {&user, &item, &rep_u, &rep_i})
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c) (*mat)(r, c) = rng.normal(0.0, 1.0);
  const MfModel m = make_model(user, item);
  const ConfounderReps reps{rep_u, rep_i};

  for (auto kind : {FeedbackKind::Explicit, FeedbackKind::Implicit}) {
    const ScoreBundle b = score_bundle(m, reps, 1, 0, kind);
    CHECK(b.feedback_kind == kind);
    CHECK(b.score == score(m, 1, 0));
    CHECK(b.score_bias_u == score_bias_user(reps, m, 1, 0));
    CHECK(b.score_bias_i == score_bias_item(reps, m, 1, 0));
    CHECK(b.score_bias ==
          compose_bias(b.score, b.score_bias_u, b.score_bias_i, kind));
  }
}

TEST_CASE("init_mf is seed-deterministic with small Gaussian entries") {
  const MfModel a = init_mf(30, 40, 8, 123);
  const MfModel b = init_mf(30, 40, 8, 123);
  CHECK(a.user == b.user);
  CHECK(a.item == b.item);

  const MfModel c = init_mf(30, 40, 8, 124);
  CHECK(a.user != c.user);

  // Mean ~0, sd ~0.01.
  CHECK(std::abs(a.user.mean()) < 0.005);
  const double sd = std::sqrt((a.user.array() - a.user.mean()).square().mean());
  CHECK(sd == doctest::Approx(0.01).epsilon(0.2));

  CHECK_THROWS_AS(init_mf(0, 4, 2, 1), InputError);
  CHECK_THROWS_AS(init_mf(4, 4, 0, 1), InputError);
}

TEST_CASE("ranking is invariant under zero-padded extra dimensions") {
  Rng rng(17);
  const int n_items = 25, d = 6;
  Matrixd user(1, d), item(n_items, d);
  for (int c = 0; c < d; ++c) user(0, c) = rng.normal(0.0, 1.0);
  for (int r = 0; r < n_items; ++r)
    for (int c = 0; c < d; ++c) item(r, c) = rng.normal(0.0, 1.0);
  const MfModel m = make_model(user, item);

  Matrixd user_pad = Matrixd::Zero(1, d + 4);
  Matrixd item_pad = Matrixd::Zero(n_items, d + 4);
  user_pad.leftCols(d) = user;
  item_pad.leftCols(d) = item;
  const MfModel padded = make_model(user_pad, item_pad);

  const auto base = rank_items(score_all(m, 0), {});
  const auto wide = rank_items(score_all(padded, 0), {});
  CHECK(base == wide);
}

TEST_CASE("model and representation checkpoints round-trip") {
  TempDir tmp;
  const MfModel m = init_mf(5, 7, 3, 77);
  save_mf(m, tmp / "model.json");
  const MfModel r = load_mf(tmp / "model.json");
  CHECK(r.user == m.user);
  CHECK(r.item == m.item);

  ConfounderReps reps;
  reps.user = Matrixd::Random(5, 3);
  reps.item = Matrixd::Random(7, 3);
  save_reps(reps, tmp / "reps.json");
  const ConfounderReps rr = load_reps(tmp / "reps.json");
  CHECK(rr.user == reps.user);
  CHECK(rr.item == reps.item);

  // Format tags are checked, so the two kinds cannot be confused.
  CHECK_THROWS_AS(load_mf(tmp / "reps.json"), InputError);
  CHECK_THROWS_AS(load_reps(tmp / "model.json"), InputError);
  CHECK_THROWS_AS(load_mf(tmp / "missing.json"), InputError);
}
