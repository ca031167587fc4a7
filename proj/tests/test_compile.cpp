// Smoke test: pulls in every public header and touches one symbol from each,
// so the whole surface is forced through the compiler even before the real
// suites run.
#include <doctest.h>

#include <slfr/adam.hpp>
#include <slfr/data.hpp>
#include <slfr/eval.hpp>
#include <slfr/io.hpp>
#include <slfr/model.hpp>
#include <slfr/rng.hpp>
#include <slfr/synth.hpp>
#include <slfr/train.hpp>
#include <slfr/types.hpp>
#include <slfr/vae.hpp>

TEST_CASE("headers are self-contained and basic symbols link") {
  CHECK(slfr::sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(slfr::to_string(slfr::FeedbackKind::Implicit) == "implicit");

  slfr::Rng rng(7);
  CHECK(rng.uniform() >= 0.0);

  slfr::MfModel m = slfr::init_mf(3, 4, 2, 11);
  CHECK(m.n_users() == 3);
  CHECK(m.n_items() == 4);
  CHECK(m.dim() == 2);

  slfr::VaeBlock b = slfr::init_vae(4, 3, 2, 5);
  CHECK(b.input_dim() == 4);

  slfr::AdamDense opt(m.user);
  slfr::Matrixd g = slfr::Matrixd::Ones(3, 2);
  opt.step(m.user, g, 1);
  CHECK(std::isfinite(m.user(0, 0)));
}
