#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <slfr/io.hpp>

#include "helpers.hpp"

using namespace slfr;
using testutil::TempDir;

namespace {

#ifndef SLFR_BINARY
#error "SLFR_BINARY must point at the command-line executable"
#endif

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the tool through the shell and captures exit code and both streams.
CliResult run_cli(const std::string& args, const TempDir& tmp,
                  const std::string& env = "") {
  static int call_id = 0;
  const auto out_file = tmp / ("stdout_" + std::to_string(call_id) + ".txt");
  const auto err_file = tmp / ("stderr_" + std::to_string(call_id) + ".txt");
  ++call_id;
  const std::string cmd = env + (env.empty() ? "" : " ") + SLFR_BINARY + " " +
                          args + " > " + out_file.string() + " 2> " +
                          err_file.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text_file(out_file);
  r.err = read_text_file(err_file);
  return r;
}

std::string q(const std::filesystem::path& p) { return p.string(); }

}  // namespace

TEST_CASE("the tool rejects bad invocations with exit code 2") {
  TempDir tmp;
  CHECK(run_cli("", tmp).exit_code == 2);              // no subcommand
  CHECK(run_cli("frobnicate", tmp).exit_code == 2);    // unknown subcommand
  CHECK(run_cli("prepare --out x", tmp).exit_code == 2);  // missing --input

  // Unknown binarize rule: rejected, and the message names the valid ones.
  testutil::write_file(tmp / "log.csv", "user,item,value,timestamp\n1,1,5,1\n");
  const CliResult r = run_cli("prepare --input " + q(tmp / "log.csv") +
                                  " --rule bogus --out " + q(tmp / "split"),
                              tmp);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("bogus") != std::string::npos);
  CHECK(r.err.find("rating_ge_4") != std::string::npos);
  CHECK(r.err.find("watch_ratio_ge_2") != std::string::npos);
  CHECK(r.err.find("passthrough") != std::string::npos);

  // Missing input file.
  CHECK(run_cli("prepare --input " + q(tmp / "absent.csv") + " --out " +
                    q(tmp / "s2"),
                tmp)
            .exit_code == 2);

  // Bad sweep parameter.
  CHECK(run_cli("sweep --param magic --split x --out y", tmp).exit_code == 2);
}

TEST_CASE("simulate / prepare / pretrain / train / eval / sweep / report") {
  TempDir tmp;
  const std::string sim_dir = q(tmp / "sim");
  const std::string split_dir = q(tmp / "split");

  // --- simulate: a small two-round confounded world.
  const std::string sim_args =
      "simulate --n-users 60 --n-items 80 --d-true 4 --conf-strength 1.5 "
      "--exposure-k 8 --rounds 2 --density 0.1 --seed 11 --out ";
  CliResult r = run_cli(sim_args + sim_dir, tmp);
  REQUIRE(r.exit_code == 0);
  CHECK(std::filesystem::exists(tmp / "sim/observations.csv"));
  CHECK(std::filesystem::exists(tmp / "sim/round_stats.csv"));
  CHECK(std::filesystem::exists(tmp / "sim/world.json"));
  CHECK(std::filesystem::exists(tmp / "sim/true_labels.csv"));
  CHECK(std::filesystem::exists(tmp / "sim/manifest.json"));

  // Rerunning the generator reproduces the log byte for byte.
  r = run_cli(sim_args + q(tmp / "sim_again"), tmp);
  REQUIRE(r.exit_code == 0);
  CHECK(read_text_file(tmp / "sim/observations.csv") ==
        read_text_file(tmp / "sim_again/observations.csv"));

  // --- prepare: leave-one-out split of the simulated log.
  r = run_cli("prepare --input " + q(tmp / "sim/observations.csv") +
                  " --rule passthrough --seed 11 --out " + split_dir,
              tmp);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("60 users") != std::string::npos);
  for (const char* f : {"train.csv", "valid.csv", "test.csv", "metadata.json",
                        "user_map.csv", "item_map.csv", "manifest.json"})
    CHECK(std::filesystem::exists(tmp / "split" / f));

  // --- pretrain: both representation blocks, then the merged reps file.
  r = run_cli("pretrain --split " + split_dir +
                  " --alpha 2 --dz 4 --hidden 16 --epochs 3 --batch 32 "
                  "--seed 11 --out " + q(tmp / "pre"),
              tmp);
  REQUIRE(r.exit_code == 0);
  CHECK(std::filesystem::exists(tmp / "pre/vae_user.json"));
  CHECK(std::filesystem::exists(tmp / "pre/vae_item.json"));
  CHECK(std::filesystem::exists(tmp / "pre/reps.json"));
  {
    const json manifest = read_json_file(tmp / "pre/manifest.json");
    CHECK(manifest.at("kl_terms").contains("user"));
    CHECK(manifest.at("kl_terms").contains("item"));
  }

  // --- train: bias-aware run against the pretrained representations.
  const std::string train_common =
      "train --split " + split_dir + " --reps " + q(tmp / "pre/reps.json") +
      " --d 4 --epochs 5 --patience 5 --batch 256 --seed 11 --out ";
  r = run_cli(train_common + q(tmp / "run_g05") + " --gamma 0.5", tmp);
  REQUIRE(r.exit_code == 0);
  CHECK(std::filesystem::exists(tmp / "run_g05/model.json"));
  const std::string log_text = read_text_file(tmp / "run_g05/train_log.csv");
  CHECK(log_text.rfind("epoch,loss_normal,loss_bias,loss_total,"
                       "valid_recall@10,valid_ndcg@10,seconds\n", 0) == 0);

  // Same seed, same config: the checkpoint reproduces byte for byte.
  r = run_cli(train_common + q(tmp / "run_g05_again") + " --gamma 0.5", tmp);
  REQUIRE(r.exit_code == 0);
  CHECK(read_text_file(tmp / "run_g05/model.json") ==
        read_text_file(tmp / "run_g05_again/model.json"));

  // gamma = 0 never touches the representations: with and without --reps
  // the checkpoints agree exactly.
  r = run_cli(train_common + q(tmp / "run_g0_reps") + " --gamma 0", tmp);
  REQUIRE(r.exit_code == 0);
  r = run_cli("train --split " + split_dir +
                  " --d 4 --epochs 5 --patience 5 --batch 256 --seed 11 "
                  "--gamma 0 --out " + q(tmp / "run_g0_plain"),
              tmp);
  REQUIRE(r.exit_code == 0);
  CHECK(read_text_file(tmp / "run_g0_reps/model.json") ==
        read_text_file(tmp / "run_g0_plain/model.json"));

  // gamma > 0 without representations is a configuration error.
  CHECK(run_cli("train --split " + split_dir + " --gamma 1 --out " +
                    q(tmp / "run_bad"),
                tmp)
            .exit_code == 2);

  // --- eval: held-out labels and an external label file.
  r = run_cli("eval --model " + q(tmp / "run_g05/model.json") + " --split " +
                  split_dir + " --out " + q(tmp / "runs/heldout"),
              tmp);
  REQUIRE(r.exit_code == 0);
  {
    const json rep = read_json_file(tmp / "runs/heldout/report.json");
    CHECK(rep.at("metrics").contains("recall@10"));
    CHECK(rep.at("metrics").contains("ndcg@30"));
    CHECK(rep.at("n_evaluated_users").get<int>() > 0);
  }

  r = run_cli("eval --model " + q(tmp / "run_g05/model.json") + " --split " +
                  split_dir + " --labels " + q(tmp / "sim/true_labels.csv") +
                  " --ks 5,10 --out " + q(tmp / "runs/truth"),
              tmp);
  REQUIRE(r.exit_code == 0);
  {
    const json rep = read_json_file(tmp / "runs/truth/report.json");
    CHECK(rep.at("metrics").contains("ndcg@5"));
  }

  CHECK(run_cli("eval --model " + q(tmp / "run_g05/model.json") + " --split " +
                    split_dir + " --ks 0 --out " + q(tmp / "runs/bad"),
                tmp)
            .exit_code == 2);

  // --- sweep: the default gamma grid writes one row per grid point.
  r = run_cli("sweep --param gamma --split " + split_dir + " --reps " +
                  q(tmp / "pre/reps.json") +
                  " --d 4 --epochs 2 --patience 2 --batch 256 --seed 11 "
                  "--out " + q(tmp / "sweep"),
              tmp);
  REQUIRE(r.exit_code == 0);
  const std::string sweep_text = read_text_file(tmp / "sweep/sweep.csv");
  CHECK(sweep_text.rfind("param,value,", 0) == 0);
  int lines = 0;
  for (char c : sweep_text) lines += c == '\n';
  CHECK(lines == 12);  // header + 11 default grid points
  CHECK(sweep_text.find("gamma,0,") != std::string::npos);
  CHECK(sweep_text.find("gamma,2,") != std::string::npos);

  // --- report: tabulates every run directory containing a report.
  r = run_cli("report --runs " + q(tmp / "runs") + " --out " + q(tmp / "cmp"),
              tmp);
  REQUIRE(r.exit_code == 0);
  const std::string cmp = read_text_file(tmp / "cmp/comparison.csv");
  CHECK(cmp.find("heldout") != std::string::npos);
  CHECK(cmp.find("truth") != std::string::npos);
  CHECK(cmp.find("ndcg@10") != std::string::npos);
  CHECK(run_cli("report --runs " + q(tmp / "does_not_exist") + " --out " +
                    q(tmp / "cmp2"),
                tmp)
            .exit_code == 2);
}

TEST_CASE("SLFR_SEED overrides every seed flag") {
  TempDir tmp;
  const std::string base =
      "simulate --n-users 30 --n-items 40 --exposure-k 5 --rounds 1 ";
  CHECK(run_cli(base + "--seed 7 --out " + q(tmp / "a"), tmp).exit_code == 0);
  CHECK(run_cli(base + "--seed 1 --out " + q(tmp / "b"), tmp,
                "SLFR_SEED=7").exit_code == 0);
  CHECK(run_cli(base + "--seed 1 --out " + q(tmp / "c"), tmp).exit_code == 0);
  const std::string a = read_text_file(tmp / "a/observations.csv");
  CHECK(a == read_text_file(tmp / "b/observations.csv"));
  CHECK(a != read_text_file(tmp / "c/observations.csv"));

  CHECK(run_cli(base + "--seed 1 --out " + q(tmp / "d"), tmp,
                "SLFR_SEED=-3").exit_code == 2);
}

TEST_CASE("numerical aborts exit with code 3") {
  TempDir tmp;
  // A tiny explicit rating log: five ratings per user.
  std::string csv = "user,item,value,timestamp\n";
  for (int u = 0; u < 6; ++u)
    for (int i = 0; i < 5; ++i)
      csv += std::to_string(u) + "," + std::to_string(i) + "," +
             std::to_string(1 + (u + i) % 5) + "," + std::to_string(i) + "\n";
  testutil::write_file(tmp / "ratings.csv", csv);

  CliResult r = run_cli("prepare --input " + q(tmp / "ratings.csv") +
                            " --rule none --out " + q(tmp / "split"),
                        tmp);
  REQUIRE(r.exit_code == 0);

  r = run_cli("train --split " + q(tmp / "split") +
                  " --feedback explicit --lr 1e80 --d 4 --epochs 20 "
                  "--patience 20 --out " + q(tmp / "boom"),
              tmp);
  CHECK(r.exit_code == 3);
  CHECK(r.out.find("DIVERGED") != std::string::npos);
}
