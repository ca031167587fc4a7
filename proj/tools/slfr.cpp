// Command-line front end: prepare / pretrain / train / eval / sweep /
// simulate / report. Every command writes its artifacts plus a manifest
// into --out and is fully determined by (resolved config, seed).
//
// Exit codes: 0 success, 2 input or config error, 3 numerical abort.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slfr/data.hpp"
#include "slfr/eval.hpp"
#include "slfr/io.hpp"
#include "slfr/model.hpp"
#include "slfr/synth.hpp"
#include "slfr/train.hpp"
#include "slfr/types.hpp"
#include "slfr/vae.hpp"

namespace fs = std::filesystem;
using namespace slfr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

// SLFR_SEED overrides every --seed flag; SLFR_THREADS caps Eigen's thread
// pool (the numeric kernels are effectively single-threaded either way).
std::optional<std::uint64_t> env_seed_override() {
  const char* v = std::getenv("SLFR_SEED");
  if (!v || !*v) return std::nullopt;
  long long parsed = 0;
  if (!parse_long(v, parsed) || parsed < 0)
    throw InputError("SLFR_SEED must be a non-negative integer, got '" +
                     std::string(v) + "'");
  return static_cast<std::uint64_t>(parsed);
}

int env_threads() {
  const char* v = std::getenv("SLFR_THREADS");
  if (!v || !*v) return 1;
  long long parsed = 0;
  if (!parse_long(v, parsed) || parsed < 1)
    throw InputError("SLFR_THREADS must be a positive integer, got '" +
                     std::string(v) + "'");
  return static_cast<int>(parsed);
}

void write_manifest(const fs::path& out, const std::string& command,
                    const json& config, std::uint64_t seed,
                    const std::vector<std::string>& outputs, double seconds,
                    const json& extra = json::object()) {
  json m{{"command", command},
         {"config", config},
         {"seed", seed},
         {"threads", env_threads()},
         {"outputs", outputs},
         {"wall_seconds", seconds},
         {"config_digest", config_digest(config)}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_json_file(out / "manifest.json", m);
}

std::vector<std::vector<int>> load_label_lists(const fs::path& path,
                                               int n_users) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open label file: " + path.string());
  std::vector<std::vector<int>> lists(n_users);
  std::string line;
  std::getline(in, line);  // header
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto f = split_line(line, ',');
    long long u = 0, i = 0;
    if (f.size() < 2 || !parse_long(f[0], u) || !parse_long(f[1], i))
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad row");
    if (u < 0 || u >= n_users)
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": user " + std::to_string(u) + " outside split");
    lists[static_cast<int>(u)].push_back(static_cast<int>(i));
  }
  return lists;
}

std::vector<double> parse_grid(const std::string& grid) {
  std::vector<double> values;
  for (const auto& tok : split_line(grid, ',')) {
    double v = 0.0;
    if (!parse_double(tok, v))
      throw InputError("bad grid value '" + tok + "'");
    values.push_back(v);
  }
  if (values.empty()) throw InputError("empty grid");
  return values;
}

// ---------------------------------------------------------------------------

struct PrepareArgs {
  std::string input;
  std::string format = "csv";
  std::string rule = "passthrough";
  std::uint64_t seed = 42;
  std::string out;
};

void run_prepare(const PrepareArgs& a) {
  Timer timer;
  const CsvFormat fmt = [&] {
    if (a.format == "csv") return CsvFormat::Csv;
    if (a.format == "tsv") return CsvFormat::Tsv;
    throw InputError("unknown format '" + a.format + "' (valid: csv, tsv)");
  }();
  Dataset d = load_interactions(a.input, fmt);
  if (a.rule != "none") d = binarize(d, binarize_rule_from_string(a.rule));
  const Split split = leave_one_out_split(d, a.seed);
  const fs::path out(a.out);
  fs::create_directories(out);
  save_split(split, out, a.seed, a.rule);

  int n_eval = 0;
  for (const auto& t : split.test) n_eval += !t.empty();
  json cfg{{"input", a.input}, {"format", a.format}, {"rule", a.rule},
           {"seed", a.seed}, {"out", a.out}};
  write_manifest(out, "prepare", cfg, a.seed,
                 {"train.csv", "valid.csv", "test.csv", "user_map.csv",
                  "item_map.csv", "metadata.json"},
                 timer.seconds(),
                 json{{"n_users", split.train.n_users},
                      {"n_items", split.train.n_items},
                      {"n_train_rows", split.train.interactions.size()},
                      {"n_evaluated_users", n_eval}});
  std::cout << "prepared split: " << split.train.n_users << " users, "
            << split.train.n_items << " items, "
            << split.train.interactions.size() << " train rows, " << n_eval
            << " users with held-out test items\n";
}

// ---------------------------------------------------------------------------

struct PretrainArgs {
  std::string split;
  std::string side = "both";
  double alpha = 5.0;
  int d_z = 64;
  int hidden = 200;
  double lr = 1e-3;
  int epochs = 100;
  int batch = 256;
  std::uint64_t seed = 42;
  std::string out;
};

void save_vae_curve(const std::vector<double>& losses, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < losses.size(); ++e)
    out << (e + 1) << ',' << format_double(losses[e]) << '\n';
}

void run_pretrain(const PretrainArgs& a) {
  Timer timer;
  if (a.side != "user" && a.side != "item" && a.side != "both")
    throw InputError("--side must be user, item or both");
  const Split split = load_split(a.split);
  const fs::path out(a.out);
  fs::create_directories(out);

  VaeConfig cfg;
  cfg.alpha = a.alpha;
  cfg.d_z = a.d_z;
  cfg.hidden = a.hidden;
  cfg.lr = a.lr;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;

  std::vector<std::string> outputs;
  json kl_summary = json::object();
  auto train_side = [&](const char* side) {
    const MatrixAxis axis =
        std::string(side) == "user" ? MatrixAxis::ByUser : MatrixAxis::ByItem;
    const InteractionMatrix m = interaction_matrix(split, axis);
    VaeConfig side_cfg = cfg;
    side_cfg.seed = Rng::mix(a.seed, std::string("pretrain_") + side);
    const VaeTrainResult r = train_vae(m, side_cfg);
    const std::string ckpt = std::string("vae_") + side + ".json";
    save_vae(r.block, out / ckpt, a.alpha, a.seed);
    save_vae_curve(r.epoch_loss, out / (std::string("vae_train_") + side + ".csv"));
    outputs.push_back(ckpt);
    outputs.push_back(std::string("vae_train_") + side + ".csv");
    const KlTerms t = estimate_kl_terms(r.block, m.rows, a.seed);
    kl_summary[side] = {{"index_code_mi", t.index_code_mi},
                        {"total_correlation", t.total_correlation},
                        {"dimension_kl", t.dimension_kl}};
    return r.block;
  };

  std::optional<VaeBlock> user_block, item_block;
  if (a.side == "user" || a.side == "both") user_block = train_side("user");
  if (a.side == "item" || a.side == "both") item_block = train_side("item");

  // A single-side run still produces representations when the other
  // side's checkpoint is already in --out.
  if (!user_block && fs::exists(out / "vae_user.json"))
    user_block = load_vae(out / "vae_user.json").block;
  if (!item_block && fs::exists(out / "vae_item.json"))
    item_block = load_vae(out / "vae_item.json").block;
  if (user_block && item_block) {
    const ConfounderReps reps = extract_confounders(
        *user_block, *item_block, interaction_matrix(split, MatrixAxis::ByUser),
        interaction_matrix(split, MatrixAxis::ByItem));
    save_reps(reps, out / "reps.json");
    outputs.push_back("reps.json");
  }

  json cfg_json{{"split", a.split}, {"side", a.side}, {"alpha", a.alpha},
                {"d_z", a.d_z}, {"hidden", a.hidden}, {"lr", a.lr},
                {"epochs", a.epochs}, {"batch", a.batch}, {"seed", a.seed},
                {"out", a.out}};
  write_json_file(out / "config.json", cfg_json);
  outputs.push_back("config.json");
  write_manifest(out, "pretrain", cfg_json, a.seed, outputs, timer.seconds(),
                 json{{"kl_terms", kl_summary}});
  std::cout << "pretrained side=" << a.side << " alpha=" << a.alpha
            << " -> " << a.out << "\n";
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string split;
  std::string reps;
  TrainConfig cfg;
  std::string feedback = "implicit";
  std::string composition = "standard";
  std::string out;
};

int run_train(const TrainArgs& a) {
  Timer timer;
  const Split split = load_split(a.split);
  TrainConfig cfg = a.cfg;
  cfg.feedback_kind = feedback_kind_from_string(a.feedback);
  cfg.composition = bias_composition_from_string(a.composition);

  std::optional<ConfounderReps> reps;
  if (!a.reps.empty()) reps = load_reps(a.reps);
  if (cfg.gamma > 0.0 && !reps)
    throw InputError("--gamma > 0 requires --reps");

  const TrainResult r = train_slfr(split, reps ? &*reps : nullptr, cfg);
  const fs::path out(a.out);
  fs::create_directories(out);
  save_mf(r.model, out / "model.json");
  save_train_log(r.log, out / "train_log.csv");
  json cfg_json = train_config_to_json(cfg);
  cfg_json["split"] = a.split;
  cfg_json["reps"] = a.reps;
  cfg_json["out"] = a.out;
  write_json_file(out / "config.json", cfg_json);
  write_manifest(out, "train", cfg_json, cfg.seed,
                 {"model.json", "train_log.csv", "config.json"}, timer.seconds(),
                 json{{"best_epoch", r.best_epoch},
                      {"best_valid_ndcg10", r.best_valid_ndcg10},
                      {"diverged", r.diverged}});
  std::cout << "trained gamma=" << cfg.gamma << ": best epoch " << r.best_epoch
            << ", valid ndcg@10 " << r.best_valid_ndcg10
            << (r.diverged ? " (DIVERGED)" : "") << "\n";
  return r.diverged ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string split;
  std::string ks = "10,20,30";
  std::string labels = "heldout";
  std::uint64_t seed = 42;
  std::string out;
};

void run_eval(const EvalArgs& a) {
  Timer timer;
  const Split split = load_split(a.split);
  const MfModel m = load_mf(a.model);
  std::vector<int> ks;
  for (double v : parse_grid(a.ks)) {
    if (v < 1 || v != std::floor(v))
      throw InputError("--ks must be positive integers");
    ks.push_back(static_cast<int>(v));
  }

  EvalReport rep;
  if (a.labels == "heldout") {
    rep = evaluate(m, split, ks);
  } else {
    // External label file: per-user relevant items; anything the user
    // already saw as a train positive is removed first, since ranked
    // lists never contain train positives.
    auto lists = load_label_lists(a.labels, split.train.n_users);
    const auto train_pos = train_positive_lists(split);
    for (int u = 0; u < split.train.n_users; ++u) {
      auto& l = lists[u];
      l.erase(std::remove_if(l.begin(), l.end(),
                             [&](int i) {
                               return std::binary_search(
                                   train_pos[u].begin(), train_pos[u].end(), i);
                             }),
              l.end());
      std::sort(l.begin(), l.end());
      l.erase(std::unique(l.begin(), l.end()), l.end());
    }
    rep = evaluate(m, split, ks, &lists);
  }

  json cfg{{"model", a.model}, {"split", a.split}, {"ks", a.ks},
           {"labels", a.labels}, {"out", a.out}};
  rep.config_digest = config_digest(cfg);
  rep.wall_seconds = timer.seconds();
  const fs::path out(a.out);
  fs::create_directories(out);
  save_report(rep, out / "report.json", out / "report.csv");
  write_manifest(out, "eval", cfg, a.seed, {"report.json", "report.csv"},
                 timer.seconds());
  std::cout << "evaluated " << rep.n_evaluated_users << " users:";
  for (std::size_t i = 0; i < ks.size(); ++i)
    std::cout << " recall@" << ks[i] << "=" << rep.recall[i] << " ndcg@"
              << ks[i] << "=" << rep.ndcg[i];
  std::cout << "\n";
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string param = "gamma";
  std::string grid;
  std::string split;
  std::string reps;
  TrainConfig cfg;
  std::string feedback = "implicit";
  // alpha sweeps retrain the representation stage per grid point
  int vae_epochs = 100;
  int vae_batch = 256;
  int vae_hidden = 200;
  std::string labels = "heldout";
  std::string out;
};

void run_sweep(const SweepArgs& a) {
  Timer timer;
  if (a.param != "gamma" && a.param != "alpha")
    throw InputError("--param must be gamma or alpha");
  const std::vector<double> grid = parse_grid(
      !a.grid.empty() ? a.grid
                      : (a.param == "gamma" ? "0,0.2,0.4,0.6,0.8,1,1.2,1.4,1.6,1.8,2"
                                            : "1,5,10"));
  const Split split = load_split(a.split);
  TrainConfig cfg = a.cfg;
  cfg.feedback_kind = feedback_kind_from_string(a.feedback);

  std::optional<ConfounderReps> fixed_reps;
  if (!a.reps.empty()) fixed_reps = load_reps(a.reps);
  if (a.param == "gamma" && !fixed_reps)
    throw InputError("gamma sweep requires --reps (gamma > 0 points need them)");

  std::vector<std::vector<int>> external;
  if (a.labels != "heldout") {
    external = load_label_lists(a.labels, split.train.n_users);
    const auto train_pos = train_positive_lists(split);
    for (int u = 0; u < split.train.n_users; ++u) {
      auto& l = external[u];
      l.erase(std::remove_if(l.begin(), l.end(),
                             [&](int i) {
                               return std::binary_search(
                                   train_pos[u].begin(), train_pos[u].end(), i);
                             }),
              l.end());
      std::sort(l.begin(), l.end());
      l.erase(std::unique(l.begin(), l.end()), l.end());
    }
  }

  const fs::path out(a.out);
  fs::create_directories(out);
  std::ofstream csv(out / "sweep.csv");
  if (!csv) throw InputError("cannot write " + (out / "sweep.csv").string());
  csv << "param,value,recall@10,ndcg@10,recall@20,ndcg@20,recall@30,ndcg@30,"
         "best_epoch,index_code_mi\n";

  for (double v : grid) {
    TrainConfig point = cfg;
    const ConfounderReps* reps_ptr = fixed_reps ? &*fixed_reps : nullptr;
    ConfounderReps point_reps;
    double mi = std::numeric_limits<double>::quiet_NaN();
    if (a.param == "gamma") {
      point.gamma = v;
    } else {
      // Retrain both representation blocks at this alpha.
      VaeConfig vc;
      vc.alpha = v;
      vc.d_z = cfg.d;
      vc.hidden = a.vae_hidden;
      vc.epochs = a.vae_epochs;
      vc.batch = a.vae_batch;
      const InteractionMatrix by_user = interaction_matrix(split, MatrixAxis::ByUser);
      const InteractionMatrix by_item = interaction_matrix(split, MatrixAxis::ByItem);
      VaeConfig cu = vc;
      cu.seed = Rng::mix(cfg.seed, "pretrain_user");
      VaeConfig ci = vc;
      ci.seed = Rng::mix(cfg.seed, "pretrain_item");
      const VaeBlock ub = train_vae(by_user, cu).block;
      const VaeBlock ib = train_vae(by_item, ci).block;
      point_reps = extract_confounders(ub, ib, by_user, by_item);
      reps_ptr = &point_reps;
      mi = estimate_kl_terms(ub, by_user.rows, cfg.seed).index_code_mi;
    }

    const TrainResult r = train_slfr(split, reps_ptr, point);
    const EvalReport rep =
        evaluate(r.model, split, {10, 20, 30},
                 a.labels != "heldout" ? &external : nullptr);
    csv << a.param << ',' << format_double(v) << ','
        << format_double(rep.recall_at(10)) << ',' << format_double(rep.ndcg_at(10))
        << ',' << format_double(rep.recall_at(20)) << ','
        << format_double(rep.ndcg_at(20)) << ',' << format_double(rep.recall_at(30))
        << ',' << format_double(rep.ndcg_at(30)) << ',' << r.best_epoch << ','
        << format_double(mi) << '\n';
    csv.flush();
    std::cout << "sweep " << a.param << "=" << v << ": ndcg@10 "
              << rep.ndcg_at(10) << "\n";
  }

  json cfg_json{{"param", a.param}, {"grid", a.grid}, {"split", a.split},
                {"reps", a.reps}, {"labels", a.labels}, {"out", a.out},
                {"train", train_config_to_json(cfg)}};
  write_manifest(out, "sweep", cfg_json, cfg.seed, {"sweep.csv"}, timer.seconds());
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  SynthConfig cfg;
  std::string out;
};

void run_simulate(const SimulateArgs& a) {
  Timer timer;
  const SynthWorld world = generate_world(a.cfg);
  const SimulationResult sim = simulate_exposure(world, a.cfg);
  const fs::path out(a.out);
  fs::create_directories(out);
  save_dataset_csv(sim.data, out / "observations.csv");
  save_round_stats(sim.rounds, out / "round_stats.csv");
  save_world(world, out / "world.json");
  {
    std::ofstream labels(out / "true_labels.csv");
    if (!labels) throw InputError("cannot write true_labels.csv");
    labels << "user,item\n";
    for (int u = 0; u < world.n_users(); ++u)
      for (int i : world.true_positives[u]) labels << u << ',' << i << '\n';
  }
  json cfg_json{{"n_users", a.cfg.n_users}, {"n_items", a.cfg.n_items},
                {"d_true", a.cfg.d_true}, {"conf_strength", a.cfg.conf_strength},
                {"exposure_k", a.cfg.exposure_k}, {"rounds", a.cfg.rounds},
                {"density", a.cfg.density}, {"seed", a.cfg.seed},
                {"out", a.out}};
  write_json_file(out / "config.json", cfg_json);
  write_manifest(out, "simulate", cfg_json, a.cfg.seed,
                 {"observations.csv", "round_stats.csv", "world.json",
                  "true_labels.csv", "config.json"},
                 timer.seconds());
  std::cout << "simulated " << sim.data.interactions.size()
            << " observations over " << a.cfg.rounds << " rounds;"
            << " round-1 positive rate " << sim.rounds.front().positive_rate
            << "\n";
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string runs;
  std::string out;
};

void run_report(const ReportArgs& a) {
  Timer timer;
  const fs::path runs(a.runs);
  if (!fs::is_directory(runs))
    throw InputError("--runs must be a directory: " + a.runs);

  struct Row {
    std::string name;
    json metrics;
  };
  std::vector<Row> rows;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(runs))
    if (e.is_directory() && fs::exists(e.path() / "report.json"))
      dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    const json rep = read_json_file(dir / "report.json");
    rows.push_back({dir.filename().string(), rep.at("metrics")});
  }
  if (rows.empty())
    throw InputError("no run directories with report.json under " + a.runs);

  // Union of metric names, stable order.
  std::vector<std::string> cols;
  for (const auto& r : rows)
    for (auto it = r.metrics.begin(); it != r.metrics.end(); ++it)
      if (std::find(cols.begin(), cols.end(), it.key()) == cols.end())
        cols.push_back(it.key());
  std::sort(cols.begin(), cols.end());

  const fs::path out(a.out);
  fs::create_directories(out);
  std::ofstream csv(out / "comparison.csv");
  std::ofstream txt(out / "comparison.txt");
  if (!csv || !txt) throw InputError("cannot write comparison files");
  csv << "run";
  for (const auto& c : cols) csv << ',' << c;
  csv << '\n';
  txt << "run";
  for (const auto& c : cols) txt << '\t' << c;
  txt << '\n';
  for (const auto& r : rows) {
    csv << r.name;
    txt << r.name;
    for (const auto& c : cols) {
      const std::string v =
          r.metrics.contains(c) ? format_double(r.metrics.at(c).get<double>()) : "";
      csv << ',' << v;
      txt << '\t' << v;
    }
    csv << '\n';
    txt << '\n';
  }
  txt.close();
  std::cout << read_text_file(out / "comparison.txt");
  write_manifest(out, "report", json{{"runs", a.runs}, {"out", a.out}}, 0,
                 {"comparison.csv", "comparison.txt"}, timer.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  Eigen::setNbThreads(1);
  CLI::App app{"Two-stage recommender debiasing: representation pretraining, "
               "bias-aware training, evaluation, and a confounded-feedback "
               "simulator"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);
  app.allow_config_extras(false);

  PrepareArgs prep;
  auto* cmd_prepare = app.add_subcommand("prepare", "Split an interaction log");
  cmd_prepare->add_option("--input", prep.input, "interaction CSV/TSV")->required();
  cmd_prepare->add_option("--format", prep.format, "csv|tsv");
  cmd_prepare->add_option("--rule", prep.rule,
                          "rating_ge_4|watch_ratio_ge_2|passthrough|none");
  cmd_prepare->add_option("--seed", prep.seed, "split seed");
  cmd_prepare->add_option("--out", prep.out, "output directory")->required();

  PretrainArgs pre;
  auto* cmd_pretrain =
      app.add_subcommand("pretrain", "Train representation blocks");
  cmd_pretrain->add_option("--split", pre.split, "split directory")->required();
  cmd_pretrain->add_option("--side", pre.side, "user|item|both");
  cmd_pretrain->add_option("--alpha", pre.alpha, "identity-MI weight");
  cmd_pretrain->add_option("--dz", pre.d_z, "latent dimension");
  cmd_pretrain->add_option("--hidden", pre.hidden, "hidden width");
  cmd_pretrain->add_option("--lr", pre.lr, "learning rate");
  cmd_pretrain->add_option("--epochs", pre.epochs, "epochs");
  cmd_pretrain->add_option("--batch", pre.batch, "batch size");
  cmd_pretrain->add_option("--seed", pre.seed, "seed");
  cmd_pretrain->add_option("--out", pre.out, "output directory")->required();

  TrainArgs tr;
  auto* cmd_train = app.add_subcommand("train", "Train the recommender");
  cmd_train->add_option("--split", tr.split, "split directory")->required();
  cmd_train->add_option("--reps", tr.reps, "representations file");
  cmd_train->add_option("--gamma", tr.cfg.gamma, "bias-loss weight");
  cmd_train->add_option("--lr", tr.cfg.lr, "learning rate");
  cmd_train->add_option("--l2", tr.cfg.l2, "l2 weight");
  cmd_train->add_option("--d", tr.cfg.d, "embedding dimension");
  cmd_train->add_option("--epochs", tr.cfg.epochs, "epoch cap");
  cmd_train->add_option("--patience", tr.cfg.patience, "early-stop patience");
  cmd_train->add_option("--neg-ratio", tr.cfg.neg_ratio, "negatives per positive");
  cmd_train->add_option("--batch", tr.cfg.batch, "batch size");
  cmd_train->add_option("--seed", tr.cfg.seed, "seed");
  cmd_train->add_option("--feedback", tr.feedback, "implicit|explicit");
  cmd_train->add_option("--composition", tr.composition, "standard|additive_logit");
  cmd_train->add_option("--ips-eta", tr.cfg.ips_eta, "IPS exponent (0 = off)");
  cmd_train->add_flag("--full-l2", tr.cfg.full_l2, "decay all rows every step");
  cmd_train->add_option("--out", tr.out, "output directory")->required();

  EvalArgs ev;
  auto* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  cmd_eval->add_option("--model", ev.model, "model checkpoint")->required();
  cmd_eval->add_option("--split", ev.split, "split directory")->required();
  cmd_eval->add_option("--ks", ev.ks, "cutoffs, e.g. 10,20,30");
  cmd_eval->add_option("--labels", ev.labels, "heldout or a user,item CSV");
  cmd_eval->add_option("--seed", ev.seed, "seed (recorded)");
  cmd_eval->add_option("--out", ev.out, "output directory")->required();

  SweepArgs sw;
  auto* cmd_sweep = app.add_subcommand("sweep", "Grid sweep over gamma or alpha");
  cmd_sweep->add_option("--param", sw.param, "gamma|alpha")->required();
  cmd_sweep->add_option("--grid", sw.grid, "comma-separated values");
  cmd_sweep->add_option("--split", sw.split, "split directory")->required();
  cmd_sweep->add_option("--reps", sw.reps, "representations (gamma sweeps)");
  cmd_sweep->add_option("--gamma", sw.cfg.gamma, "gamma for alpha sweeps");
  cmd_sweep->add_option("--lr", sw.cfg.lr, "learning rate");
  cmd_sweep->add_option("--l2", sw.cfg.l2, "l2 weight");
  cmd_sweep->add_option("--d", sw.cfg.d, "embedding dimension");
  cmd_sweep->add_option("--epochs", sw.cfg.epochs, "epoch cap");
  cmd_sweep->add_option("--patience", sw.cfg.patience, "early-stop patience");
  cmd_sweep->add_option("--neg-ratio", sw.cfg.neg_ratio, "negatives per positive");
  cmd_sweep->add_option("--batch", sw.cfg.batch, "batch size");
  cmd_sweep->add_option("--seed", sw.cfg.seed, "seed");
  cmd_sweep->add_option("--feedback", sw.feedback, "implicit|explicit");
  cmd_sweep->add_option("--labels", sw.labels, "heldout or a user,item CSV");
  cmd_sweep->add_option("--vae-epochs", sw.vae_epochs, "alpha sweeps: epochs");
  cmd_sweep->add_option("--vae-batch", sw.vae_batch, "alpha sweeps: batch");
  cmd_sweep->add_option("--vae-hidden", sw.vae_hidden, "alpha sweeps: hidden");
  cmd_sweep->add_option("--out", sw.out, "output directory")->required();

  SimulateArgs sim;
  auto* cmd_simulate =
      app.add_subcommand("simulate", "Generate confounded observations");
  cmd_simulate->add_option("--n-users", sim.cfg.n_users, "users");
  cmd_simulate->add_option("--n-items", sim.cfg.n_items, "items");
  cmd_simulate->add_option("--d-true", sim.cfg.d_true, "true factor dim");
  cmd_simulate->add_option("--conf-strength", sim.cfg.conf_strength,
                           "confounder scale");
  cmd_simulate->add_option("--exposure-k", sim.cfg.exposure_k, "items per round");
  cmd_simulate->add_option("--rounds", sim.cfg.rounds, "feedback rounds");
  cmd_simulate->add_option("--density", sim.cfg.density, "true positive rate");
  cmd_simulate->add_option("--seed", sim.cfg.seed, "seed");
  cmd_simulate->add_option("--out", sim.out, "output directory")->required();

  ReportArgs rep;
  auto* cmd_report = app.add_subcommand("report", "Compare run reports");
  cmd_report->add_option("--runs", rep.runs, "directory of run directories")
      ->required();
  cmd_report->add_option("--out", rep.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (const auto seed = env_seed_override()) {
      prep.seed = *seed;
      pre.seed = *seed;
      tr.cfg.seed = *seed;
      ev.seed = *seed;
      sw.cfg.seed = *seed;
      sim.cfg.seed = *seed;
    }
    Eigen::setNbThreads(env_threads());

    if (cmd_prepare->parsed()) run_prepare(prep);
    else if (cmd_pretrain->parsed()) run_pretrain(pre);
    else if (cmd_train->parsed()) return run_train(tr);
    else if (cmd_eval->parsed()) run_eval(ev);
    else if (cmd_sweep->parsed()) run_sweep(sw);
    else if (cmd_simulate->parsed()) run_simulate(sim);
    else if (cmd_report->parsed()) run_report(rep);
    return kExitOk;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
