#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "usd3/datagen.hpp"
#include "usd3/io.hpp"
#include "usd3/metrics.hpp"
#include "usd3/oracle.hpp"
#include "usd3/sampler.hpp"
#include "usd3/trainer.hpp"

namespace {

using namespace usd3;

struct MakeDataArgs {
  std::string kind = "markov1";
  int K = 4;
  int D = 8;
  int count = 1000;
  std::uint64_t seed = 1;
  double noise = 0.05;
  std::string out;
};

void cmd_make_data(const MakeDataArgs& a) {
  Dataset ds;
  ds.K = a.K;
  ds.D = a.D;
  if (a.kind == "markov1") ds.sequences = make_markov1(a.K, a.D, a.count, a.seed);
  else if (a.kind == "iid") ds.sequences = make_iid(a.K, a.D, a.count, a.seed);
  else if (a.kind == "two-mode") ds.sequences = make_two_mode(a.K, a.D, a.count, a.seed, a.noise);
  else throw std::invalid_argument("unknown data kind: " + a.kind);
  save_dataset(ds, a.out);
  std::cout << "wrote " << ds.sequences.size() << " sequences to " << a.out << "\n";
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string trace;
  std::int64_t seed = -1;  // override when >= 0
};

void cmd_train(const TrainArgs& a) {
  const Config cfg = load_config(a.config);
  TrainConfig tc = train_config_from(cfg);
  if (a.seed >= 0) tc.seed = static_cast<std::uint64_t>(a.seed);
  const Dataset ds = load_dataset(a.data);
  if (ds.K != tc.dims.K || ds.D != tc.dims.D)
    throw std::invalid_argument("dataset (K,D) does not match the model config");
  const TrainResult res = train(tc, ds.sequences);
  save_checkpoint(Checkpoint::from_train(tc, res.params, config_digest(cfg)), a.out);
  if (!a.trace.empty()) save_loss_trace(res.trace, a.trace);
  if (!res.trace.empty())
    std::cout << "final mean loss " << res.trace.back().mean.total << " after " << tc.epochs
              << " epochs\n";
  std::cout << "wrote checkpoint to " << a.out << "\n";
}

struct GenerateArgs {
  std::string checkpoint;
  int num_samples = 16;
  std::uint64_t seed = 0;
  int steps = 50;
  std::string grid = "uniform";
  double grid_ratio = 0.25;
  int mcmc_steps = 0;
  double mcmc_dt = 0.01;
  int mcmc_start = 0;
  bool ema = false;
  std::string out;
};

void cmd_generate(const GenerateArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  TimeGrid grid = a.grid == "geometric" ? TimeGrid::geometric(ck.sched, a.steps, a.grid_ratio)
                                        : TimeGrid::uniform(ck.sched, a.steps);
  McmcOptions mcmc;
  mcmc.enabled = a.mcmc_steps > 0;
  mcmc.steps = a.mcmc_steps;
  mcmc.dt = a.mcmc_dt;
  mcmc.start_step = a.mcmc_start > 0 ? a.mcmc_start : grid.steps();
  McmcStats stats;
  Dataset ds;
  ds.K = ck.params.dims.K;
  ds.D = ck.params.dims.D;
  ds.sequences = generate_batch(ck.params, grid, ck.m, ck.sched, a.seed, a.num_samples, mcmc,
                                &stats, a.ema);
  save_dataset(ds, a.out);
  std::cout << "wrote " << ds.sequences.size() << " samples to " << a.out << "\n";
  if (mcmc.enabled)
    std::cout << "corrector rounds " << stats.rounds << ", clipped " << stats.clipped << "\n";
}

struct EvalArgs {
  std::string generated;
  std::string train;
  std::string test;
  std::string ngrams = "1,2,3";
  std::string out;
};

void cmd_eval(const EvalArgs& a) {
  const Dataset gen = load_dataset(a.generated);
  const Dataset train = load_dataset(a.train);
  const Dataset test = load_dataset(a.test);
  std::vector<int> ns;
  std::stringstream ss(a.ngrams);
  std::string tok;
  while (std::getline(ss, tok, ',')) ns.push_back(std::stoi(tok));

  std::ostringstream csv;
  csv << "metric,n,value\n";
  char buf[64];
  const auto row = [&](const std::string& name, const std::string& n, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    csv << name << ',' << n << ',' << buf << "\n";
  };
  for (int n : ns) {
    row("hellinger", std::to_string(n), ngram_hellinger(gen.sequences, test.sequences, n));
    row("outliers", std::to_string(n), ngram_outliers(gen.sequences, train.sequences, n));
  }
  const EditDistStats ed = diverse_edit_distance(gen.sequences);
  row("edit_mean", "", ed.mean);
  row("edit_std", "", ed.stddev);
  const double dist_tr = mean_min_edit_distance(gen.sequences, test.sequences);
  const double dist_ts = mean_min_edit_distance(gen.sequences, train.sequences);
  row("dist_tr", "", dist_tr);
  row("dist_ts", "", dist_ts);
  row("parroting", "", parroting_ratio(dist_tr, dist_ts));

  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::invalid_argument("cannot write " + a.out);
    f << csv.str();
    std::cout << "wrote metrics to " << a.out << "\n";
  }
}

void cmd_verify(std::uint64_t seed) {
  const auto checks = oracle::run_verify_suite(seed);
  bool all_pass = true;
  std::printf("%-28s %14s %10s  %s\n", "check", "max_dev", "tol", "status");
  for (const auto& c : checks) {
    std::printf("%-28s %14.3e %10.0e  %s\n", c.name.c_str(), c.max_dev, c.tol,
                c.pass ? "pass" : "FAIL");
    all_pass = all_pass && c.pass;
  }
  if (!all_pass) throw numeric_error("verification deviations exceed tolerance");
  std::cout << "all checks passed\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unified discrete-diffusion engine for categorical sequences"};
  app.require_subcommand(1);

  MakeDataArgs mk;
  auto* mk_cmd = app.add_subcommand("make-data", "generate a synthetic dataset");
  mk_cmd->add_option("--kind", mk.kind)->check(CLI::IsMember({"markov1", "iid", "two-mode"}));
  mk_cmd->add_option("--k", mk.K, "categories");
  mk_cmd->add_option("--d", mk.D, "sequence length");
  mk_cmd->add_option("--count", mk.count);
  mk_cmd->add_option("--seed", mk.seed);
  mk_cmd->add_option("--noise", mk.noise, "two-mode flip probability");
  mk_cmd->add_option("--out", mk.out)->required();

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "train a model from a config and dataset");
  tr_cmd->add_option("--config", tr.config)->required();
  tr_cmd->add_option("--data", tr.data)->required();
  tr_cmd->add_option("--out", tr.out)->required();
  tr_cmd->add_option("--trace", tr.trace, "loss trace CSV path");
  tr_cmd->add_option("--seed", tr.seed, "override the config seed");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "sample sequences from a checkpoint");
  gen_cmd->add_option("--checkpoint", gen.checkpoint)->required();
  gen_cmd->add_option("--num-samples", gen.num_samples);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--steps", gen.steps);
  gen_cmd->add_option("--grid", gen.grid)->check(CLI::IsMember({"uniform", "geometric"}));
  gen_cmd->add_option("--grid-ratio", gen.grid_ratio);
  gen_cmd->add_option("--mcmc-steps", gen.mcmc_steps, "corrector rounds per step (0 = off)");
  gen_cmd->add_option("--mcmc-dt", gen.mcmc_dt);
  gen_cmd->add_option("--mcmc-start", gen.mcmc_start, "apply corrector in the last S steps");
  gen_cmd->add_flag("--ema", gen.ema, "sample with EMA weights");
  gen_cmd->add_option("--out", gen.out)->required();

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "compute sample-quality metrics");
  ev_cmd->add_option("--generated", ev.generated)->required();
  ev_cmd->add_option("--train", ev.train)->required();
  ev_cmd->add_option("--test", ev.test)->required();
  ev_cmd->add_option("--ngrams", ev.ngrams, "comma list of n-gram orders");
  ev_cmd->add_option("--out", ev.out, "metrics CSV path (default stdout)");

  std::uint64_t verify_seed = 20240817;
  auto* vf_cmd = app.add_subcommand("verify", "run the closed-form equivalence suite");
  vf_cmd->add_option("--seed", verify_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (mk_cmd->parsed()) cmd_make_data(mk);
    if (tr_cmd->parsed()) cmd_train(tr);
    if (gen_cmd->parsed()) cmd_generate(gen);
    if (ev_cmd->parsed()) cmd_eval(ev);
    if (vf_cmd->parsed()) cmd_verify(verify_seed);
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
