// Command-line front end: train / eval / ablate / diagnose / gen-synthetic /
// check-grads.  Exit codes: 0 success, 1 usage or configuration error,
// 2 data or numeric failure.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "neoea/commands.hpp"

namespace {

std::vector<std::size_t> parse_bins(const std::string& csv) {
  std::vector<std::size_t> bins;
  std::size_t start = 0;
  std::size_t prev = 0;
  while (start <= csv.size()) {
    const std::size_t pos = csv.find(',', start);
    const std::string tok =
        csv.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
    if (tok.empty() || end == nullptr || *end != '\0' || v <= prev) {
      throw neoea::ConfigError("--bins must be a strictly increasing list of ranks");
    }
    bins.push_back(static_cast<std::size_t>(v));
    prev = v;
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (bins.empty()) throw neoea::ConfigError("--bins must not be empty");
  return bins;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph entity alignment trainer"};
  app.require_subcommand(1);

  std::string config_path, out, mode, seeds_csv;
  std::uint64_t seed = 0;
  int fold = 0;
  bool cv = false;

  CLI::App* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", config_path, "JSON config file")->required();
  train->add_option("--out", out, "run directory (overrides the config)");
  train->add_option("--seed", seed, "master seed (overrides the config)");
  train->add_option("--fold", fold, "fold in 1..5 (overrides the config)");
  train->add_option("--mode", mode, "full|partial|basic|original (overrides the config)");
  train->add_flag("--cv", cv, "run all five folds and report mean/sd metrics");

  std::string checkpoint_dir, dataset_root, eval_out;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset fold");
  eval->add_option("--checkpoint", checkpoint_dir, "checkpoint directory")->required();
  eval->add_option("--dataset", dataset_root, "dataset root directory")->required();
  eval->add_option("--fold", fold, "fold in 1..5")->default_val(1);
  eval->add_option("--out", eval_out, "also write the report to this file");

  CLI::App* ablate = app.add_subcommand("ablate", "train every mode over several seeds");
  ablate->add_option("--config", config_path, "JSON config file")->required();
  ablate->add_option("--out", out, "output directory (overrides the config)");
  ablate->add_option("--seed", seed, "master seed (overrides the config)");
  ablate->add_option("--fold", fold, "fold in 1..5 (overrides the config)");
  ablate->add_option("--seeds", seeds_csv, "comma-separated training seeds");

  std::string baseline_dir, bins_csv = "1,5,20,100";
  double lambda = 0.5;
  CLI::App* diagnose = app.add_subcommand("diagnose", "bound, uniformity and rank diagnostics");
  diagnose->add_option("--checkpoint", checkpoint_dir, "checkpoint directory")->required();
  diagnose->add_option("--baseline", baseline_dir, "baseline checkpoint for rank improvement");
  diagnose->add_option("--dataset", dataset_root, "dataset root directory")->required();
  diagnose->add_option("--fold", fold, "fold in 1..5")->default_val(1);
  diagnose->add_option("--out", out, "output directory")->required();
  diagnose->add_option("--bins", bins_csv, "rank histogram bin edges (default 1,5,20,100)");
  diagnose->add_option("--lambda", lambda, "score threshold used by the bound check");

  neoea::SyntheticSpec spec;
  CLI::App* gen = app.add_subcommand("gen-synthetic", "generate a benchmark dataset");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--entities", spec.entities, "entities per graph");
  gen->add_option("--relations", spec.relations, "relations per graph");
  gen->add_option("--triples", spec.triples, "triples per graph");
  gen->add_option("--exponent", spec.exponent, "degree-distribution exponent (> 1)");
  gen->add_option("--noise", spec.noise, "fraction of kg2 triples to rewire");
  gen->add_option("--seed-fraction", spec.seed_fraction, "fraction of entities with a seed link");
  gen->add_option("--seed", spec.seed, "generator seed");

  std::size_t instances = 20;
  double tol = 1e-4;
  CLI::App* grads = app.add_subcommand("check-grads", "finite-difference gradient suite");
  grads->add_option("--instances", instances, "randomized instances to check");
  grads->add_option("--tol", tol, "maximum allowed relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    neoea::CliOverrides ov;
    if (train->count("--out") || ablate->count("--out")) ov.out = out;
    if (train->count("--seed") || ablate->count("--seed")) ov.seed = seed;
    if (train->count("--fold") || ablate->count("--fold")) ov.fold = fold;
    if (train->count("--mode")) ov.mode = mode;

    if (train->parsed()) {
      return neoea::cmd_train(config_path, ov, cv);
    }
    if (eval->parsed()) {
      std::optional<std::string> out_path;
      if (eval->count("--out")) out_path = eval_out;
      return neoea::cmd_eval(checkpoint_dir, dataset_root, fold, out_path);
    }
    if (ablate->parsed()) {
      std::optional<std::string> seeds;
      if (ablate->count("--seeds")) seeds = seeds_csv;
      return neoea::cmd_ablate(config_path, ov, seeds);
    }
    if (diagnose->parsed()) {
      std::optional<std::string> baseline;
      if (diagnose->count("--baseline")) baseline = baseline_dir;
      return neoea::cmd_diagnose(checkpoint_dir, baseline, dataset_root, fold, out,
                                 parse_bins(bins_csv), lambda);
    }
    if (gen->parsed()) {
      return neoea::cmd_gen_synthetic(spec, out);
    }
    if (grads->parsed()) {
      return neoea::cmd_check_grads(instances, tol);
    }
  } catch (const neoea::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
