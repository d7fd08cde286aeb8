// End-to-end tests that drive the installed command-line binary through
// std::system.  NEOA_CLI_PATH is injected by the build and points at the
// freshly built executable, so these tests exercise argument parsing, exit
// codes and every artifact the commands write.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "neoea/commands.hpp"
#include "test_util.hpp"

using namespace neoea;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI with `args`, capturing exit code and both output streams.
CliResult run_cli(const testutil::TempDir& scratch, const std::string& args) {
  const std::filesystem::path out_path = scratch.path / "cli_stdout.txt";
  const std::filesystem::path err_path = scratch.path / "cli_stderr.txt";
  const std::string cmd = std::string(NEOA_CLI_PATH) + " " + args + " >" + out_path.string() +
                          " 2>" + err_path.string();
  const int raw = std::system(cmd.c_str());
  REQUIRE(raw != -1);
  REQUIRE(WIFEXITED(raw));
  CliResult res;
  res.code = WEXITSTATUS(raw);
  res.out = testutil::read_file(out_path);
  res.err = testutil::read_file(err_path);
  return res;
}

// Minimal fast training configuration against an on-disk dataset.
nlohmann::json small_cli_config(const std::filesystem::path& data_root,
                                const std::filesystem::path& run_dir) {
  nlohmann::json cfg;
  cfg["seed"] = 5;
  cfg["out"] = run_dir.string();
  cfg["dataset.path"] = data_root.string();
  cfg["dataset.fold"] = 1;
  cfg["model.dim"] = 4;
  cfg["train.critic_steps"] = 1;
  cfg["train.triple_batch"] = 8;
  cfg["train.subkg_batch"] = 8;
  cfg["train.neg_ratio"] = 1;
  cfg["train.max_epochs"] = 4;
  cfg["train.eval_every"] = 2;
  cfg["train.patience"] = 10;
  return cfg;
}

std::filesystem::path write_config(const testutil::TempDir& dir, const std::string& name,
                                   const nlohmann::json& cfg) {
  const std::filesystem::path path = dir.path / name;
  testutil::write_file(path, cfg.dump(2) + "\n");
  return path;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  return nlohmann::json::parse(testutil::read_file(path));
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (const char c : text) {
    if (c == '\n') n += 1;
  }
  return n;
}

}  // namespace

TEST_CASE("cli: usage errors exit with code 1") {
  testutil::TempDir dir;
  CHECK(run_cli(dir, "").code == 1);
  CHECK(run_cli(dir, "frobnicate").code == 1);
  CHECK(run_cli(dir, "train").code == 1);
  CHECK(run_cli(dir, "train --config cfg.json --bogus-flag").code == 1);
  CHECK(run_cli(dir, "eval --checkpoint x").code == 1);
}

TEST_CASE("cli: help exits with code 0") {
  testutil::TempDir dir;
  const CliResult top = run_cli(dir, "--help");
  CHECK(top.code == 0);
  CHECK(top.out.find("train") != std::string::npos);
  CHECK(run_cli(dir, "train --help").code == 0);
}

TEST_CASE("cli: train writes a complete run directory") {
  testutil::TempDir dir;
  const std::filesystem::path root = dir.path / "data";
  testutil::write_fixture_dataset(root);
  const std::filesystem::path run = dir.path / "run";
  const std::filesystem::path cfg = write_config(dir, "cfg.json", small_cli_config(root, run));

  const CliResult res = run_cli(dir, "train --config " + cfg.string());
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("status=max_epochs") != std::string::npos);

  // The resolved config feeds back through the parser unchanged.
  const RunConfig rc = parse_run_config(read_json(run / "config_resolved.json"));
  CHECK(rc.seed == 5);
  CHECK(rc.model_dim == 4);
  CHECK(rc.train_max_epochs == 4);

  const std::string log = testutil::read_file(run / "log.jsonl");
  REQUIRE(count_lines(log) == 2);
  const nlohmann::json first = nlohmann::json::parse(log.substr(0, log.find('\n')));
  CHECK(first["epoch"] == 2);
  CHECK(first.contains("L_a"));
  CHECK(first.contains("L_s"));
  CHECK(first.contains("L_sep"));
  CHECK(first.contains("val_L_a"));
  CHECK(count_lines(testutil::read_file(run / "timings.jsonl")) == 2);

  const nlohmann::json report = read_json(run / "report.json");
  CHECK(report["status"] == "max_epochs");
  CHECK(report["epochs_run"] == 4);
  CHECK(report["mode"] == "full");
  CHECK(report["fold"] == 1);
  CHECK(report["num_queries"] == 7);
  CHECK(report["hits@1"].is_number());
  CHECK(report["hits@5"].is_number());
  CHECK(report["mrr"].is_number());
  CHECK(report["long_tail_queries"].get<int>() + report["popular_queries"].get<int>() == 7);

  const std::string csv = testutil::read_file(run / "records.csv");
  CHECK(count_lines(csv) == 8);
  CHECK(csv.rfind("query,truth,rank,group\n", 0) == 0);
  CHECK(csv.find("a3,b3,") != std::string::npos);

  CHECK(std::filesystem::exists(run / "checkpoint_final" / "manifest.json"));
  CHECK(std::filesystem::exists(run / "checkpoint_best" / "manifest.json"));
}

TEST_CASE("cli: identical configurations produce identical artifacts") {
  testutil::TempDir dir;
  const std::filesystem::path root = dir.path / "data";
  testutil::write_fixture_dataset(root);
  const std::filesystem::path cfg =
      write_config(dir, "cfg.json", small_cli_config(root, dir.path / "unused"));

  const std::filesystem::path run_a = dir.path / "run_a";
  const std::filesystem::path run_b = dir.path / "run_b";
  REQUIRE(run_cli(dir, "train --config " + cfg.string() + " --out " + run_a.string()).code == 0);
  REQUIRE(run_cli(dir, "train --config " + cfg.string() + " --out " + run_b.string()).code == 0);

  CHECK(testutil::read_file(run_a / "log.jsonl") == testutil::read_file(run_b / "log.jsonl"));
  CHECK(testutil::read_file(run_a / "records.csv") == testutil::read_file(run_b / "records.csv"));
  CHECK(testutil::read_file(run_a / "report.json") == testutil::read_file(run_b / "report.json"));
  CHECK(testutil::read_file(run_a / "checkpoint_final" / "manifest.json") ==
        testutil::read_file(run_b / "checkpoint_final" / "manifest.json"));
}

TEST_CASE("cli: train configuration errors exit with code 1") {
  testutil::TempDir dir;
  const std::filesystem::path root = dir.path / "data";
  testutil::write_fixture_dataset(root);

  SUBCASE("missing config file") {
    const CliResult res = run_cli(dir, "train --config " + (dir.path / "nope.json").string());
    CHECK(res.code == 1);
    CHECK(res.err.find("error:") != std::string::npos);
  }
  SUBCASE("malformed json") {
    const std::filesystem::path cfg = dir.path / "bad.json";
    testutil::write_file(cfg, "{ not json\n");
    CHECK(run_cli(dir, "train --config " + cfg.string()).code == 1);
  }
  SUBCASE("unknown key") {
    nlohmann::json cfg = small_cli_config(root, dir.path / "run");
    cfg["train.batch_sise"] = 8;
    CHECK(run_cli(dir, "train --config " + write_config(dir, "c.json", cfg).string()).code == 1);
  }
  SUBCASE("both data sources") {
    nlohmann::json cfg = small_cli_config(root, dir.path / "run");
    cfg["synthetic.enabled"] = true;
    CHECK(run_cli(dir, "train --config " + write_config(dir, "c.json", cfg).string()).code == 1);
  }
  SUBCASE("no data source") {
    nlohmann::json cfg = small_cli_config(root, dir.path / "run");
    cfg["dataset.path"] = "";
    CHECK(run_cli(dir, "train --config " + write_config(dir, "c.json", cfg).string()).code == 1);
  }
  SUBCASE("no output directory") {
    nlohmann::json cfg = small_cli_config(root, dir.path / "run");
    cfg["out"] = "";
    CHECK(run_cli(dir, "train --config " + write_config(dir, "c.json", cfg).string()).code == 1);
  }
  SUBCASE("bad mode in config") {
    nlohmann::json cfg = small_cli_config(root, dir.path / "run");
    cfg["train.mode"] = "everything";
    CHECK(run_cli(dir, "train --config " + write_config(dir, "c.json", cfg).string()).code == 1);
  }
  SUBCASE("fold override out of range") {
    const std::filesystem::path cfg =
        write_config(dir, "c.json", small_cli_config(root, dir.path / "run"));
    CHECK(run_cli(dir, "train --config " + cfg.string() + " --fold 9").code == 1);
  }
  SUBCASE("bad mode override") {
    const std::filesystem::path cfg =
        write_config(dir, "c.json", small_cli_config(root, dir.path / "run"));
    CHECK(run_cli(dir, "train --config " + cfg.string() + " --mode everything").code == 1);
  }
}

TEST_CASE("cli: train data errors exit with code 2") {
  testutil::TempDir dir;
  const std::filesystem::path root = dir.path / "broken";
  std::filesystem::create_directories(root);
  nlohmann::json cfg = small_cli_config(root, dir.path / "run");
  const CliResult res = run_cli(dir, "train --config " + write_config(dir, "c.json", cfg).string());
  CHECK(res.code == 2);
  CHECK(res.err.find("error:") != std::string::npos);
}

TEST_CASE("cli: mode override changes the trained mode") {
  testutil::TempDir dir;
  const std::filesystem::path root = dir.path / "data";
  testutil::write_fixture_dataset(root);
  const std::filesystem::path run = dir.path / "run";
  const std::filesystem::path cfg = write_config(dir, "cfg.json", small_cli_config(root, run));

  const CliResult res = run_cli(dir, "train --config " + cfg.string() + " --mode original");
  REQUIRE(res.code == 0);
  const nlohmann::json report = read_json(run / "report.json");
  CHECK(report["mode"] == "original");
  const RunConfig rc = parse_run_config(read_json(run / "config_resolved.json"));
  CHECK(rc.train_mode == "original");
}

TEST_CASE("cli: eval reads a checkpoint back") {
  testutil::TempDir dir;
  const std::filesystem::path root = dir.path / "data";
  testutil::write_fixture_dataset(root);
  const std::filesystem::path run = dir.path / "run";
  const std::filesystem::path cfg = write_config(dir, "cfg.json", small_cli_config(root, run));
  REQUIRE(run_cli(dir, "train --config " + cfg.string()).code == 0);

  SUBCASE("report matches the training-time evaluation") {
    const std::filesystem::path rep_path = dir.path / "eval_report.json";
    const CliResult res =
        run_cli(dir, "eval --checkpoint " + (run / "checkpoint_best").string() + " --dataset " +
                         root.string() + " --fold 1 --out " + rep_path.string());
    REQUIRE(res.code == 0);
    const nlohmann::json eval_rep = read_json(rep_path);
    const nlohmann::json train_rep = read_json(run / "report.json");
    CHECK(eval_rep["hits@1"] == train_rep["hits@1"]);
    CHECK(eval_rep["hits@5"] == train_rep["hits@5"]);
    CHECK(eval_rep["mrr"] == train_rep["mrr"]);
    CHECK(eval_rep["num_queries"] == 7);
    // The same report also went to stdout.
    CHECK(res.out.find("hits@1") != std::string::npos);
  }
  SUBCASE("missing checkpoint exits with code 2") {
    const CliResult res = run_cli(dir, "eval --checkpoint " + (dir.path / "ghost").string() +
                                           " --dataset " + root.string());
    CHECK(res.code == 2);
  }
  SUBCASE("mismatched dataset exits with code 2") {
    const std::filesystem::path other = dir.path / "other";
    REQUIRE(run_cli(dir, "gen-synthetic --out " + other.string() +
                             " --entities 40 --relations 3 --triples 80 --seed 3")
                .code == 0);
    const CliResult res = run_cli(dir, "eval --checkpoint " + (run / "checkpoint_best").string() +
                                           " --dataset " + other.string());
    CHECK(res.code == 2);
    CHECK(res.err.find("error:") != std::string::npos);
  }
}

TEST_CASE("cli: gen-synthetic writes a loadable dataset") {
  testutil::TempDir dir;
  const std::filesystem::path out = dir.path / "synth";
  const CliResult res = run_cli(
      dir, "gen-synthetic --out " + out.string() +
               " --entities 40 --relations 3 --triples 80 --seed-fraction 0.5 --seed 3");
  REQUIRE(res.code == 0);
  CHECK(res.out.find("entities=40 relations=3") != std::string::npos);

  for (const char* name : {"rel_triples_1", "rel_triples_2", "ent_links"}) {
    CHECK(std::filesystem::exists(out / name));
  }
  for (int fold = 1; fold <= 5; ++fold) {
    CHECK(std::filesystem::exists(out / "721_5fold" / std::to_string(fold) / "test_links"));
  }

  // Every fold passes the loader's partition checks.  Entities that end up
  // with no triple and no link are absent from the files, so the loaded
  // count can fall below the generator's target.
  for (int fold = 1; fold <= 5; ++fold) {
    const LoadedDataset ds = load_openea_dataset(out, fold);
    CHECK(ds.kg1.num_entities() <= 40);
    CHECK(ds.kg1.num_entities() >= 20);
    CHECK(ds.alignment.pairs.size() == 20);
  }

  // Same spec, same bytes.
  const std::filesystem::path rerun = dir.path / "synth2";
  REQUIRE(run_cli(dir, "gen-synthetic --out " + rerun.string() +
                           " --entities 40 --relations 3 --triples 80 --seed-fraction 0.5 --seed 3")
              .code == 0);
  CHECK(testutil::read_file(out / "rel_triples_2") == testutil::read_file(rerun / "rel_triples_2"));
  CHECK(testutil::read_file(out / "ent_links") == testutil::read_file(rerun / "ent_links"));
}

TEST_CASE("cli: check-grads reports a pass") {
  testutil::TempDir dir;
  const CliResult res = run_cli(dir, "check-grads --instances 3");
  CHECK(res.code == 0);
  CHECK(res.out.find("PASS") != std::string::npos);
  CHECK(res.out.find("max relative error") != std::string::npos);
}

TEST_CASE("cli: diagnose writes bound, uniformity and histogram reports") {
  testutil::TempDir dir;
  const std::filesystem::path root = dir.path / "data";
  testutil::write_fixture_dataset(root);

  const std::filesystem::path run_full = dir.path / "run_full";
  const std::filesystem::path run_orig = dir.path / "run_orig";
  const std::filesystem::path cfg =
      write_config(dir, "cfg.json", small_cli_config(root, dir.path / "unused"));
  REQUIRE(run_cli(dir, "train --config " + cfg.string() + " --out " + run_full.string()).code == 0);
  REQUIRE(run_cli(dir, "train --config " + cfg.string() + " --out " + run_orig.string() +
                           " --mode original")
              .code == 0);

  const std::filesystem::path diag = dir.path / "diag";
  const CliResult res =
      run_cli(dir, "diagnose --checkpoint " + (run_full / "checkpoint_best").string() +
                       " --baseline " + (run_orig / "checkpoint_best").string() + " --dataset " +
                       root.string() + " --out " + diag.string() + " --bins 1,3 --lambda 0.5");
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("bound:") != std::string::npos);

  // Every test-fold pair has an outgoing triple on both sides, so all
  // seven become bound cases.
  const nlohmann::json bound = read_json(diag / "bound_report.json");
  CHECK(bound["cases"] == 7);
  CHECK(bound["checked"].get<int>() + bound["precondition_unmet"].get<int>() == 7);
  CHECK(bound["violations"].is_number());
  CHECK(bound["lambda"] == 0.5);

  // Both graphs are small enough that no entity is sampled away.
  const nlohmann::json uni = read_json(diag / "uniformity_checkpoint_best.json");
  CHECK(uni["n"] == 24);
  CHECK(uni["mean_cosine"].is_number());
  CHECK(uni["energy"].is_number());
  CHECK(uni["nn_hist"].size() == 32);

  // Header plus (bins + 1) rows for each of the two groups.
  const std::string hist = testutil::read_file(diag / "rank_hist.csv");
  CHECK(count_lines(hist) == 7);
  CHECK(hist.rfind("bin_low,bin_high,count,group\n", 0) == 0);
  CHECK(hist.find(",inf,") != std::string::npos);

  // The ring makes every test query long-tail, so the popular side is null.
  const nlohmann::json imp = read_json(diag / "improvement.json");
  REQUIRE(imp["long_tail"].is_object());
  CHECK(imp["long_tail"]["count"] == 7);
  CHECK(imp["popular"].is_null());

  SUBCASE("bad bins exit with code 1") {
    CHECK(run_cli(dir, "diagnose --checkpoint " + (run_full / "checkpoint_best").string() +
                           " --dataset " + root.string() + " --out " + diag.string() +
                           " --bins 5,2")
              .code == 1);
  }
  SUBCASE("missing checkpoint exits with code 2") {
    CHECK(run_cli(dir, "diagnose --checkpoint " + (dir.path / "ghost").string() + " --dataset " +
                           root.string() + " --out " + diag.string())
              .code == 2);
  }
}

TEST_CASE("cli: ablate sweeps every mode over the given seeds") {
  testutil::TempDir dir;
  const std::filesystem::path root = dir.path / "data";
  testutil::write_fixture_dataset(root);
  nlohmann::json cfg = small_cli_config(root, dir.path / "abl");
  cfg["train.max_epochs"] = 2;
  cfg["train.eval_every"] = 1;
  const std::filesystem::path cfg_path = write_config(dir, "cfg.json", cfg);

  const CliResult res = run_cli(dir, "ablate --config " + cfg_path.string() + " --seeds 1,2");
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("full") != std::string::npos);
  CHECK(res.out.find("original") != std::string::npos);

  const nlohmann::json abl = read_json(dir.path / "abl" / "ablation.json");
  CHECK(abl["cells"].size() == 8);
  for (const char* m : {"full", "partial", "basic", "original"}) {
    REQUIRE(abl["summary"].contains(m));
    CHECK(abl["summary"][m]["runs"] == 2);
    CHECK(abl["summary"][m]["hits@1"].is_number());
  }
  const std::string csv = testutil::read_file(dir.path / "abl" / "ablation.csv");
  CHECK(count_lines(csv) == 9);
  CHECK(csv.rfind("mode,seed,", 0) == 0);
  CHECK(std::filesystem::exists(dir.path / "abl" / "runs" / "full_1" / "report.json"));
  CHECK(std::filesystem::exists(dir.path / "abl" / "runs" / "original_2" / "report.json"));

  SUBCASE("bad seed list exits with code 1") {
    CHECK(run_cli(dir, "ablate --config " + cfg_path.string() + " --seeds 1,,2").code == 1);
    CHECK(run_cli(dir, "ablate --config " + cfg_path.string() + " --seeds x").code == 1);
  }
}

TEST_CASE("cli: train --cv reports per-fold metrics") {
  testutil::TempDir dir;
  const std::filesystem::path root = dir.path / "data";
  testutil::write_fixture_dataset(root);
  const std::filesystem::path run = dir.path / "cv_run";
  nlohmann::json cfg = small_cli_config(root, run);
  cfg["train.max_epochs"] = 2;
  cfg["train.eval_every"] = 1;
  const CliResult res =
      run_cli(dir, "train --cv --config " + write_config(dir, "cfg.json", cfg).string());
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("cv hits@1=") != std::string::npos);

  const nlohmann::json rep = read_json(run / "cv_report.json");
  REQUIRE(rep["folds"].size() == 5);
  for (const auto& f : rep["folds"]) {
    CHECK(f["num_queries"] == 7);
  }
  CHECK(rep["mean"]["hits@1"].is_number());
  CHECK(rep["sd"]["mrr"].is_number());
  // A single-run report is not written in cross-validation mode.
  CHECK_FALSE(std::filesystem::exists(run / "report.json"));
}

TEST_CASE("cli: synthetic training run needs no dataset on disk") {
  testutil::TempDir dir;
  const std::filesystem::path run = dir.path / "run";
  nlohmann::json cfg;
  cfg["seed"] = 11;
  cfg["out"] = run.string();
  cfg["synthetic.enabled"] = true;
  cfg["synthetic.entities"] = 40;
  cfg["synthetic.relations"] = 3;
  cfg["synthetic.triples"] = 80;
  cfg["synthetic.seed_fraction"] = 0.5;
  cfg["model.dim"] = 4;
  cfg["train.critic_steps"] = 1;
  cfg["train.triple_batch"] = 8;
  cfg["train.subkg_batch"] = 8;
  cfg["train.neg_ratio"] = 1;
  cfg["train.max_epochs"] = 2;
  cfg["train.eval_every"] = 1;
  const CliResult res = run_cli(dir, "train --config " + write_config(dir, "cfg.json", cfg).string());
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  // The generated dataset is preserved inside the run directory.
  CHECK(std::filesystem::exists(run / "dataset" / "rel_triples_1"));
  CHECK(std::filesystem::exists(run / "report.json"));
}
