#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neoea/errors.hpp"
#include "neoea/eval.hpp"
#include "neoea/gradsuite.hpp"
#include "neoea/kg.hpp"
#include "neoea/runconfig.hpp"
#include "neoea/synthetic.hpp"
#include "neoea/trainer.hpp"

namespace neoea {

struct CliOverrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> fold;
  std::optional<std::string> mode;
};

inline void apply_overrides(RunConfig& rc, const CliOverrides& ov) {
  if (ov.out) rc.out = *ov.out;
  if (ov.seed) rc.seed = *ov.seed;
  if (ov.fold) {
    if (*ov.fold < 1 || *ov.fold > 5) throw ConfigError("--fold must be in 1..5");
    rc.fold = *ov.fold;
  }
  if (ov.mode) {
    parse_ablation_mode(*ov.mode);
    rc.train_mode = *ov.mode;
  }
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

inline nlohmann::json eval_report_json(const EvalReport& rep) {
  nlohmann::json j;
  j["fold"] = rep.fold;
  j["hits@1"] = rep.hits1;
  j["hits@5"] = rep.hits5;
  j["mrr"] = rep.mrr;
  j["num_queries"] = rep.num_queries;
  return j;
}

inline void warn_duplicates(const LoadedDataset& ds) {
  if (ds.duplicate_triples_kg1 > 0) {
    std::fprintf(stderr, "warning: %llu duplicate triples ignored in kg1\n",
                 static_cast<unsigned long long>(ds.duplicate_triples_kg1));
  }
  if (ds.duplicate_triples_kg2 > 0) {
    std::fprintf(stderr, "warning: %llu duplicate triples ignored in kg2\n",
                 static_cast<unsigned long long>(ds.duplicate_triples_kg2));
  }
}

// Training log as JSON lines.  Timing is kept out of the main log so two
// runs of the same configuration produce identical bytes; wall-clock data
// goes to the sidecar.
inline std::string render_log_jsonl(const std::vector<LogRecord>& log) {
  std::string text;
  for (const LogRecord& rec : log) {
    nlohmann::json j;
    j["L_a"] = rec.l_align;
    j["L_s"] = rec.l_score;
    j["L_sep"] = rec.l_sep;
    j["epoch"] = rec.epoch;
    j["val_L_a"] = rec.val_l_align;
    text += j.dump();
    text += "\n";
  }
  return text;
}

inline std::string render_timings_jsonl(const std::vector<LogRecord>& log) {
  std::string text;
  for (const LogRecord& rec : log) {
    nlohmann::json j;
    j["epoch"] = rec.epoch;
    j["wall_ms"] = rec.wall_ms;
    text += j.dump();
    text += "\n";
  }
  return text;
}

inline std::string render_records_csv(const EvalReport& rep, const KnowledgeGraph& kg1,
                                      const KnowledgeGraph& kg2) {
  std::string text = "query,truth,rank,group\n";
  for (const RankingRecord& r : rep.records) {
    text += kg1.entity_labels[r.query.idx];
    text += ",";
    text += kg2.entity_labels[r.truth.idx];
    text += ",";
    text += std::to_string(r.rank);
    text += ",";
    text += group_name(r.group);
    text += "\n";
  }
  return text;
}

inline std::uint64_t read_checkpoint_hash(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw DataError("missing checkpoint manifest: " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("unreadable checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  return parse_u64_hex(j.at("config_hash").get<std::string>());
}

inline void check_checkpoint_matches(const TrainState& st, const LoadedDataset& ds) {
  const std::size_t total_e = ds.kg1.num_entities() + ds.kg2.num_entities();
  const std::size_t total_r = ds.kg1.num_relations() + ds.kg2.num_relations();
  if (st.emb.entity_emb.rows != total_e || st.emb.entities_kg1 != ds.kg1.num_entities() ||
      st.emb.relation_emb.rows != total_r || st.emb.relations_kg1 != ds.kg1.num_relations()) {
    throw DataError("checkpoint embeddings do not match the dataset's entity/relation counts");
  }
}

}  // namespace detail

// Resolves the data source and, for synthetic runs, writes the generated
// dataset under the run directory.  Returns the dataset root.
inline std::filesystem::path resolve_data_root(const RunConfig& rc,
                                               const std::filesystem::path& run_dir) {
  const bool use_dataset = !rc.dataset_path.empty();
  if (use_dataset && rc.synthetic_enabled) {
    throw ConfigError("both dataset.path and synthetic.enabled are set; pick one data source");
  }
  if (!use_dataset && !rc.synthetic_enabled) {
    throw ConfigError("no data source: set dataset.path or synthetic.enabled");
  }
  if (use_dataset) return rc.dataset_path;
  const std::filesystem::path root = run_dir / "dataset";
  write_openea(generate_synthetic(rc.synthetic_spec()), root);
  return root;
}

inline int cmd_train(const std::string& config_path, const CliOverrides& ov, bool cv) {
  RunConfig rc = load_run_config(config_path);
  apply_overrides(rc, ov);
  if (rc.out.empty()) {
    throw ConfigError("train needs an output directory ('out' in the config or --out)");
  }
  // Source selection is validated before anything is written.
  if (!rc.dataset_path.empty() && rc.synthetic_enabled) {
    throw ConfigError("both dataset.path and synthetic.enabled are set; pick one data source");
  }
  if (rc.dataset_path.empty() && !rc.synthetic_enabled) {
    throw ConfigError("no data source: set dataset.path or synthetic.enabled");
  }
  const std::filesystem::path run_dir = rc.out;
  std::filesystem::create_directories(run_dir);
  detail::write_text(run_dir / "config_resolved.json", resolved_config_json(rc).dump(2) + "\n");
  const std::filesystem::path root = resolve_data_root(rc, run_dir);
  const TrainConfig tc = rc.train_config();

  if (cv) {
    CvReport rep = cross_validate(root, tc);
    nlohmann::json j;
    j["folds"] = nlohmann::json::array();
    for (const EvalReport& f : rep.folds) j["folds"].push_back(detail::eval_report_json(f));
    j["mean"] = {{"hits@1", rep.mean_hits1}, {"hits@5", rep.mean_hits5}, {"mrr", rep.mean_mrr}};
    j["sd"] = {{"hits@1", rep.sd_hits1}, {"hits@5", rep.sd_hits5}, {"mrr", rep.sd_mrr}};
    detail::write_text(run_dir / "cv_report.json", j.dump(2) + "\n");
    std::printf("cv hits@1=%.4f+/-%.4f hits@5=%.4f+/-%.4f mrr=%.4f+/-%.4f\n", rep.mean_hits1,
                rep.sd_hits1, rep.mean_hits5, rep.sd_hits5, rep.mean_mrr, rep.sd_mrr);
    return 0;
  }

  LoadedDataset ds = load_openea_dataset(root, rc.fold);
  detail::warn_duplicates(ds);
  TrainResult tr = train(ds.kg1, ds.kg2, ds.alignment, tc);

  detail::write_text(run_dir / "log.jsonl", detail::render_log_jsonl(tr.log));
  detail::write_text(run_dir / "timings.jsonl", detail::render_timings_jsonl(tr.log));

  const std::uint64_t hash = config_hash(rc);
  save_checkpoint(tr.state, tc, hash, run_dir / "checkpoint_final");
  TrainState best = tr.state;
  if (best.has_best) {
    best.emb = tr.state.best_emb;
    best.critics = tr.state.best_critics;
  }
  save_checkpoint(best, tc, hash, run_dir / "checkpoint_best");

  EvalReport rep = evaluate_fold(tr.state.final_embeddings(), ds.kg1, ds.alignment, rc.fold);
  std::size_t long_tail = 0;
  for (const RankingRecord& r : rep.records) {
    if (r.group == Group::LongTail) long_tail += 1;
  }
  nlohmann::json report = detail::eval_report_json(rep);
  report["status"] = tr.state.status;
  report["epochs_run"] = tr.state.epoch;
  report["best_epoch"] = tr.state.best_epoch;
  report["best_val"] =
      tr.state.has_best ? nlohmann::json(tr.state.best_val) : nlohmann::json(nullptr);
  report["mode"] = ablation_mode_name(tc.mode);
  report["long_tail_queries"] = long_tail;
  report["popular_queries"] = rep.records.size() - long_tail;
  detail::write_text(run_dir / "report.json", report.dump(2) + "\n");
  detail::write_text(run_dir / "records.csv", detail::render_records_csv(rep, ds.kg1, ds.kg2));

  std::printf("status=%s epochs=%d hits@1=%.4f hits@5=%.4f mrr=%.4f\n",
              tr.state.status.c_str(), tr.state.epoch, rep.hits1, rep.hits5, rep.mrr);
  return 0;
}

inline int cmd_eval(const std::string& checkpoint_dir, const std::string& dataset_root, int fold,
                    const std::optional<std::string>& out_path) {
  const TrainState st =
      load_checkpoint(checkpoint_dir, detail::read_checkpoint_hash(checkpoint_dir));
  LoadedDataset ds = load_openea_dataset(dataset_root, fold);
  detail::warn_duplicates(ds);
  detail::check_checkpoint_matches(st, ds);
  const EvalReport rep = evaluate_fold(st.final_embeddings(), ds.kg1, ds.alignment, fold);
  const std::string text = detail::eval_report_json(rep).dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (out_path) detail::write_text(*out_path, text);
  return 0;
}

// ---- ablation ----------------------------------------------------------------

struct AblationCell {
  AblationMode mode = AblationMode::Full;
  std::uint64_t seed = 0;
  EvalReport report;
  std::string status;
  int epochs = 0;
};

struct AblationSweep {
  std::vector<AblationCell> cells;

  const AblationCell* find(AblationMode mode, std::uint64_t seed) const {
    for (const AblationCell& c : cells) {
      if (c.mode == mode && c.seed == seed) return &c;
    }
    return nullptr;
  }

  double mean_hits1(AblationMode mode) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const AblationCell& c : cells) {
      if (c.mode == mode) {
        sum += c.report.hits1;
        n += 1;
      }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
  }
};

// Trains every (seed, mode) combination on the seed's dataset.  All modes
// at a given seed share one dataset and one training seed, so mode
// comparisons are paired.
inline AblationSweep run_ablation(
    const std::function<std::filesystem::path(std::uint64_t)>& root_for_seed,
    const std::vector<std::uint64_t>& seeds, const std::vector<AblationMode>& modes,
    const TrainConfig& base, int fold) {
  AblationSweep sweep;
  for (const std::uint64_t seed : seeds) {
    const std::filesystem::path root = root_for_seed(seed);
    LoadedDataset ds = load_openea_dataset(root, fold);
    for (const AblationMode mode : modes) {
      TrainConfig cfg = base;
      cfg.mode = mode;
      cfg.seed = seed;
      TrainResult tr = train(ds.kg1, ds.kg2, ds.alignment, cfg);
      AblationCell cell;
      cell.mode = mode;
      cell.seed = seed;
      cell.report = evaluate_fold(tr.state.final_embeddings(), ds.kg1, ds.alignment, fold);
      cell.status = tr.state.status;
      cell.epochs = tr.state.epoch;
      sweep.cells.push_back(std::move(cell));
    }
  }
  return sweep;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t pos = csv.find(',', start);
    const std::string tok =
        csv.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (tok.empty()) throw ConfigError("bad seed list: " + csv);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
    if (end == nullptr || *end != '\0') throw ConfigError("bad seed list: " + csv);
    seeds.push_back(static_cast<std::uint64_t>(v));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (seeds.empty()) throw ConfigError("bad seed list: " + csv);
  return seeds;
}

inline int cmd_ablate(const std::string& config_path, const CliOverrides& ov,
                      const std::optional<std::string>& seeds_csv) {
  RunConfig rc = load_run_config(config_path);
  apply_overrides(rc, ov);
  if (rc.out.empty()) {
    throw ConfigError("ablate needs an output directory ('out' in the config or --out)");
  }
  if (!rc.dataset_path.empty() && rc.synthetic_enabled) {
    throw ConfigError("both dataset.path and synthetic.enabled are set; pick one data source");
  }
  if (rc.dataset_path.empty() && !rc.synthetic_enabled) {
    throw ConfigError("no data source: set dataset.path or synthetic.enabled");
  }
  std::vector<std::uint64_t> seeds;
  if (seeds_csv) {
    seeds = parse_seed_list(*seeds_csv);
  } else {
    for (std::uint64_t i = 1; i <= 5; ++i) {
      seeds.push_back(derive_seed(rc.seed, stream::kAblate, i));
    }
  }
  const std::filesystem::path run_dir = rc.out;
  std::filesystem::create_directories(run_dir);
  detail::write_text(run_dir / "config_resolved.json", resolved_config_json(rc).dump(2) + "\n");

  auto root_for_seed = [&](std::uint64_t seed) -> std::filesystem::path {
    if (!rc.dataset_path.empty()) return rc.dataset_path;
    SyntheticSpec spec = rc.synthetic_spec();
    spec.seed = derive_seed(seed, stream::kSynthetic);
    const std::filesystem::path root = run_dir / "runs" / ("data_" + std::to_string(seed));
    write_openea(generate_synthetic(spec), root);
    return root;
  };
  const std::vector<AblationMode> modes{AblationMode::Full, AblationMode::Partial,
                                        AblationMode::Basic, AblationMode::Original};
  const AblationSweep sweep = run_ablation(root_for_seed, seeds, modes, rc.train_config(), rc.fold);

  nlohmann::json cells = nlohmann::json::array();
  std::string csv = "mode,seed,hits@1,hits@5,mrr,status\n";
  char buf[160];
  for (const AblationCell& c : sweep.cells) {
    nlohmann::json j = detail::eval_report_json(c.report);
    j["mode"] = ablation_mode_name(c.mode);
    j["seed"] = c.seed;
    j["status"] = c.status;
    j["epochs_run"] = c.epochs;
    cells.push_back(std::move(j));
    const std::filesystem::path cell_dir =
        run_dir / "runs" / (std::string(ablation_mode_name(c.mode)) + "_" + std::to_string(c.seed));
    std::filesystem::create_directories(cell_dir);
    nlohmann::json cell_report = detail::eval_report_json(c.report);
    cell_report["mode"] = ablation_mode_name(c.mode);
    cell_report["seed"] = c.seed;
    cell_report["status"] = c.status;
    detail::write_text(cell_dir / "report.json", cell_report.dump(2) + "\n");
    std::snprintf(buf, sizeof buf, "%s,%llu,%.6f,%.6f,%.6f,%s\n", ablation_mode_name(c.mode),
                  static_cast<unsigned long long>(c.seed), c.report.hits1, c.report.hits5,
                  c.report.mrr, c.status.c_str());
    csv += buf;
  }
  nlohmann::json summary = nlohmann::json::object();
  for (const AblationMode m : modes) {
    double h1 = 0.0, h5 = 0.0, mrr = 0.0;
    std::size_t n = 0;
    for (const AblationCell& c : sweep.cells) {
      if (c.mode != m) continue;
      h1 += c.report.hits1;
      h5 += c.report.hits5;
      mrr += c.report.mrr;
      n += 1;
    }
    const auto dn = static_cast<double>(n);
    summary[ablation_mode_name(m)] = {
        {"hits@1", h1 / dn}, {"hits@5", h5 / dn}, {"mrr", mrr / dn}, {"runs", n}};
  }
  nlohmann::json out;
  out["cells"] = std::move(cells);
  out["summary"] = std::move(summary);
  detail::write_text(run_dir / "ablation.json", out.dump(2) + "\n");
  detail::write_text(run_dir / "ablation.csv", csv);
  for (const AblationMode m : modes) {
    std::printf("%-9s mean hits@1=%.4f\n", ablation_mode_name(m), sweep.mean_hits1(m));
  }
  return 0;
}

// ---- diagnostics ---------------------------------------------------------------

// Up to `limit` bound cases harvested from the test fold: for each test
// pair, one head-triple per side, preferring neighbours that form a
// training seed pair.
inline std::vector<BoundCase> build_bound_cases(const LoadedDataset& ds, std::size_t limit = 1000) {
  std::vector<std::vector<const Triple*>> heads1(ds.kg1.num_entities());
  std::vector<std::vector<const Triple*>> heads2(ds.kg2.num_entities());
  for (const Triple& t : ds.kg1.triples) heads1[t.head.idx].push_back(&t);
  for (const Triple& t : ds.kg2.triples) heads2[t.head.idx].push_back(&t);
  std::unordered_map<std::uint32_t, std::uint32_t> counterpart;
  for (const AlignedPair& p : ds.alignment.pairs) counterpart.emplace(p.e1.idx, p.e2.idx);
  std::unordered_set<std::uint64_t> train_keys;
  for (std::size_t i = 0; i < ds.alignment.pairs.size(); ++i) {
    if (ds.alignment.partition[i] == FoldPart::Train) {
      train_keys.insert(
          detail::pack_pair(ds.alignment.pairs[i].e1.idx, ds.alignment.pairs[i].e2.idx));
    }
  }
  std::vector<BoundCase> cases;
  for (const AlignedPair& p : ds.alignment.fold_pairs(FoldPart::Test)) {
    if (cases.size() >= limit) break;
    const auto& t1s = heads1[p.e1.idx];
    const auto& t2s = heads2[p.e2.idx];
    if (t1s.empty() || t2s.empty()) continue;
    BoundCase bc;
    bc.x = p.e1;
    bc.y = p.e2;
    bool found_seed = false;
    for (const Triple* t1 : t1s) {
      const auto it = counterpart.find(t1->tail.idx);
      if (it == counterpart.end()) continue;
      if (train_keys.find(detail::pack_pair(t1->tail.idx, it->second)) == train_keys.end()) {
        continue;
      }
      for (const Triple* t2 : t2s) {
        if (t2->tail.idx != it->second) continue;
        bc.r1 = t1->rel;
        bc.n1 = t1->tail;
        bc.r2 = t2->rel;
        bc.n2 = t2->tail;
        bc.neighbor_is_seed = true;
        found_seed = true;
        break;
      }
      if (found_seed) break;
    }
    if (!found_seed) {
      bc.r1 = t1s[0]->rel;
      bc.n1 = t1s[0]->tail;
      bc.r2 = t2s[0]->rel;
      bc.n2 = t2s[0]->tail;
      bc.neighbor_is_seed = false;
    }
    cases.push_back(bc);
  }
  return cases;
}

inline std::string render_rank_hist_csv(const std::vector<RankingRecord>& records,
                                        const std::vector<std::size_t>& bin_edges) {
  std::string csv = "bin_low,bin_high,count,group\n";
  for (const Group g : {Group::LongTail, Group::Popular}) {
    std::size_t low = 1;
    for (std::size_t b = 0; b <= bin_edges.size(); ++b) {
      const bool last = (b == bin_edges.size());
      const std::size_t high = last ? 0 : bin_edges[b];
      std::size_t count = 0;
      for (const RankingRecord& r : records) {
        if (r.group != g) continue;
        if (r.rank >= low && (last || r.rank <= high)) count += 1;
      }
      csv += std::to_string(low);
      csv += ",";
      csv += last ? std::string("inf") : std::to_string(high);
      csv += ",";
      csv += std::to_string(count);
      csv += ",";
      csv += group_name(g);
      csv += "\n";
      low = high + 1;
    }
  }
  return csv;
}

inline int cmd_diagnose(const std::string& checkpoint_dir,
                        const std::optional<std::string>& baseline_dir,
                        const std::string& dataset_root, int fold, const std::string& out_dir,
                        const std::vector<std::size_t>& bin_edges, double lambda) {
  const TrainState st =
      load_checkpoint(checkpoint_dir, detail::read_checkpoint_hash(checkpoint_dir));
  LoadedDataset ds = load_openea_dataset(dataset_root, fold);
  detail::warn_duplicates(ds);
  detail::check_checkpoint_matches(st, ds);
  const EmbeddingTable& emb = st.final_embeddings();
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out = out_dir;

  const EvalReport after = evaluate_fold(emb, ds.kg1, ds.alignment, fold);

  // Discrepancy bound over harvested test-fold cases.
  const std::vector<BoundCase> cases = build_bound_cases(ds);
  const BoundCheckReport bound = check_discrepancy_bound(emb, cases, lambda);
  {
    nlohmann::json j;
    j["cases"] = cases.size();
    j["checked"] = bound.checked;
    j["precondition_unmet"] = bound.unmet;
    j["violations"] = bound.violations;
    j["violation_rate"] = bound.violation_rate;
    j["lambda"] = lambda;
    detail::write_text(out / "bound_report.json", j.dump(2) + "\n");
  }

  // Embedding uniformity over a bounded entity sample from both graphs.
  {
    std::vector<EntityId> sample;
    for (const KnowledgeGraph* kg : {&ds.kg1, &ds.kg2}) {
      const auto n = static_cast<std::uint32_t>(kg->num_entities());
      constexpr std::uint32_t kCap = 1000;
      if (n <= kCap) {
        for (std::uint32_t i = 0; i < n; ++i) sample.push_back(kg->entity(i));
      } else {
        Rng rng(derive_seed(0xd1a6, static_cast<std::uint64_t>(kg->tag)));
        for (const std::uint32_t i : rng.sample_indices(n, kCap)) {
          sample.push_back(kg->entity(i));
        }
      }
    }
    const UniformityReport rep = uniformity_diagnostic(emb, sample);
    nlohmann::json j;
    j["n"] = rep.n;
    j["mean_cosine"] = rep.mean_cosine;
    j["energy"] = rep.energy;
    j["nn_hist"] = rep.nn_hist;
    const std::string name =
        std::filesystem::path(checkpoint_dir).filename().string();
    detail::write_text(out / ("uniformity_" + name + ".json"), j.dump(2) + "\n");
  }

  detail::write_text(out / "rank_hist.csv", render_rank_hist_csv(after.records, bin_edges));

  if (baseline_dir) {
    const TrainState base_st =
        load_checkpoint(*baseline_dir, detail::read_checkpoint_hash(*baseline_dir));
    detail::check_checkpoint_matches(base_st, ds);
    const EvalReport before = evaluate_fold(base_st.final_embeddings(), ds.kg1, ds.alignment, fold);
    const ImprovementReport imp = ranking_improvement(before.records, after.records);
    nlohmann::json j;
    j["long_tail"] = imp.long_tail ? nlohmann::json{{"mean_improvement", *imp.long_tail},
                                                    {"count", imp.long_tail_count}}
                                   : nlohmann::json(nullptr);
    j["popular"] = imp.popular ? nlohmann::json{{"mean_improvement", *imp.popular},
                                                {"count", imp.popular_count}}
                               : nlohmann::json(nullptr);
    detail::write_text(out / "improvement.json", j.dump(2) + "\n");
  }

  std::printf("bound: %llu checked, %llu violations; hits@1=%.4f\n",
              static_cast<unsigned long long>(bound.checked),
              static_cast<unsigned long long>(bound.violations), after.hits1);
  return 0;
}

inline int cmd_gen_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
  const SyntheticDataset ds = generate_synthetic(spec);
  write_openea(ds, out_dir);
  std::printf("entities=%llu relations=%llu triples=%llu links=%llu rewired=%llu\n",
              static_cast<unsigned long long>(spec.entities),
              static_cast<unsigned long long>(spec.relations),
              static_cast<unsigned long long>(ds.triples1.size()),
              static_cast<unsigned long long>(ds.linked.size()),
              static_cast<unsigned long long>(ds.rewired));
  return 0;
}

inline int cmd_check_grads(std::size_t instances, double tol) {
  const GradSuiteResult res = run_gradient_suite(instances, tol);
  std::printf("checked %llu coordinates over %llu instances in %.2fs\n",
              static_cast<unsigned long long>(res.coords_checked),
              static_cast<unsigned long long>(res.instances), res.seconds);
  std::printf("max relative error %.3e (tolerance %.1e) at %s\n", res.max_rel_error, tol,
              res.worst_location.empty() ? "-" : res.worst_location.c_str());
  std::printf("%s\n", res.pass ? "PASS" : "FAIL");
  return res.pass ? 0 : 2;
}

}  // namespace neoea
