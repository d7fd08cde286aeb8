#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "neoea/errors.hpp"
#include "neoea/kg.hpp"
#include "neoea/matrix.hpp"
#include "neoea/model.hpp"
#include "neoea/trainer.hpp"

namespace neoea {

enum class Group : std::uint8_t { LongTail = 0, Popular };

inline const char* group_name(Group g) {
  return g == Group::LongTail ? "long_tail" : "popular";
}

struct RankingRecord {
  EntityId query;            // kg1 test entity
  EntityId truth;            // its aligned kg2 entity
  std::size_t rank = 0;      // 1-based
  Group group = Group::Popular;
};

struct EvalReport {
  int fold = 0;
  double hits1 = 0.0;
  double hits5 = 0.0;
  double mrr = 0.0;
  std::size_t num_queries = 0;
  std::vector<RankingRecord> records;
};

// Worker count for the ranking loop, from NEOA_THREADS.  Queries are
// partitioned into fixed contiguous chunks, so results do not depend on
// the thread count.
inline std::size_t num_eval_threads() {
  const char* env = std::getenv("NEOA_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  const long v = std::strtol(env, nullptr, 10);
  if (v < 1) return 1;
  if (v > 64) return 64;
  return static_cast<std::size_t>(v);
}

// Rank of the true counterpart among the candidates by embedding distance.
// Ties break by ascending entity id: rank = 1 + |closer| + |equal with
// smaller id|.  The true entity must appear in the candidate list.
inline std::vector<RankingRecord> rank_alignments(const EmbeddingTable& emb,
                                                  const std::vector<AlignedPair>& test_pairs,
                                                  const std::vector<EntityId>& candidates) {
  if (candidates.empty()) throw DataError("ranking needs a non-empty candidate set");
  std::vector<RankingRecord> records(test_pairs.size());
  auto rank_one = [&](std::size_t qi) {
    const AlignedPair& p = test_pairs[qi];
    const double d_truth = entity_distance(emb, p.e1, p.e2);
    std::size_t closer = 0;
    std::size_t tied_smaller = 0;
    bool truth_present = false;
    for (const EntityId& c : candidates) {
      if (c == p.e2) {
        truth_present = true;
        continue;
      }
      const double d = entity_distance(emb, p.e1, c);
      if (d < d_truth) {
        closer += 1;
      } else if (d == d_truth && c.idx < p.e2.idx) {
        tied_smaller += 1;
      }
    }
    if (!truth_present) {
      throw DataError("true counterpart missing from candidate set for entity " +
                      std::to_string(p.e1.idx));
    }
    records[qi] = RankingRecord{p.e1, p.e2, 1 + closer + tied_smaller, Group::Popular};
  };
  const std::size_t threads = std::min(num_eval_threads(), std::max<std::size_t>(test_pairs.size(), 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < test_pairs.size(); ++i) rank_one(i);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (test_pairs.size() + threads - 1) / threads;
    std::vector<std::string> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(test_pairs.size(), lo + chunk);
        try {
          for (std::size_t i = lo; i < hi; ++i) rank_one(i);
        } catch (const std::exception& e) {
          errors[t] = e.what();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const std::string& e : errors) {
      if (!e.empty()) throw DataError(e);
    }
  }
  return records;
}

inline EvalReport compute_metrics(std::vector<RankingRecord> records, int fold = 0) {
  if (records.empty()) throw DataError("cannot compute metrics without ranking records");
  EvalReport rep;
  rep.fold = fold;
  rep.num_queries = records.size();
  double h1 = 0.0, h5 = 0.0, rr = 0.0;
  for (const RankingRecord& r : records) {
    if (r.rank == 0) throw DataError("ranking record with rank 0");
    if (r.rank <= 1) h1 += 1.0;
    if (r.rank <= 5) h5 += 1.0;
    rr += 1.0 / static_cast<double>(r.rank);
  }
  const auto n = static_cast<double>(records.size());
  rep.hits1 = h1 / n;
  rep.hits5 = h5 / n;
  rep.mrr = rr / n;
  rep.records = std::move(records);
  return rep;
}

// Buckets test entities by how many of their distinct graph neighbours
// are NOT covered by training seed pairs: at most two such neighbours
// means long-tail, otherwise popular.
inline std::unordered_map<std::uint32_t, Group> split_groups(
    const KnowledgeGraph& kg, const SeedAlignment& alignment,
    const std::vector<EntityId>& test_entities) {
  std::unordered_set<std::uint32_t> seeded;
  for (const AlignedPair& p : alignment.fold_pairs(FoldPart::Train)) {
    seeded.insert(kg.tag == KgTag::Kg1 ? p.e1.idx : p.e2.idx);
  }
  std::unordered_map<std::uint32_t, Group> out;
  for (const EntityId& e : test_entities) {
    if (e.kg != kg.tag) throw DataError("grouping entity from the wrong graph");
    if (e.idx >= kg.entity_labels.size()) {
      throw DataError("grouping entity id out of range: " + std::to_string(e.idx));
    }
    std::size_t uncovered = 0;
    for (const std::uint32_t nbr : kg.neighbors[e.idx]) {
      if (seeded.find(nbr) == seeded.end()) uncovered += 1;
    }
    out[e.idx] = (uncovered <= 2) ? Group::LongTail : Group::Popular;
  }
  return out;
}

inline void annotate_groups(std::vector<RankingRecord>& records,
                            const std::unordered_map<std::uint32_t, Group>& groups) {
  for (RankingRecord& r : records) {
    const auto it = groups.find(r.query.idx);
    if (it == groups.end()) {
      throw DataError("no group assignment for query entity " + std::to_string(r.query.idx));
    }
    r.group = it->second;
  }
}

struct ImprovementReport {
  std::optional<double> long_tail;  // mean(rank_before - rank_after); empty group => nullopt
  std::optional<double> popular;
  std::size_t long_tail_count = 0;
  std::size_t popular_count = 0;
};

// Mean per-query rank improvement between two evaluations of the same
// query set.  Positive values mean `after` ranks the truth higher.
inline ImprovementReport ranking_improvement(const std::vector<RankingRecord>& before,
                                             const std::vector<RankingRecord>& after) {
  if (before.size() != after.size()) {
    throw DataError("rank improvement requires matching query sets");
  }
  auto sorted = [](std::vector<RankingRecord> v) {
    std::sort(v.begin(), v.end(), [](const RankingRecord& a, const RankingRecord& b) {
      return a.query.idx < b.query.idx;
    });
    return v;
  };
  const std::vector<RankingRecord> b = sorted(before);
  const std::vector<RankingRecord> a = sorted(after);
  double sum_lt = 0.0, sum_pop = 0.0;
  std::size_t n_lt = 0, n_pop = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i].query != a[i].query || b[i].group != a[i].group) {
      throw DataError("rank improvement requires matching query sets");
    }
    const double delta =
        static_cast<double>(b[i].rank) - static_cast<double>(a[i].rank);
    if (b[i].group == Group::LongTail) {
      sum_lt += delta;
      n_lt += 1;
    } else {
      sum_pop += delta;
      n_pop += 1;
    }
  }
  ImprovementReport rep;
  rep.long_tail_count = n_lt;
  rep.popular_count = n_pop;
  if (n_lt > 0) rep.long_tail = sum_lt / static_cast<double>(n_lt);
  if (n_pop > 0) rep.popular = sum_pop / static_cast<double>(n_pop);
  return rep;
}

// ---- embedding discrepancy bound -------------------------------------------
//
// For entities x (kg1) and y (kg2) with triples (x, r1, n1) and (y, r2, n2)
// both scoring at most lambda, the embedding gap obeys
//   |x - y| <= 2*lambda + |C1 - C2|   with  C = r - e_neighbour,
// and the correction term vanishes when the neighbour pair is a seed whose
// neighbour and relation rows coincide.

struct BoundCase {
  EntityId x;      // kg1
  EntityId y;      // kg2
  RelationId r1;   // kg1
  RelationId r2;   // kg2
  EntityId n1;     // kg1 neighbour, tail of (x, r1, n1)
  EntityId n2;     // kg2 neighbour, tail of (y, r2, n2)
  bool neighbor_is_seed = false;
};

struct BoundCaseResult {
  double lhs = 0.0;
  double bound = 0.0;
  bool precondition_met = false;
  bool satisfied = true;  // vacuously true when the precondition fails
  bool is_seed = false;
};

struct BoundCheckReport {
  std::vector<BoundCaseResult> cases;
  std::size_t checked = 0;     // cases whose precondition held
  std::size_t unmet = 0;       // cases skipped for an unmet precondition
  std::size_t violations = 0;  // checked cases where lhs exceeded the bound
  double violation_rate = 0.0;
};

namespace detail {

inline double vector_norm(const double* a, const double* b, std::size_t n, Norm norm) {
  double acc = 0.0;
  if (norm == Norm::L2) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
    return std::sqrt(acc);
  }
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

}  // namespace detail

inline BoundCheckReport check_discrepancy_bound(const EmbeddingTable& emb,
                                                const std::vector<BoundCase>& cases,
                                                double lambda, Norm norm = Norm::L2) {
  constexpr double kTol = 1e-9;
  const std::size_t d = emb.dim();
  BoundCheckReport rep;
  rep.cases.reserve(cases.size());
  std::vector<double> c1(d), c2(d);
  for (const BoundCase& bc : cases) {
    BoundCaseResult res;
    res.is_seed = bc.neighbor_is_seed;
    const double* x = emb.entity_emb.row(emb.entity_row(bc.x));
    const double* y = emb.entity_emb.row(emb.entity_row(bc.y));
    const double* r1 = emb.relation_emb.row(emb.relation_row(bc.r1));
    const double* r2 = emb.relation_emb.row(emb.relation_row(bc.r2));
    const double* n1 = emb.entity_emb.row(emb.entity_row(bc.n1));
    const double* n2 = emb.entity_emb.row(emb.entity_row(bc.n2));
    const double s1 = score_triple(emb, Triple{bc.x, bc.r1, bc.n1}, norm);
    const double s2 = score_triple(emb, Triple{bc.y, bc.r2, bc.n2}, norm);
    bool pre = s1 <= lambda && s2 <= lambda;
    if (bc.neighbor_is_seed) {
      // The tight 2*lambda form needs the anchor rows to coincide.
      pre = pre && detail::vector_norm(n1, n2, d, norm) <= kTol &&
            detail::vector_norm(r1, r2, d, norm) <= kTol;
    }
    res.precondition_met = pre;
    if (pre) {
      res.lhs = detail::vector_norm(x, y, d, norm);
      if (bc.neighbor_is_seed) {
        res.bound = 2.0 * lambda;
      } else {
        for (std::size_t i = 0; i < d; ++i) {
          c1[i] = r1[i] - n1[i];
          c2[i] = r2[i] - n2[i];
        }
        res.bound = 2.0 * lambda + detail::vector_norm(c1.data(), c2.data(), d, norm);
      }
      res.satisfied = res.lhs <= res.bound + kTol;
      rep.checked += 1;
      if (!res.satisfied) rep.violations += 1;
    } else {
      rep.unmet += 1;
    }
    rep.cases.push_back(res);
  }
  if (rep.checked > 0) {
    rep.violation_rate = static_cast<double>(rep.violations) / static_cast<double>(rep.checked);
  }
  return rep;
}

// ---- uniformity diagnostics -------------------------------------------------

struct UniformityReport {
  std::size_t n = 0;
  double mean_cosine = 0.0;                 // over unordered pairs of normalized rows
  std::array<std::size_t, 32> nn_hist{};    // nearest-neighbour distances binned on [0, 2]
  double energy = 0.0;                      // (1/n^2) sum_ij exp(-2 |ei - ej|^2)
};

inline UniformityReport uniformity_diagnostic(const EmbeddingTable& emb,
                                              const std::vector<EntityId>& entities) {
  const std::size_t n = entities.size();
  if (n < 2) throw DataError("uniformity diagnostic needs at least two entities");
  const std::size_t d = emb.dim();
  DenseMatrix rows(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = emb.entity_emb.row(emb.entity_row(entities[i]));
    std::copy(src, src + d, rows.row(i));
  }
  l2_normalize_rows(rows);

  UniformityReport rep;
  rep.n = n;
  double cos_sum = 0.0;
  double energy = static_cast<double>(n);  // diagonal terms: exp(0) each
  std::vector<double> nn(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      double dist2 = 0.0;
      const double* a = rows.row(i);
      const double* b = rows.row(j);
      for (std::size_t k = 0; k < d; ++k) {
        dot += a[k] * b[k];
        const double diff = a[k] - b[k];
        dist2 += diff * diff;
      }
      cos_sum += dot;
      energy += 2.0 * std::exp(-2.0 * dist2);
      const double dist = std::sqrt(dist2);
      if (dist < nn[i]) nn[i] = dist;
      if (dist < nn[j]) nn[j] = dist;
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  rep.mean_cosine = cos_sum / pairs;
  rep.energy = energy / (static_cast<double>(n) * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    // Normalized rows keep distances within [0, 2]; clamp guards rounding.
    const double clamped = std::min(std::max(nn[i], 0.0), 2.0);
    auto bin = static_cast<std::size_t>(clamped / 2.0 * 32.0);
    if (bin >= 32) bin = 31;
    rep.nn_hist[bin] += 1;
  }
  return rep;
}

// ---- embedding export --------------------------------------------------------

enum class ExportFormat { Csv, Mat };

inline ExportFormat parse_export_format(const std::string& s) {
  if (s == "csv") return ExportFormat::Csv;
  if (s == "mat") return ExportFormat::Mat;
  throw ConfigError("unknown export format: " + s + " (expected csv|mat)");
}

// Writes all entity rows, kg1 first then kg2, labelled.  CSV doubles use
// %.17g so a round-trip reproduces the exact values.
inline void export_embeddings(const EmbeddingTable& emb, const KnowledgeGraph& kg1,
                              const KnowledgeGraph& kg2, const std::filesystem::path& path,
                              ExportFormat format) {
  if (format == ExportFormat::Mat) {
    save_matrix(emb.entity_emb, path);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write embeddings to " + path.string());
  const std::size_t d = emb.dim();
  out << "id,label";
  for (std::size_t k = 0; k < d; ++k) out << ",v" << k;
  out << "\n";
  char buf[64];
  auto emit = [&](std::size_t row, const std::string& label) {
    out << row << "," << label;
    for (std::size_t k = 0; k < d; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", emb.entity_emb.at(row, k));
      out << "," << buf;
    }
    out << "\n";
  };
  for (std::size_t i = 0; i < kg1.entity_labels.size(); ++i) emit(i, kg1.entity_labels[i]);
  for (std::size_t i = 0; i < kg2.entity_labels.size(); ++i) {
    emit(emb.entities_kg1 + i, kg2.entity_labels[i]);
  }
  if (!out) throw DataError("write failed for " + path.string());
}

struct CsvEmbeddings {
  std::vector<std::string> labels;
  DenseMatrix values;
};

inline CsvEmbeddings load_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing embeddings file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty embeddings file: " + path.string());
  std::size_t dim = 0;
  {
    std::stringstream header(line);
    std::string field;
    std::size_t fields = 0;
    while (std::getline(header, field, ',')) fields += 1;
    if (fields < 3) throw DataError("bad embeddings header in " + path.string());
    dim = fields - 2;
  }
  CsvEmbeddings out;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::getline(row, field, ',');  // id column, positional
    if (!std::getline(row, field, ',')) throw DataError("bad embeddings row in " + path.string());
    out.labels.push_back(field);
    std::size_t got = 0;
    while (std::getline(row, field, ',')) {
      values.push_back(std::strtod(field.c_str(), nullptr));
      got += 1;
    }
    if (got != dim) throw DataError("bad embeddings row in " + path.string());
  }
  out.values = DenseMatrix(out.labels.size(), dim);
  out.values.values = std::move(values);
  return out;
}

// ---- cross validation --------------------------------------------------------

struct CvReport {
  std::vector<EvalReport> folds;  // fold 1..5 in order
  double mean_hits1 = 0.0, sd_hits1 = 0.0;
  double mean_hits5 = 0.0, sd_hits5 = 0.0;
  double mean_mrr = 0.0, sd_mrr = 0.0;
};

inline std::vector<EntityId> test_candidates(const SeedAlignment& alignment) {
  std::vector<EntityId> out;
  for (const AlignedPair& p : alignment.fold_pairs(FoldPart::Test)) out.push_back(p.e2);
  return out;
}

inline EvalReport evaluate_fold(const EmbeddingTable& emb, const KnowledgeGraph& kg1,
                                const SeedAlignment& alignment, int fold) {
  const std::vector<AlignedPair> test_pairs = alignment.fold_pairs(FoldPart::Test);
  std::vector<RankingRecord> records =
      rank_alignments(emb, test_pairs, test_candidates(alignment));
  std::vector<EntityId> queries;
  for (const AlignedPair& p : test_pairs) queries.push_back(p.e1);
  annotate_groups(records, split_groups(kg1, alignment, queries));
  return compute_metrics(std::move(records), fold);
}

// Trains one model per fold directory and aggregates test metrics.  Fold
// seeds default to streams derived from the base seed; tests can pin them.
inline CvReport cross_validate(const std::filesystem::path& dataset_root,
                               const TrainConfig& base_cfg,
                               const std::vector<std::uint64_t>* fold_seeds = nullptr) {
  if (fold_seeds != nullptr && fold_seeds->size() != 5) {
    throw ConfigError("cross validation needs exactly 5 fold seeds");
  }
  CvReport rep;
  for (int fold = 1; fold <= 5; ++fold) {
    LoadedDataset ds = load_openea_dataset(dataset_root, fold);
    TrainConfig cfg = base_cfg;
    cfg.seed = (fold_seeds != nullptr)
                   ? (*fold_seeds)[static_cast<std::size_t>(fold - 1)]
                   : derive_seed(base_cfg.seed, stream::kFold, static_cast<std::uint64_t>(fold));
    TrainResult tr = train(ds.kg1, ds.kg2, ds.alignment, cfg);
    rep.folds.push_back(evaluate_fold(tr.state.final_embeddings(), ds.kg1, ds.alignment, fold));
  }
  auto mean_sd = [&](auto pick, double& mean, double& sd) {
    double sum = 0.0;
    for (const EvalReport& r : rep.folds) sum += pick(r);
    mean = sum / static_cast<double>(rep.folds.size());
    double ss = 0.0;
    for (const EvalReport& r : rep.folds) {
      const double d = pick(r) - mean;
      ss += d * d;
    }
    sd = std::sqrt(ss / static_cast<double>(rep.folds.size() - 1));
  };
  mean_sd([](const EvalReport& r) { return r.hits1; }, rep.mean_hits1, rep.sd_hits1);
  mean_sd([](const EvalReport& r) { return r.hits5; }, rep.mean_hits5, rep.sd_hits5);
  mean_sd([](const EvalReport& r) { return r.mrr; }, rep.mean_mrr, rep.sd_mrr);
  return rep;
}

}  // namespace neoea
