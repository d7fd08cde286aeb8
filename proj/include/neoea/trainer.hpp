#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "neoea/errors.hpp"
#include "neoea/kg.hpp"
#include "neoea/matrix.hpp"
#include "neoea/model.hpp"
#include "neoea/neo.hpp"
#include "neoea/optimizer.hpp"

namespace neoea {

enum class AblationMode : std::uint8_t { Full = 0, Partial, Basic, Original };

inline const char* ablation_mode_name(AblationMode m) {
  switch (m) {
    case AblationMode::Full: return "full";
    case AblationMode::Partial: return "partial";
    case AblationMode::Basic: return "basic";
    case AblationMode::Original: return "original";
  }
  return "?";
}

inline AblationMode parse_ablation_mode(const std::string& s) {
  if (s == "full") return AblationMode::Full;
  if (s == "partial") return AblationMode::Partial;
  if (s == "basic") return AblationMode::Basic;
  if (s == "original") return AblationMode::Original;
  throw ConfigError("unknown mode: " + s + " (expected full|partial|basic|original)");
}

// Mode nesting: each mode enables every critic of the mode before it,
// in the order original, basic, partial, full.
inline EnabledKinds kinds_for_mode(AblationMode m) {
  EnabledKinds k;
  switch (m) {
    case AblationMode::Full:
      k.pair = true;
      [[fallthrough]];
    case AblationMode::Partial:
      k.head = true;
      k.tail = true;
      [[fallthrough]];
    case AblationMode::Basic:
      k.basic = true;
      break;
    case AblationMode::Original:
      break;
  }
  return k;
}

struct TrainConfig {
  ModelConfig model;
  AblationMode mode = AblationMode::Full;
  int critic_steps = 5;           // adversarial ascent steps per epoch
  std::size_t triple_batch = 256;  // per graph, for the translation loss
  std::size_t subkg_batch = 256;   // per graph, for the distribution loss
  int neg_ratio = 2;               // negatives per positive (triples and pairs)
  OptimizerConfig model_opt{OptimKind::Adam, 1e-3};
  OptimizerConfig critic_opt{OptimKind::RmsProp, 5e-4};
  double clip_c = 0.01;
  int max_epochs = 400;
  int eval_every = 5;   // epochs between validation evaluations
  int patience = 10;    // evaluations without improvement before stopping
  double weight_align = 1.0;
  double weight_score = 1.0;
  double weight_neo = 1.0;
  bool debug_checks = false;  // phase-isolation and clip-bound assertions
  std::uint64_t seed = 1;
};

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.model.dim == 0) throw ConfigError("model.dim must be positive");
  if (!(cfg.model.lambda > 0.0)) throw ConfigError("model.lambda must be positive");
  if (!(cfg.model.alpha > 0.0)) throw ConfigError("model.alpha must be positive");
  if (cfg.critic_steps < 0) throw ConfigError("train.critic_steps must be >= 0");
  if (cfg.triple_batch == 0) throw ConfigError("train.triple_batch must be positive");
  if (cfg.subkg_batch == 0) throw ConfigError("train.subkg_batch must be positive");
  if (cfg.neg_ratio < 1) throw ConfigError("train.neg_ratio must be >= 1");
  if (!(cfg.clip_c > 0.0)) throw ConfigError("train.clip_c must be positive");
  if (cfg.max_epochs < 1) throw ConfigError("train.max_epochs must be positive");
  if (cfg.eval_every < 1) throw ConfigError("train.eval_every must be positive");
  if (cfg.patience < 1) throw ConfigError("train.patience must be positive");
}

// Deterministic stream ids; every random draw in a run is derived from
// (seed, stream, epoch, step), so training can resume mid-run and replay
// the exact same sample sequence.
namespace stream {
constexpr std::uint64_t kEmbeddingInit = 1;
constexpr std::uint64_t kCriticInit = 2;
constexpr std::uint64_t kCriticSub1 = 3;
constexpr std::uint64_t kCriticSub2 = 4;
constexpr std::uint64_t kModelSub1 = 5;
constexpr std::uint64_t kModelSub2 = 6;
constexpr std::uint64_t kTripleBatch1 = 7;
constexpr std::uint64_t kTripleBatch2 = 8;
constexpr std::uint64_t kNegTriples1 = 9;
constexpr std::uint64_t kNegTriples2 = 10;
constexpr std::uint64_t kNegPairs = 11;
constexpr std::uint64_t kEvalPass = 12;
constexpr std::uint64_t kFold = 13;
constexpr std::uint64_t kSynthetic = 14;
constexpr std::uint64_t kAblate = 15;
}  // namespace stream

struct LogRecord {
  int epoch = 0;
  double l_align = 0.0;
  double l_score = 0.0;
  double l_sep = 0.0;
  double val_l_align = 0.0;
  std::int64_t wall_ms = 0;  // elapsed since train() entry; reported separately
};

struct TrainState {
  EmbeddingTable emb;
  CriticSet critics;
  Optimizer model_opt;
  Optimizer critic_opt;
  int epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int evals_since_best = 0;
  bool has_best = false;
  EmbeddingTable best_emb;
  CriticSet best_critics;
  std::string status = "running";  // running | converged | max_epochs | diverged
  std::size_t clip_violations = 0;       // debug counters
  std::size_t isolation_violations = 0;

  // Model selected for evaluation: the best validation snapshot when one
  // exists, otherwise the current parameters.
  const EmbeddingTable& final_embeddings() const { return has_best ? best_emb : emb; }
  const CriticSet& final_critics() const { return has_best ? best_critics : critics; }
};

struct TrainResult {
  TrainState state;
  std::vector<LogRecord> log;
};

// Everything one model update consumes.  Kept as a plain struct so tests
// can drive a single step with handcrafted batches.
struct PhaseBatches {
  std::vector<Triple> pos_triples;  // both graphs
  std::vector<Triple> neg_triples;
  std::vector<AlignedPair> train_pairs;
  std::vector<AlignedPair> neg_pairs;
  SubKg sub1, sub2;  // distribution-loss samples
};

struct PhaseLosses {
  double l_align = 0.0;
  double l_score = 0.0;
  double l_sep = 0.0;
};

// One minimization step on the embeddings; critic parameters are read but
// never written here.
inline PhaseLosses model_phase_step(TrainState& st, const PhaseBatches& b,
                                    const TrainConfig& cfg) {
  const EnabledKinds kinds = kinds_for_mode(cfg.mode);
  PhaseLosses out;
  AlignmentLoss align = alignment_loss(st.emb, b.train_pairs, b.neg_pairs, cfg.model.alpha);
  ScoringLoss score = scoring_loss(st.emb, b.pos_triples, b.neg_triples, cfg.model.lambda,
                                   cfg.model.norm);
  out.l_align = align.value;
  out.l_score = score.value;
  LossGrads total = LossGrads::zeros_like(st.emb);
  total.add_scaled(align.grads, cfg.weight_align);
  total.add_scaled(score.grads, cfg.weight_score);
  if (kinds.any() && !st.critics.empty()) {
    NeoLossResult neo = neo_batch_loss(st.critics, b.sub1, b.sub2, st.emb, kinds,
                                       /*want_embedding_grads=*/true,
                                       /*want_critic_grads=*/false);
    out.l_sep = neo.value;
    total.add_scaled(neo.embedding_grads, cfg.weight_neo);
  }
  const double combined = cfg.weight_align * out.l_align + cfg.weight_score * out.l_score +
                          cfg.weight_neo * out.l_sep;
  if (!std::isfinite(combined)) throw NumericError("non-finite training loss");
  st.model_opt.step("entity", st.emb.entity_emb, total.d_entity, Direction::Minimize);
  st.model_opt.step("relation", st.emb.relation_emb, total.d_relation, Direction::Minimize);
  if (cfg.model.normalize_entities) l2_normalize_rows(st.emb.entity_emb);
  return out;
}

inline PhaseBatches build_phase_batches(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                        const SeedAlignment& alignment,
                                        const std::vector<AlignedPair>& train_pairs,
                                        const TrainConfig& cfg, int epoch) {
  PhaseBatches b;
  const auto e = static_cast<std::uint64_t>(epoch);
  SubKg s1 = sample_subkg(kg1, cfg.triple_batch, derive_seed(cfg.seed, stream::kTripleBatch1, e));
  SubKg s2 = sample_subkg(kg2, cfg.triple_batch, derive_seed(cfg.seed, stream::kTripleBatch2, e));
  TripleCorruptions n1 =
      corrupt_triples(kg1, s1.triples, cfg.neg_ratio, derive_seed(cfg.seed, stream::kNegTriples1, e));
  TripleCorruptions n2 =
      corrupt_triples(kg2, s2.triples, cfg.neg_ratio, derive_seed(cfg.seed, stream::kNegTriples2, e));
  b.pos_triples = std::move(s1.triples);
  b.pos_triples.insert(b.pos_triples.end(), s2.triples.begin(), s2.triples.end());
  b.neg_triples = std::move(n1.triples);
  b.neg_triples.insert(b.neg_triples.end(), n2.triples.begin(), n2.triples.end());
  b.train_pairs = train_pairs;
  b.neg_pairs =
      sample_negative_pairs(alignment, kg1, kg2, cfg.neg_ratio,
                            derive_seed(cfg.seed, stream::kNegPairs, e))
          .pairs;
  if (kinds_for_mode(cfg.mode).any()) {
    b.sub1 = sample_subkg(kg1, cfg.subkg_batch, derive_seed(cfg.seed, stream::kModelSub1, e));
    b.sub2 = sample_subkg(kg2, cfg.subkg_batch, derive_seed(cfg.seed, stream::kModelSub2, e));
  }
  return b;
}

struct EvalPassResult {
  double l_align = 0.0;
  double l_score = 0.0;
  double l_sep = 0.0;
  double val_l_align = 0.0;
};

// Deterministic loss snapshot used for logging and early stopping.  All
// samples (negatives, sub-graphs) come from a fixed stream so values are
// comparable across epochs.  The validation metric is the mean embedding
// distance over validation pairs.
inline EvalPassResult evaluation_pass(const TrainState& st, const KnowledgeGraph& kg1,
                                      const KnowledgeGraph& kg2,
                                      const SeedAlignment& alignment,
                                      const TrainConfig& cfg) {
  EvalPassResult out;
  const std::uint64_t base = derive_seed(cfg.seed, stream::kEvalPass);
  const std::vector<AlignedPair> train_pairs = alignment.fold_pairs(FoldPart::Train);
  const std::vector<AlignedPair> valid_pairs = alignment.fold_pairs(FoldPart::Valid);

  PairCorruptions neg_pairs =
      sample_negative_pairs(alignment, kg1, kg2, cfg.neg_ratio, derive_seed(base, 1));
  out.l_align = alignment_loss(st.emb, train_pairs, neg_pairs.pairs, cfg.model.alpha).value;

  std::vector<Triple> pos = kg1.triples;
  pos.insert(pos.end(), kg2.triples.begin(), kg2.triples.end());
  TripleCorruptions neg1 = corrupt_triples(kg1, kg1.triples, cfg.neg_ratio, derive_seed(base, 2));
  TripleCorruptions neg2 = corrupt_triples(kg2, kg2.triples, cfg.neg_ratio, derive_seed(base, 3));
  std::vector<Triple> neg = std::move(neg1.triples);
  neg.insert(neg.end(), neg2.triples.begin(), neg2.triples.end());
  out.l_score = scoring_loss(st.emb, pos, neg, cfg.model.lambda, cfg.model.norm).value;

  const EnabledKinds kinds = kinds_for_mode(cfg.mode);
  if (kinds.any() && !st.critics.empty()) {
    SubKg s1 = sample_subkg(kg1, cfg.subkg_batch, derive_seed(base, 4));
    SubKg s2 = sample_subkg(kg2, cfg.subkg_batch, derive_seed(base, 5));
    out.l_sep = neo_batch_loss(st.critics, s1, s2, st.emb, kinds,
                               /*want_embedding_grads=*/false,
                               /*want_critic_grads=*/false)
                    .value;
  }

  const std::vector<AlignedPair>& val_src = valid_pairs.empty() ? train_pairs : valid_pairs;
  double sum = 0.0;
  for (const AlignedPair& p : val_src) sum += entity_distance(st.emb, p.e1, p.e2);
  out.val_l_align = val_src.empty() ? 0.0 : sum / static_cast<double>(val_src.size());
  return out;
}

// Adversarial training loop: `critic_steps` ascent updates on fresh
// sub-graph samples, then one descent step on the embeddings, repeated
// until the validation metric stops improving or the epoch cap is hit.
// Pass `resume` to continue a checkpointed run; the sample streams are
// keyed by epoch, so a resumed run replays the uninterrupted sequence.
inline TrainResult train(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                         const SeedAlignment& alignment, const TrainConfig& cfg,
                         const TrainState* resume = nullptr) {
  validate_train_config(cfg);
  const EnabledKinds kinds = kinds_for_mode(cfg.mode);
  TrainResult result;
  TrainState& st = result.state;
  if (resume != nullptr) {
    st = *resume;
    st.status = "running";
  } else {
    st.emb = EmbeddingTable::init(kg1, kg2, cfg.model.dim,
                                  derive_seed(cfg.seed, stream::kEmbeddingInit));
    if (cfg.model.normalize_entities) l2_normalize_rows(st.emb.entity_emb);
    st.critics = CriticSet::init(kinds, cfg.model.dim, cfg.clip_c,
                                 derive_seed(cfg.seed, stream::kCriticInit));
    st.model_opt = Optimizer(cfg.model_opt);
    st.critic_opt = Optimizer(cfg.critic_opt);
  }
  const std::vector<AlignedPair> train_pairs = alignment.fold_pairs(FoldPart::Train);
  const auto t_start = std::chrono::steady_clock::now();

  for (int epoch = st.epoch + 1; epoch <= cfg.max_epochs; ++epoch) {
    // Adversarial phase: critics ascend, embeddings stay fixed.
    if (kinds.any()) {
      for (int step = 1; step <= cfg.critic_steps; ++step) {
        const auto e = static_cast<std::uint64_t>(epoch);
        const auto s = static_cast<std::uint64_t>(step);
        SubKg s1 = sample_subkg(kg1, cfg.subkg_batch,
                                derive_seed(cfg.seed, stream::kCriticSub1, e, s));
        SubKg s2 = sample_subkg(kg2, cfg.subkg_batch,
                                derive_seed(cfg.seed, stream::kCriticSub2, e, s));
        const std::uint64_t emb_sum =
            cfg.debug_checks ? matrix_checksum(st.emb.entity_emb) ^
                                   mix64(matrix_checksum(st.emb.relation_emb))
                             : 0;
        critic_ascend_step(st.critics, s1, s2, st.emb, kinds, st.critic_opt);
        if (cfg.debug_checks) {
          if (!st.critics.all_within_clip_bounds()) st.clip_violations += 1;
          const std::uint64_t emb_sum_after = matrix_checksum(st.emb.entity_emb) ^
                                              mix64(matrix_checksum(st.emb.relation_emb));
          if (emb_sum_after != emb_sum) st.isolation_violations += 1;
        }
      }
    }

    // Model phase: one descent step on the embeddings, critics frozen.
    const std::uint64_t critic_sum = cfg.debug_checks ? st.critics.checksum() : 0;
    PhaseLosses losses;
    try {
      PhaseBatches batches = build_phase_batches(kg1, kg2, alignment, train_pairs, cfg, epoch);
      losses = model_phase_step(st, batches, cfg);
    } catch (const NumericError&) {
      if (st.has_best) {
        st.emb = st.best_emb;
        st.critics = st.best_critics;
      }
      st.status = "diverged";
      return result;
    }
    if (cfg.debug_checks && st.critics.checksum() != critic_sum) {
      st.isolation_violations += 1;
    }
    st.epoch = epoch;

    if (epoch % cfg.eval_every == 0) {
      EvalPassResult ev = evaluation_pass(st, kg1, kg2, alignment, cfg);
      const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t_start)
                            .count();
      result.log.push_back(LogRecord{epoch, ev.l_align, ev.l_score, ev.l_sep,
                                     ev.val_l_align, static_cast<std::int64_t>(wall)});
      if (ev.val_l_align < st.best_val) {
        st.best_val = ev.val_l_align;
        st.best_epoch = epoch;
        st.evals_since_best = 0;
        st.has_best = true;
        st.best_emb = st.emb;
        st.best_critics = st.critics;
      } else {
        st.evals_since_best += 1;
        if (st.evals_since_best >= cfg.patience) {
          st.status = "converged";
          return result;
        }
      }
    }
  }
  st.status = "max_epochs";
  return result;
}

// ---- checkpointing ---------------------------------------------------------
//
// A checkpoint directory holds manifest.json plus one .mat file per
// parameter matrix and optimizer moment.  Doubles that must survive
// exactly travel as hex bit patterns or .mat payloads, never as decimal.

namespace detail {

inline std::string u64_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

inline std::uint64_t parse_u64_hex(const std::string& s) {
  return std::strtoull(s.c_str(), nullptr, 16);
}

inline nlohmann::json optimizer_meta(const Optimizer& opt) {
  nlohmann::json j;
  const OptimizerConfig& c = opt.config();
  j["kind"] = (c.kind == OptimKind::Adam) ? "adam"
              : (c.kind == OptimKind::RmsProp) ? "rmsprop"
                                               : "sgd";
  j["lr_bits"] = u64_hex(std::bit_cast<std::uint64_t>(c.lr));
  j["beta1_bits"] = u64_hex(std::bit_cast<std::uint64_t>(c.beta1));
  j["beta2_bits"] = u64_hex(std::bit_cast<std::uint64_t>(c.beta2));
  j["rho_bits"] = u64_hex(std::bit_cast<std::uint64_t>(c.rho));
  j["eps_bits"] = u64_hex(std::bit_cast<std::uint64_t>(c.eps));
  nlohmann::json slots = nlohmann::json::object();
  for (const auto& [name, slot] : opt.slots()) {
    slots[name] = slot.t;
  }
  j["slots"] = slots;
  return j;
}

inline OptimizerConfig optimizer_config_from_meta(const nlohmann::json& j) {
  OptimizerConfig c;
  const std::string kind = j.at("kind").get<std::string>();
  c.kind = (kind == "adam") ? OptimKind::Adam
           : (kind == "rmsprop") ? OptimKind::RmsProp
                                 : OptimKind::Sgd;
  c.lr = std::bit_cast<double>(parse_u64_hex(j.at("lr_bits").get<std::string>()));
  c.beta1 = std::bit_cast<double>(parse_u64_hex(j.at("beta1_bits").get<std::string>()));
  c.beta2 = std::bit_cast<double>(parse_u64_hex(j.at("beta2_bits").get<std::string>()));
  c.rho = std::bit_cast<double>(parse_u64_hex(j.at("rho_bits").get<std::string>()));
  c.eps = std::bit_cast<double>(parse_u64_hex(j.at("eps_bits").get<std::string>()));
  return c;
}

inline void save_optimizer_slots(const Optimizer& opt, const std::string& prefix,
                                 const std::filesystem::path& dir) {
  for (const auto& [name, slot] : opt.slots()) {
    if (slot.m.values.size() > 0) save_matrix(slot.m, dir / (prefix + name + "_m.mat"));
    if (slot.v.values.size() > 0) save_matrix(slot.v, dir / (prefix + name + "_v.mat"));
  }
}

inline void load_optimizer_slots(Optimizer& opt, const nlohmann::json& meta,
                                 const std::string& prefix,
                                 const std::filesystem::path& dir) {
  for (const auto& [name, t] : meta.at("slots").items()) {
    Optimizer::Slot slot;
    slot.t = t.get<std::int64_t>();
    const auto m_path = dir / (prefix + name + "_m.mat");
    const auto v_path = dir / (prefix + name + "_v.mat");
    if (std::filesystem::exists(m_path)) slot.m = load_matrix(m_path);
    if (std::filesystem::exists(v_path)) slot.v = load_matrix(v_path);
    opt.mutable_slots()[name] = std::move(slot);
  }
}

inline AxiomKind parse_axiom_kind(const std::string& s) {
  if (s == "basic") return AxiomKind::Basic;
  if (s == "head") return AxiomKind::HeadGivenRel;
  if (s == "tail") return AxiomKind::TailGivenRel;
  if (s == "pair") return AxiomKind::PairGivenRel;
  throw DataError("unknown sample-set kind in checkpoint: " + s);
}

inline void save_critic_set(const CriticSet& critics, const std::string& prefix,
                            const std::filesystem::path& dir) {
  for (const auto& [kind, c] : critics.critics) {
    const std::string stem = prefix + axiom_kind_name(kind);
    save_matrix(c.w1, dir / (stem + "_w1.mat"));
    save_matrix(c.b1, dir / (stem + "_b1.mat"));
    save_matrix(c.w2, dir / (stem + "_w2.mat"));
    save_matrix(c.b2, dir / (stem + "_b2.mat"));
  }
}

inline CriticSet load_critic_set(const nlohmann::json& kinds_json, const std::string& prefix,
                                 std::size_t dim, double clip_c, double leaky,
                                 const std::filesystem::path& dir) {
  CriticSet set;
  for (const auto& kj : kinds_json) {
    const AxiomKind kind = parse_axiom_kind(kj.get<std::string>());
    Critic c;
    c.kind = kind;
    c.dim = dim;
    c.clip_c = clip_c;
    c.leaky_slope = leaky;
    const std::string stem = prefix + axiom_kind_name(kind);
    c.w1 = load_matrix(dir / (stem + "_w1.mat"));
    c.b1 = load_matrix(dir / (stem + "_b1.mat"));
    c.w2 = load_matrix(dir / (stem + "_w2.mat"));
    c.b2 = load_matrix(dir / (stem + "_b2.mat"));
    set.critics.emplace(kind, std::move(c));
  }
  return set;
}

}  // namespace detail

inline void save_checkpoint(const TrainState& st, const TrainConfig& cfg,
                            std::uint64_t config_hash, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_matrix(st.emb.entity_emb, dir / "entity.mat");
  save_matrix(st.emb.relation_emb, dir / "relation.mat");
  if (st.has_best) {
    save_matrix(st.best_emb.entity_emb, dir / "best_entity.mat");
    save_matrix(st.best_emb.relation_emb, dir / "best_relation.mat");
    detail::save_critic_set(st.best_critics, "best_critic_", dir);
  }
  detail::save_critic_set(st.critics, "critic_", dir);
  detail::save_optimizer_slots(st.model_opt, "opt_model_", dir);
  detail::save_optimizer_slots(st.critic_opt, "opt_critic_", dir);

  nlohmann::json j;
  j["format"] = "neoea-checkpoint";
  j["version"] = 1;
  j["config_hash"] = detail::u64_hex(config_hash);
  j["epoch"] = st.epoch;
  j["best_val_bits"] = detail::u64_hex(std::bit_cast<std::uint64_t>(st.best_val));
  j["best_epoch"] = st.best_epoch;
  j["evals_since_best"] = st.evals_since_best;
  j["has_best"] = st.has_best;
  j["status"] = st.status;
  j["entities_kg1"] = st.emb.entities_kg1;
  j["relations_kg1"] = st.emb.relations_kg1;
  j["dim"] = st.emb.dim();
  j["mode"] = ablation_mode_name(cfg.mode);
  j["clip_c_bits"] = detail::u64_hex(std::bit_cast<std::uint64_t>(cfg.clip_c));
  nlohmann::json kinds = nlohmann::json::array();
  for (const auto& [kind, c] : st.critics.critics) kinds.push_back(axiom_kind_name(kind));
  j["critic_kinds"] = kinds;
  j["leaky_bits"] = detail::u64_hex(std::bit_cast<std::uint64_t>(0.2));
  j["model_opt"] = detail::optimizer_meta(st.model_opt);
  j["critic_opt"] = detail::optimizer_meta(st.critic_opt);

  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint manifest in " + dir.string());
  out << j.dump(2) << "\n";
}

inline TrainState load_checkpoint(const std::filesystem::path& dir,
                                  std::uint64_t expected_config_hash,
                                  bool allow_config_mismatch = false) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw DataError("missing checkpoint manifest: " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("unreadable checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  if (j.value("format", "") != std::string("neoea-checkpoint") || j.value("version", 0) != 1) {
    throw DataError("bad checkpoint format in " + manifest_path.string());
  }
  const std::uint64_t stored_hash = detail::parse_u64_hex(j.at("config_hash").get<std::string>());
  if (stored_hash != expected_config_hash) {
    if (!allow_config_mismatch) {
      throw ConfigError("checkpoint config hash mismatch in " + dir.string());
    }
    std::fprintf(stderr, "warning: checkpoint config hash mismatch in %s\n", dir.string().c_str());
  }

  TrainState st;
  st.emb.entity_emb = load_matrix(dir / "entity.mat");
  st.emb.relation_emb = load_matrix(dir / "relation.mat");
  st.emb.entities_kg1 = j.at("entities_kg1").get<std::size_t>();
  st.emb.relations_kg1 = j.at("relations_kg1").get<std::size_t>();
  st.epoch = j.at("epoch").get<int>();
  st.best_val = std::bit_cast<double>(detail::parse_u64_hex(j.at("best_val_bits").get<std::string>()));
  st.best_epoch = j.at("best_epoch").get<int>();
  st.evals_since_best = j.at("evals_since_best").get<int>();
  st.has_best = j.at("has_best").get<bool>();
  st.status = j.at("status").get<std::string>();
  const auto dim = j.at("dim").get<std::size_t>();
  const double clip_c = std::bit_cast<double>(detail::parse_u64_hex(j.at("clip_c_bits").get<std::string>()));
  const double leaky = std::bit_cast<double>(detail::parse_u64_hex(j.at("leaky_bits").get<std::string>()));
  st.critics = detail::load_critic_set(j.at("critic_kinds"), "critic_", dim, clip_c, leaky, dir);
  if (st.has_best) {
    st.best_emb.entity_emb = load_matrix(dir / "best_entity.mat");
    st.best_emb.relation_emb = load_matrix(dir / "best_relation.mat");
    st.best_emb.entities_kg1 = st.emb.entities_kg1;
    st.best_emb.relations_kg1 = st.emb.relations_kg1;
    st.best_critics =
        detail::load_critic_set(j.at("critic_kinds"), "best_critic_", dim, clip_c, leaky, dir);
  }
  st.model_opt = Optimizer(detail::optimizer_config_from_meta(j.at("model_opt")));
  detail::load_optimizer_slots(st.model_opt, j.at("model_opt"), "opt_model_", dir);
  st.critic_opt = Optimizer(detail::optimizer_config_from_meta(j.at("critic_opt")));
  detail::load_optimizer_slots(st.critic_opt, j.at("critic_opt"), "opt_critic_", dir);
  return st;
}

}  // namespace neoea
