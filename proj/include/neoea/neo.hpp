#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "neoea/errors.hpp"
#include "neoea/kg.hpp"
#include "neoea/matrix.hpp"
#include "neoea/model.hpp"
#include "neoea/optimizer.hpp"

namespace neoea {

// Which sample-set families take part in the distribution loss.
struct EnabledKinds {
  bool basic = false;
  bool head = false;
  bool tail = false;
  bool pair = false;

  bool any() const { return basic || head || tail || pair; }
  bool has(AxiomKind k) const {
    switch (k) {
      case AxiomKind::Basic: return basic;
      case AxiomKind::HeadGivenRel: return head;
      case AxiomKind::TailGivenRel: return tail;
      case AxiomKind::PairGivenRel: return pair;
    }
    return false;
  }
  std::vector<AxiomKind> list() const {
    std::vector<AxiomKind> out;
    if (basic) out.push_back(AxiomKind::Basic);
    if (head) out.push_back(AxiomKind::HeadGivenRel);
    if (tail) out.push_back(AxiomKind::TailGivenRel);
    if (pair) out.push_back(AxiomKind::PairGivenRel);
    return out;
  }
};

// Two-layer scalar critic with leaky-ReLU hidden units.  One critic per
// sample-set kind, shared across all relations of that kind.  Weights are
// kept inside [-clip_c, clip_c] after every update.
struct Critic {
  AxiomKind kind = AxiomKind::Basic;
  std::size_t dim = 0;  // embedding width d
  DenseMatrix w1;       // hidden x input
  DenseMatrix b1;       // 1 x hidden
  DenseMatrix w2;       // 1 x hidden
  DenseMatrix b2;       // 1 x 1
  double clip_c = 0.01;
  double leaky_slope = 0.2;

  static std::size_t input_width_for(AxiomKind kind, std::size_t dim) {
    switch (kind) {
      case AxiomKind::Basic: return dim;
      case AxiomKind::HeadGivenRel:
      case AxiomKind::TailGivenRel: return 2 * dim;
      case AxiomKind::PairGivenRel: return 3 * dim;
    }
    return dim;
  }

  std::size_t input_width() const { return input_width_for(kind, dim); }
  std::size_t hidden_width() const { return 2 * dim; }

  static Critic init(AxiomKind kind, std::size_t dim, double clip_c, std::uint64_t seed) {
    if (dim == 0) throw ConfigError("critic: dim must be positive");
    if (!(clip_c > 0.0)) throw ConfigError("critic: clip bound must be positive");
    Critic c;
    c.kind = kind;
    c.dim = dim;
    c.clip_c = clip_c;
    const std::size_t w = input_width_for(kind, dim);
    const std::size_t h = 2 * dim;
    Rng rng(seed);
    c.w1 = DenseMatrix(h, w);
    c.b1 = DenseMatrix(1, h);
    c.w2 = DenseMatrix(1, h);
    c.b2 = DenseMatrix(1, 1);
    for (DenseMatrix* m : {&c.w1, &c.b1, &c.w2, &c.b2}) {
      for (double& v : m->values) v = rng.uniform(-clip_c, clip_c);
    }
    return c;
  }

  bool within_clip_bounds() const {
    for (const DenseMatrix* m : {&w1, &b1, &w2, &b2}) {
      for (double v : m->values) {
        if (v < -clip_c || v > clip_c) return false;
      }
    }
    return true;
  }

  void clip() {
    for (DenseMatrix* m : {&w1, &b1, &w2, &b2}) clip_params(*m, clip_c);
  }
};

struct CriticGrads {
  DenseMatrix w1, b1, w2, b2;

  static CriticGrads zeros_like(const Critic& c) {
    CriticGrads g;
    g.w1 = DenseMatrix(c.w1.rows, c.w1.cols);
    g.b1 = DenseMatrix(c.b1.rows, c.b1.cols);
    g.w2 = DenseMatrix(c.w2.rows, c.w2.cols);
    g.b2 = DenseMatrix(c.b2.rows, c.b2.cols);
    return g;
  }
};

// One critic per enabled kind.
struct CriticSet {
  std::map<AxiomKind, Critic> critics;

  bool has(AxiomKind k) const { return critics.count(k) != 0; }
  Critic& at(AxiomKind k) { return critics.at(k); }
  const Critic& at(AxiomKind k) const { return critics.at(k); }
  bool empty() const { return critics.empty(); }

  static CriticSet init(const EnabledKinds& kinds, std::size_t dim, double clip_c,
                        std::uint64_t seed) {
    CriticSet set;
    for (AxiomKind k : kinds.list()) {
      set.critics.emplace(k, Critic::init(k, dim, clip_c,
                                          derive_seed(seed, 0xc417, static_cast<std::uint64_t>(k))));
    }
    return set;
  }

  bool all_within_clip_bounds() const {
    for (const auto& [k, c] : critics) {
      if (!c.within_clip_bounds()) return false;
    }
    return true;
  }

  std::uint64_t checksum() const {
    std::uint64_t h = 0x5eedULL;
    for (const auto& [k, c] : critics) {
      h ^= mix64(matrix_checksum(c.w1)) ^ mix64(matrix_checksum(c.b1)) ^
           mix64(matrix_checksum(c.w2)) ^ mix64(matrix_checksum(c.b2)) ^
           mix64(static_cast<std::uint64_t>(k));
    }
    return h;
  }
};

// Critic input row for one sample-set member: the entity row alone for
// Basic, entity|relation for the conditional kinds, head|tail|relation
// for pairs.
inline std::vector<double> build_conditional_input(const EmbeddingTable& emb,
                                                   AxiomKind kind,
                                                   const std::optional<RelationId>& rel,
                                                   EntityId a,
                                                   std::optional<EntityId> b = std::nullopt) {
  const std::size_t d = emb.dim();
  std::vector<double> x;
  const double* ea = emb.entity_emb.row(emb.entity_row(a));
  switch (kind) {
    case AxiomKind::Basic: {
      x.assign(ea, ea + d);
      break;
    }
    case AxiomKind::HeadGivenRel:
    case AxiomKind::TailGivenRel: {
      if (!rel) throw DataError("conditional input requires a relation");
      const double* r = emb.relation_emb.row(emb.relation_row(*rel));
      x.reserve(2 * d);
      x.insert(x.end(), ea, ea + d);
      x.insert(x.end(), r, r + d);
      break;
    }
    case AxiomKind::PairGivenRel: {
      if (!rel || !b) throw DataError("pair input requires relation and tail");
      const double* eb = emb.entity_emb.row(emb.entity_row(*b));
      const double* r = emb.relation_emb.row(emb.relation_row(*rel));
      x.reserve(3 * d);
      x.insert(x.end(), ea, ea + d);
      x.insert(x.end(), eb, eb + d);
      x.insert(x.end(), r, r + d);
      break;
    }
  }
  return x;
}

// Assembled critic inputs for one sample set, plus the table rows each
// input row was built from (for gradient scatter).
struct AxiomBatch {
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  AxiomKind kind = AxiomKind::Basic;
  KgTag kg = KgTag::Kg1;
  std::optional<RelationId> rel;
  DenseMatrix inputs;  // member count x input width

  struct SourceRow {
    std::size_t ent_a = kNone;    // entity-table row of the first slot
    std::size_t ent_b = kNone;    // entity-table row of the second slot (pairs)
    std::size_t rel_row = kNone;  // relation-table row
  };
  std::vector<SourceRow> sources;
};

inline AxiomBatch build_axiom_batch(const EmbeddingTable& emb, const AxiomSampleSet& set) {
  AxiomBatch batch;
  batch.kind = set.kind;
  batch.kg = set.kg;
  batch.rel = set.rel;
  const std::size_t d = emb.dim();
  const std::size_t width = Critic::input_width_for(set.kind, d);
  const std::size_t n = set.size();
  batch.inputs = DenseMatrix(n, width);
  batch.sources.resize(n);
  std::size_t rel_row = AxiomBatch::kNone;
  const double* rvec = nullptr;
  if (set.rel) {
    rel_row = emb.relation_row(*set.rel);
    rvec = emb.relation_emb.row(rel_row);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double* out = batch.inputs.row(i);
    AxiomBatch::SourceRow& src = batch.sources[i];
    src.rel_row = rel_row;
    if (set.kind == AxiomKind::PairGivenRel) {
      const auto& [h, t] = set.pair_members[i];
      src.ent_a = emb.entity_row(h);
      src.ent_b = emb.entity_row(t);
      const double* eh = emb.entity_emb.row(src.ent_a);
      const double* et = emb.entity_emb.row(src.ent_b);
      std::copy(eh, eh + d, out);
      std::copy(et, et + d, out + d);
      std::copy(rvec, rvec + d, out + 2 * d);
    } else {
      src.ent_a = emb.entity_row(set.members[i]);
      const double* e = emb.entity_emb.row(src.ent_a);
      std::copy(e, e + d, out);
      if (set.kind != AxiomKind::Basic) std::copy(rvec, rvec + d, out + d);
    }
  }
  return batch;
}

// Plain forward pass: one scalar per input row.
inline std::vector<double> critic_forward(const Critic& c, const DenseMatrix& inputs) {
  if (inputs.cols != c.input_width()) {
    throw DataError("critic_forward: input width mismatch");
  }
  const std::size_t h = c.hidden_width();
  const std::size_t w = c.input_width();
  std::vector<double> out(inputs.rows, 0.0);
  for (std::size_t row = 0; row < inputs.rows; ++row) {
    const double* x = inputs.row(row);
    double y = c.b2.values[0];
    for (std::size_t j = 0; j < h; ++j) {
      const double* wj = c.w1.row(j);
      double z = c.b1.values[j];
      for (std::size_t k = 0; k < w; ++k) z += wj[k] * x[k];
      const double a = (z > 0.0) ? z : c.leaky_slope * z;
      y += c.w2.values[j] * a;
    }
    out[row] = y;
  }
  return out;
}

namespace detail {

// Sum of critic outputs over a batch.  When `coeff` is nonzero the call
// accumulates coeff * d(sum f)/d(params) into `cg` (if given) and, when
// `want_dx` is set, hands each row's input gradient (scaled by coeff) to
// `row_grad`.
template <class RowGradFn>
double critic_batch_sum(const Critic& c, const DenseMatrix& inputs, double coeff,
                        CriticGrads* cg, bool want_dx, RowGradFn&& row_grad) {
  if (inputs.cols != c.input_width()) {
    throw DataError("critic term: input width mismatch");
  }
  const std::size_t h = c.hidden_width();
  const std::size_t w = c.input_width();
  std::vector<double> z(h), act(h), dx(w);
  double total = 0.0;
  for (std::size_t row = 0; row < inputs.rows; ++row) {
    const double* x = inputs.row(row);
    double y = c.b2.values[0];
    for (std::size_t j = 0; j < h; ++j) {
      const double* wj = c.w1.row(j);
      double zj = c.b1.values[j];
      for (std::size_t k = 0; k < w; ++k) zj += wj[k] * x[k];
      z[j] = zj;
      act[j] = (zj > 0.0) ? zj : c.leaky_slope * zj;
      y += c.w2.values[j] * act[j];
    }
    total += y;
    if (coeff == 0.0 || (!cg && !want_dx)) continue;
    if (want_dx) std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      const double gate = (z[j] > 0.0) ? 1.0 : c.leaky_slope;
      const double dz = coeff * c.w2.values[j] * gate;
      const double* wj = c.w1.row(j);
      if (cg) {
        cg->w2.values[j] += coeff * act[j];
        cg->b1.values[j] += dz;
        double* gw1 = cg->w1.row(j);
        for (std::size_t k = 0; k < w; ++k) gw1[k] += dz * x[k];
      }
      if (want_dx) {
        for (std::size_t k = 0; k < w; ++k) dx[k] += dz * wj[k];
      }
    }
    if (cg) cg->b2.values[0] += coeff;
    if (want_dx) row_grad(row, dx);
  }
  return total;
}

inline void scatter_input_grad(const AxiomBatch& batch, std::size_t row,
                               const std::vector<double>& dx, std::size_t d,
                               LossGrads& grads) {
  const AxiomBatch::SourceRow& src = batch.sources[row];
  accumulate_row(grads.d_entity, src.ent_a, dx.data(), d, 1.0);
  if (batch.kind == AxiomKind::PairGivenRel) {
    accumulate_row(grads.d_entity, src.ent_b, dx.data() + d, d, 1.0);
    accumulate_row(grads.d_relation, src.rel_row, dx.data() + 2 * d, d, 1.0);
  } else if (batch.kind != AxiomKind::Basic) {
    accumulate_row(grads.d_relation, src.rel_row, dx.data() + d, d, 1.0);
  }
}

}  // namespace detail

// Empirical Wasserstein objective for one batch pair:
//   mean f(rows of batch_1) - mean f(rows of batch_2).
// An empty side is skipped (zero contribution) and flagged.
struct WassersteinLoss {
  double value = 0.0;
  bool skipped = false;
  CriticGrads critic_grads;
  DenseMatrix d_inputs_1;  // same shape as the first batch's inputs
  DenseMatrix d_inputs_2;
};

inline WassersteinLoss wasserstein_loss(const Critic& c, const AxiomBatch& b1,
                                        const AxiomBatch& b2) {
  WassersteinLoss out;
  out.critic_grads = CriticGrads::zeros_like(c);
  out.d_inputs_1 = DenseMatrix(b1.inputs.rows, b1.inputs.cols);
  out.d_inputs_2 = DenseMatrix(b2.inputs.rows, b2.inputs.cols);
  if (b1.inputs.rows == 0 || b2.inputs.rows == 0) {
    out.skipped = true;
    return out;
  }
  const double c1 = 1.0 / static_cast<double>(b1.inputs.rows);
  const double c2 = -1.0 / static_cast<double>(b2.inputs.rows);
  const double sum1 = detail::critic_batch_sum(
      c, b1.inputs, c1, &out.critic_grads, /*want_dx=*/true,
      [&](std::size_t row, const std::vector<double>& dx) {
        double* dst = out.d_inputs_1.row(row);
        for (std::size_t k = 0; k < dx.size(); ++k) dst[k] += dx[k];
      });
  const double sum2 = detail::critic_batch_sum(
      c, b2.inputs, c2, &out.critic_grads, /*want_dx=*/true,
      [&](std::size_t row, const std::vector<double>& dx) {
        double* dst = out.d_inputs_2.row(row);
        for (std::size_t k = 0; k < dx.size(); ++k) dst[k] += dx[k];
      });
  out.value = sum1 / static_cast<double>(b1.inputs.rows) -
              sum2 / static_cast<double>(b2.inputs.rows);
  return out;
}

// Batch distribution loss over two sub-graphs.
//
// Per enabled kind, each side contributes the sum over its own relations
// of that relation's per-set mean critic output (the Basic kind has a
// single set per side); the loss is side-1 total minus side-2 total.
// Sets with no members are skipped and counted in `flagged_empty`.
struct NeoLossResult {
  double value = 0.0;
  std::map<AxiomKind, CriticGrads> critic_grads;
  LossGrads embedding_grads;
  std::size_t flagged_empty = 0;
};

inline NeoLossResult neo_batch_loss(const CriticSet& critics,
                                    const std::vector<AxiomSampleSet>& sets1,
                                    const std::vector<AxiomSampleSet>& sets2,
                                    const EmbeddingTable& emb, const EnabledKinds& kinds,
                                    bool want_embedding_grads = true,
                                    bool want_critic_grads = true) {
  NeoLossResult out;
  out.embedding_grads = LossGrads::zeros_like(emb);
  const std::size_t d = emb.dim();
  for (AxiomKind kind : kinds.list()) {
    if (!critics.has(kind)) throw ConfigError("no critic for enabled kind");
    const Critic& critic = critics.at(kind);
    CriticGrads grads = CriticGrads::zeros_like(critic);
    CriticGrads* cg = want_critic_grads ? &grads : nullptr;
    double side_total[2] = {0.0, 0.0};
    for (int side = 0; side < 2; ++side) {
      const auto& sets = (side == 0) ? sets1 : sets2;
      const double sign = (side == 0) ? 1.0 : -1.0;
      for (const AxiomSampleSet& set : sets) {
        if (set.kind != kind) continue;
        if (set.size() == 0) {
          out.flagged_empty += 1;
          continue;
        }
        const AxiomBatch batch = build_axiom_batch(emb, set);
        const double coeff =
            want_embedding_grads || want_critic_grads
                ? sign / static_cast<double>(batch.inputs.rows)
                : 0.0;
        const double sum = detail::critic_batch_sum(
            critic, batch.inputs, coeff, cg, want_embedding_grads,
            [&](std::size_t row, const std::vector<double>& dx) {
              detail::scatter_input_grad(batch, row, dx, d, out.embedding_grads);
            });
        side_total[side] += sum / static_cast<double>(batch.inputs.rows);
      }
    }
    out.value += side_total[0] - side_total[1];
    if (want_critic_grads) out.critic_grads.emplace(kind, std::move(grads));
  }
  return out;
}

inline NeoLossResult neo_batch_loss(const CriticSet& critics, const SubKg& sub1,
                                    const SubKg& sub2, const EmbeddingTable& emb,
                                    const EnabledKinds& kinds,
                                    bool want_embedding_grads = true,
                                    bool want_critic_grads = true) {
  return neo_batch_loss(critics, extract_axiom_sets(sub1), extract_axiom_sets(sub2), emb,
                        kinds, want_embedding_grads, want_critic_grads);
}

// One adversarial ascent step: maximize the batch loss with respect to
// critic parameters only, then clip every critic weight.  Embeddings are
// read-only here.
inline double critic_ascend_step(CriticSet& critics, const SubKg& sub1, const SubKg& sub2,
                                 const EmbeddingTable& emb, const EnabledKinds& kinds,
                                 Optimizer& opt) {
  NeoLossResult loss = neo_batch_loss(critics, sub1, sub2, emb, kinds,
                                      /*want_embedding_grads=*/false,
                                      /*want_critic_grads=*/true);
  for (AxiomKind kind : kinds.list()) {
    Critic& c = critics.at(kind);
    const CriticGrads& g = loss.critic_grads.at(kind);
    const std::string stem = std::string("critic_") + axiom_kind_name(kind);
    opt.step(stem + "_w1", c.w1, g.w1, Direction::Maximize);
    opt.step(stem + "_b1", c.b1, g.b1, Direction::Maximize);
    opt.step(stem + "_w2", c.w2, g.w2, Direction::Maximize);
    opt.step(stem + "_b2", c.b2, g.b2, Direction::Maximize);
    c.clip();
  }
  return loss.value;
}

}  // namespace neoea
