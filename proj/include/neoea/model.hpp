#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "neoea/errors.hpp"
#include "neoea/kg.hpp"
#include "neoea/matrix.hpp"

namespace neoea {

enum class Norm : std::uint8_t { L1, L2 };

struct ModelConfig {
  std::size_t dim = 32;
  double lambda = 0.5;   // translation score threshold
  double alpha = 1.0;    // negative-pair margin
  Norm norm = Norm::L2;
  bool normalize_entities = true;  // project entity rows to the unit sphere each step
};

// Merged embedding store for both graphs.  KG2 rows sit after the KG1
// block in each table, so row counts are |E1|+|E2| and |R1|+|R2|.
struct EmbeddingTable {
  DenseMatrix entity_emb;
  DenseMatrix relation_emb;
  std::size_t entities_kg1 = 0;
  std::size_t relations_kg1 = 0;

  std::size_t dim() const { return entity_emb.cols; }

  std::size_t entity_row(EntityId e) const {
    const std::size_t base = (e.kg == KgTag::Kg1) ? 0 : entities_kg1;
    const std::size_t limit =
        (e.kg == KgTag::Kg1) ? entities_kg1 : entity_emb.rows - entities_kg1;
    if (e.idx >= limit) {
      throw DataError("entity id out of range: " + std::string(kg_tag_name(e.kg)) + "#" +
                      std::to_string(e.idx));
    }
    return base + e.idx;
  }

  std::size_t relation_row(RelationId r) const {
    const std::size_t base = (r.kg == KgTag::Kg1) ? 0 : relations_kg1;
    const std::size_t limit =
        (r.kg == KgTag::Kg1) ? relations_kg1 : relation_emb.rows - relations_kg1;
    if (r.idx >= limit) {
      throw DataError("relation id out of range: " + std::string(kg_tag_name(r.kg)) + "#" +
                      std::to_string(r.idx));
    }
    return base + r.idx;
  }

  static EmbeddingTable init(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                             std::size_t dim, std::uint64_t seed) {
    EmbeddingTable t;
    t.entities_kg1 = kg1.num_entities();
    t.relations_kg1 = kg1.num_relations();
    t.entity_emb = xavier_init(kg1.num_entities() + kg2.num_entities(), dim,
                               derive_seed(seed, 0xe17));
    t.relation_emb = xavier_init(kg1.num_relations() + kg2.num_relations(), dim,
                                 derive_seed(seed, 0x9e1));
    return t;
  }
};

// Gradients for both embedding tables; shaped like the tables themselves.
struct LossGrads {
  GradBuffer d_entity;
  GradBuffer d_relation;

  static LossGrads zeros_like(const EmbeddingTable& emb) {
    LossGrads g;
    g.d_entity = DenseMatrix(emb.entity_emb.rows, emb.entity_emb.cols);
    g.d_relation = DenseMatrix(emb.relation_emb.rows, emb.relation_emb.cols);
    return g;
  }

  void add_scaled(const LossGrads& other, double w) {
    for (std::size_t i = 0; i < d_entity.values.size(); ++i) {
      d_entity.values[i] += w * other.d_entity.values[i];
    }
    for (std::size_t i = 0; i < d_relation.values.size(); ++i) {
      d_relation.values[i] += w * other.d_relation.values[i];
    }
  }
};

namespace detail {

// delta = e_h + r - e_t; returns the norm and leaves delta in `buf`.
inline double triple_delta(const EmbeddingTable& emb, const Triple& t, Norm norm,
                           std::vector<double>& buf) {
  const std::size_t d = emb.dim();
  buf.resize(d);
  const double* h = emb.entity_emb.row(emb.entity_row(t.head));
  const double* r = emb.relation_emb.row(emb.relation_row(t.rel));
  const double* tl = emb.entity_emb.row(emb.entity_row(t.tail));
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double v = h[i] + r[i] - tl[i];
    buf[i] = v;
    acc += (norm == Norm::L2) ? v * v : std::fabs(v);
  }
  return (norm == Norm::L2) ? std::sqrt(acc) : acc;
}

// Direction of the norm at delta; zero at non-differentiable points.
inline void norm_direction(const std::vector<double>& delta, double value, Norm norm,
                           std::vector<double>& out) {
  out.resize(delta.size());
  if (norm == Norm::L2) {
    if (value == 0.0) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    const double inv = 1.0 / value;
    for (std::size_t i = 0; i < delta.size(); ++i) out[i] = delta[i] * inv;
  } else {
    for (std::size_t i = 0; i < delta.size(); ++i) {
      out[i] = (delta[i] > 0.0) ? 1.0 : (delta[i] < 0.0 ? -1.0 : 0.0);
    }
  }
}

}  // namespace detail

// ||e_h + r - e_t|| under the configured norm.
inline double score_triple(const EmbeddingTable& emb, const Triple& t, Norm norm) {
  std::vector<double> buf;
  return detail::triple_delta(emb, t, norm, buf);
}

struct ScoringLoss {
  double value = 0.0;
  double positive_term = 0.0;
  double negative_term = 0.0;
  LossGrads grads;
};

// Sum of hinge terms: positives pay max(0, score - lambda), negatives pay
// max(0, lambda - score).  Subgradient at either kink is zero.
inline ScoringLoss scoring_loss(const EmbeddingTable& emb,
                                std::span<const Triple> positives,
                                std::span<const Triple> negatives, double lambda,
                                Norm norm) {
  if (positives.empty() && negatives.empty()) {
    throw ConfigError("scoring_loss: no triples supplied");
  }
  ScoringLoss out;
  out.grads = LossGrads::zeros_like(emb);
  std::vector<double> delta, dir;
  const std::size_t d = emb.dim();
  for (const Triple& t : positives) {
    const double s = detail::triple_delta(emb, t, norm, delta);
    if (s - lambda > 0.0) {
      out.positive_term += s - lambda;
      detail::norm_direction(delta, s, norm, dir);
      accumulate_row(out.grads.d_entity, emb.entity_row(t.head), dir.data(), d, 1.0);
      accumulate_row(out.grads.d_relation, emb.relation_row(t.rel), dir.data(), d, 1.0);
      accumulate_row(out.grads.d_entity, emb.entity_row(t.tail), dir.data(), d, -1.0);
    }
  }
  for (const Triple& t : negatives) {
    const double s = detail::triple_delta(emb, t, norm, delta);
    if (lambda - s > 0.0) {
      out.negative_term += lambda - s;
      detail::norm_direction(delta, s, norm, dir);
      accumulate_row(out.grads.d_entity, emb.entity_row(t.head), dir.data(), d, -1.0);
      accumulate_row(out.grads.d_relation, emb.relation_row(t.rel), dir.data(), d, -1.0);
      accumulate_row(out.grads.d_entity, emb.entity_row(t.tail), dir.data(), d, 1.0);
    }
  }
  out.value = out.positive_term + out.negative_term;
  return out;
}

struct AlignmentLoss {
  double value = 0.0;
  double positive_term = 0.0;
  double negative_term = 0.0;
  LossGrads grads;
};

// Seed pairs pay their L2 distance outright; negative pairs pay
// max(0, alpha - distance).
inline AlignmentLoss alignment_loss(const EmbeddingTable& emb,
                                    std::span<const AlignedPair> seed_pairs,
                                    std::span<const AlignedPair> negative_pairs,
                                    double alpha) {
  AlignmentLoss out;
  out.grads = LossGrads::zeros_like(emb);
  const std::size_t d = emb.dim();
  std::vector<double> delta(d), dir(d);
  auto pair_delta = [&](const AlignedPair& p) {
    const double* a = emb.entity_emb.row(emb.entity_row(p.e1));
    const double* b = emb.entity_emb.row(emb.entity_row(p.e2));
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      delta[i] = a[i] - b[i];
      sq += delta[i] * delta[i];
    }
    return std::sqrt(sq);
  };
  for (const AlignedPair& p : seed_pairs) {
    const double dist = pair_delta(p);
    out.positive_term += dist;
    if (dist > 0.0) {
      const double inv = 1.0 / dist;
      for (std::size_t i = 0; i < d; ++i) dir[i] = delta[i] * inv;
      accumulate_row(out.grads.d_entity, emb.entity_row(p.e1), dir.data(), d, 1.0);
      accumulate_row(out.grads.d_entity, emb.entity_row(p.e2), dir.data(), d, -1.0);
    }
  }
  for (const AlignedPair& p : negative_pairs) {
    const double dist = pair_delta(p);
    if (alpha - dist > 0.0) {
      out.negative_term += alpha - dist;
      if (dist > 0.0) {
        const double inv = 1.0 / dist;
        for (std::size_t i = 0; i < d; ++i) dir[i] = delta[i] * inv;
        accumulate_row(out.grads.d_entity, emb.entity_row(p.e1), dir.data(), d, -1.0);
        accumulate_row(out.grads.d_entity, emb.entity_row(p.e2), dir.data(), d, 1.0);
      }
    }
  }
  out.value = out.positive_term + out.negative_term;
  return out;
}

// L2 distance between any two entity rows (either graph).
inline double entity_distance(const EmbeddingTable& emb, EntityId a, EntityId b) {
  return row_l2_distance(emb.entity_emb.row(emb.entity_row(a)),
                         emb.entity_emb.row(emb.entity_row(b)), emb.dim());
}

}  // namespace neoea
