#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "neoea/gradcheck.hpp"
#include "neoea/kg.hpp"
#include "neoea/model.hpp"
#include "neoea/neo.hpp"
#include "neoea/rng.hpp"
#include "neoea/trainer.hpp"

namespace neoea {

// Small randomized problem (6 entities, 2 relations per graph) used to
// validate analytic gradients against central differences.
struct ToyInstance {
  KnowledgeGraph kg1{KgTag::Kg1};
  KnowledgeGraph kg2{KgTag::Kg2};
  SeedAlignment alignment;
  EmbeddingTable emb;
  CriticSet critics;
  PhaseBatches batches;
  ModelConfig model;
  double weight_align = 1.0, weight_score = 1.0, weight_neo = 1.0;
};

namespace detail {

inline KnowledgeGraph make_toy_graph(KgTag tag, std::size_t entities, std::size_t relations,
                                     std::size_t triples, std::uint64_t seed) {
  KnowledgeGraph kg(tag);
  const char* ent_prefix = (tag == KgTag::Kg1) ? "a" : "b";
  const char* rel_prefix = (tag == KgTag::Kg1) ? "p" : "q";
  for (std::size_t i = 0; i < entities; ++i) {
    kg.intern_entity(ent_prefix + std::to_string(i));
  }
  for (std::size_t i = 0; i < relations; ++i) {
    kg.intern_relation(rel_prefix + std::to_string(i));
  }
  Rng rng(seed);
  std::size_t added = 0;
  while (added < triples) {
    const auto h = static_cast<std::uint32_t>(rng.below(entities));
    const auto r = static_cast<std::uint32_t>(rng.below(relations));
    const auto t = static_cast<std::uint32_t>(rng.below(entities));
    if (kg.add_triple(h, r, t)) added += 1;
  }
  kg.build_indexes();
  return kg;
}

}  // namespace detail

inline ToyInstance make_toy_instance(std::uint64_t seed,
                                     AblationMode mode = AblationMode::Full) {
  constexpr std::size_t kEntities = 6, kRelations = 2, kTriples = 8, kDim = 6;
  ToyInstance toy;
  toy.kg1 = detail::make_toy_graph(KgTag::Kg1, kEntities, kRelations, kTriples,
                                   derive_seed(seed, 1));
  toy.kg2 = detail::make_toy_graph(KgTag::Kg2, kEntities, kRelations, kTriples,
                                   derive_seed(seed, 2));
  for (std::uint32_t i = 0; i < kEntities; ++i) {
    toy.alignment.pairs.push_back(
        AlignedPair{EntityId{i, KgTag::Kg1}, EntityId{i, KgTag::Kg2}});
    toy.alignment.partition.push_back(i < 4   ? FoldPart::Train
                                      : i < 5 ? FoldPart::Valid
                                              : FoldPart::Test);
    toy.alignment.pair_keys.insert(detail::pack_pair(i, i));
  }
  toy.model.dim = kDim;
  toy.model.lambda = 0.5;
  toy.model.alpha = 1.5;
  toy.model.normalize_entities = false;
  toy.emb = EmbeddingTable::init(toy.kg1, toy.kg2, kDim, derive_seed(seed, 3));
  // Critic weights at O(1) scale: with the production clip bound the hidden
  // pre-activations crowd the leaky-ReLU kink, and no finite-difference
  // window clears it.  The gradient formulas are scale-free.
  toy.critics = CriticSet::init(kinds_for_mode(mode), kDim, 0.5, derive_seed(seed, 4));

  PhaseBatches& b = toy.batches;
  b.pos_triples = toy.kg1.triples;
  b.pos_triples.insert(b.pos_triples.end(), toy.kg2.triples.begin(), toy.kg2.triples.end());
  TripleCorruptions n1 = corrupt_triples(toy.kg1, toy.kg1.triples, 1, derive_seed(seed, 5));
  TripleCorruptions n2 = corrupt_triples(toy.kg2, toy.kg2.triples, 1, derive_seed(seed, 6));
  b.neg_triples = std::move(n1.triples);
  b.neg_triples.insert(b.neg_triples.end(), n2.triples.begin(), n2.triples.end());
  b.train_pairs = toy.alignment.fold_pairs(FoldPart::Train);
  b.neg_pairs = sample_negative_pairs(toy.alignment, toy.kg1, toy.kg2, 2,
                                      derive_seed(seed, 7))
                    .pairs;
  b.sub1 = sample_subkg(toy.kg1, kTriples, derive_seed(seed, 8));
  b.sub2 = sample_subkg(toy.kg2, kTriples, derive_seed(seed, 9));
  return toy;
}

// Smallest distances from hinge arguments and critic pre-activations to
// their kinks.  A probe step of h only trusts instances whose margins
// dwarf h; near-kink instances get resampled.  Pre-activations are kept
// separate because a probe moves them by at most h * max|input|, far less
// than it moves a hinge argument.
struct ToyMargins {
  double hinges = std::numeric_limits<double>::infinity();
  double preacts = std::numeric_limits<double>::infinity();
};

inline ToyMargins toy_kink_margin(const ToyInstance& toy) {
  ToyMargins m;
  auto hinge = [&](double v) { m.hinges = std::min(m.hinges, std::abs(v)); };
  for (const Triple& t : toy.batches.pos_triples) {
    hinge(score_triple(toy.emb, t, toy.model.norm) - toy.model.lambda);
  }
  for (const Triple& t : toy.batches.neg_triples) {
    hinge(score_triple(toy.emb, t, toy.model.norm) - toy.model.lambda);
  }
  for (const AlignedPair& p : toy.batches.train_pairs) {
    hinge(entity_distance(toy.emb, p.e1, p.e2));
  }
  for (const AlignedPair& p : toy.batches.neg_pairs) {
    const double dist = entity_distance(toy.emb, p.e1, p.e2);
    hinge(dist);
    hinge(toy.model.alpha - dist);
  }
  const EnabledKinds kinds{toy.critics.has(AxiomKind::Basic), toy.critics.has(AxiomKind::HeadGivenRel),
                           toy.critics.has(AxiomKind::TailGivenRel),
                           toy.critics.has(AxiomKind::PairGivenRel)};
  for (const SubKg* sub : {&toy.batches.sub1, &toy.batches.sub2}) {
    for (const AxiomSampleSet& set : extract_axiom_sets(*sub)) {
      if (!kinds.has(set.kind) || set.size() == 0) continue;
      const Critic& c = toy.critics.at(set.kind);
      AxiomBatch batch = build_axiom_batch(toy.emb, set);
      const std::size_t width = batch.inputs.cols;
      for (std::size_t row = 0; row < batch.inputs.rows; ++row) {
        for (std::size_t j = 0; j < c.hidden_width(); ++j) {
          double z = c.b1.at(0, j);
          for (std::size_t k = 0; k < width; ++k) {
            z += c.w1.at(j, k) * batch.inputs.at(row, k);
          }
          m.preacts = std::min(m.preacts, std::abs(z));
        }
      }
    }
  }
  return m;
}

struct GradSuiteResult {
  double max_rel_error = 0.0;
  std::size_t instances = 0;
  std::size_t coords_checked = 0;
  double seconds = 0.0;
  bool pass = false;
  std::string worst_location;
};

// Checks the combined training loss (alignment + translation + adversarial
// separation) against central differences, over both embedding tables and
// every critic parameter block, on `instances` randomized toys.
inline GradSuiteResult run_gradient_suite(std::size_t instances = 20, double tol = 1e-4) {
  const auto t0 = std::chrono::steady_clock::now();
  GradSuiteResult out;
  const EnabledKinds kinds = kinds_for_mode(AblationMode::Full);
  for (std::size_t i = 0; i < instances; ++i) {
    ToyInstance toy;
    bool usable = false;
    for (std::uint64_t attempt = 0; attempt < 100 && !usable; ++attempt) {
      toy = make_toy_instance(derive_seed(0x9dceu, i, attempt));
      const ToyMargins m = toy_kink_margin(toy);
      usable = m.hinges > 1e-3 && m.preacts > 1e-4;
    }
    if (!usable) throw NumericError("could not sample a kink-free gradient instance");

    auto eval = [&]() {
      const double la =
          alignment_loss(toy.emb, toy.batches.train_pairs, toy.batches.neg_pairs,
                         toy.model.alpha)
              .value;
      const double ls = scoring_loss(toy.emb, toy.batches.pos_triples, toy.batches.neg_triples,
                                     toy.model.lambda, toy.model.norm)
                            .value;
      const double ln = neo_batch_loss(toy.critics, toy.batches.sub1, toy.batches.sub2, toy.emb,
                                       kinds, /*want_embedding_grads=*/false,
                                       /*want_critic_grads=*/false)
                            .value;
      return toy.weight_align * la + toy.weight_score * ls + toy.weight_neo * ln;
    };

    AlignmentLoss align = alignment_loss(toy.emb, toy.batches.train_pairs,
                                         toy.batches.neg_pairs, toy.model.alpha);
    ScoringLoss score = scoring_loss(toy.emb, toy.batches.pos_triples, toy.batches.neg_triples,
                                     toy.model.lambda, toy.model.norm);
    NeoLossResult neo = neo_batch_loss(toy.critics, toy.batches.sub1, toy.batches.sub2, toy.emb,
                                       kinds, /*want_embedding_grads=*/true,
                                       /*want_critic_grads=*/true);
    LossGrads total = LossGrads::zeros_like(toy.emb);
    total.add_scaled(align.grads, toy.weight_align);
    total.add_scaled(score.grads, toy.weight_score);
    total.add_scaled(neo.embedding_grads, toy.weight_neo);

    std::vector<DenseMatrix*> params{&toy.emb.entity_emb, &toy.emb.relation_emb};
    std::vector<const DenseMatrix*> analytic{&total.d_entity, &total.d_relation};
    std::vector<CriticGrads> scaled;
    scaled.reserve(neo.critic_grads.size());
    for (auto& [kind, cg] : neo.critic_grads) {
      CriticGrads s = cg;
      for (DenseMatrix* m : {&s.w1, &s.b1, &s.w2, &s.b2}) {
        for (double& v : m->values) v *= toy.weight_neo;
      }
      scaled.push_back(std::move(s));
      Critic& c = toy.critics.critics.at(kind);
      params.push_back(&c.w1);
      params.push_back(&c.b1);
      params.push_back(&c.w2);
      params.push_back(&c.b2);
    }
    for (const CriticGrads& s : scaled) {
      analytic.push_back(&s.w1);
      analytic.push_back(&s.b1);
      analytic.push_back(&s.w2);
      analytic.push_back(&s.b2);
    }

    // The combined loss sits at O(10), so the difference quotient carries
    // rounding noise near 1e-9.  Some critic-bias coordinates have exactly
    // zero gradient (per-relation set coefficients cancel between sides),
    // and against the default 1e-8 floor that noise would read as a large
    // relative error.  1e-3 keeps a wide margin on both sides: noise stays
    // below tol * floor, while any real gradient bug above 1e-7 still trips.
    GradCheckResult res = finite_diff_check(eval, params, analytic, 1e-5, 1e-3);
    for (const DenseMatrix* p : analytic) out.coords_checked += p->values.size();
    if (res.max_rel_error > out.max_rel_error) {
      out.max_rel_error = res.max_rel_error;
      out.worst_location = res.where;
    }
    out.instances += 1;
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.pass = out.max_rel_error < tol;
  return out;
}

}  // namespace neoea
