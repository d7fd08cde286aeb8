#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "neoea/errors.hpp"
#include "neoea/kg.hpp"
#include "neoea/rng.hpp"
#include "neoea/trainer.hpp"

namespace neoea {

struct SyntheticSpec {
  std::size_t entities = 300;
  std::size_t relations = 12;
  std::size_t triples = 900;
  double exponent = 2.5;       // target degree-distribution exponent
  double noise = 0.15;         // fraction of kg2 triples with a rewired endpoint
  double seed_fraction = 0.3;  // fraction of entities that get a seed link
  std::uint64_t seed = 1;
};

struct SyntheticDataset {
  SyntheticSpec spec;
  std::vector<std::array<std::uint32_t, 3>> triples1;  // (h, r, t) kg1 indices
  std::vector<std::array<std::uint32_t, 3>> triples2;  // kg2 indices
  std::vector<std::uint32_t> ent_perm;  // kg1 entity i <-> kg2 entity ent_perm[i]
  std::vector<std::uint32_t> rel_perm;
  std::vector<std::uint32_t> linked;  // kg1 entities with a seed link, ascending
  // folds[f][0..2]: train/valid/test kg1 entities of fold f+1
  std::array<std::array<std::vector<std::uint32_t>, 3>, 5> folds;
  std::size_t rewired = 0;
  std::size_t rewire_skipped = 0;
};

namespace detail {

// Endpoint sampler biased as w_i = (i+1)^(-1/(exponent-1)), which makes
// expected degrees follow the requested power law.
class PowerLawSampler {
 public:
  PowerLawSampler(std::size_t n, double exponent) {
    cum_.resize(n);
    double total = 0.0;
    const double p = -1.0 / (exponent - 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      total += std::pow(static_cast<double>(i + 1), p);
      cum_[i] = total;
    }
  }

  std::uint32_t draw(Rng& rng) const {
    const double u = rng.real01() * cum_.back();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    const auto idx = static_cast<std::size_t>(it - cum_.begin());
    return static_cast<std::uint32_t>(std::min(idx, cum_.size() - 1));
  }

 private:
  std::vector<double> cum_;
};

inline std::vector<std::uint32_t> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
  Rng rng(seed);
  rng.shuffle(perm);
  return perm;
}

}  // namespace detail

inline void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.entities < 2) throw ConfigError("synthetic.entities must be at least 2");
  if (spec.relations < 1) throw ConfigError("synthetic.relations must be positive");
  if (spec.triples < 1) throw ConfigError("synthetic.triples must be positive");
  if (!(spec.exponent > 1.0)) throw ConfigError("synthetic.exponent must exceed 1");
  if (spec.noise < 0.0 || spec.noise > 1.0) {
    throw ConfigError("synthetic.noise must be in [0, 1]");
  }
  if (!(spec.seed_fraction > 0.0) || spec.seed_fraction > 1.0) {
    throw ConfigError("synthetic.seed_fraction must be in (0, 1]");
  }
  const auto capacity = static_cast<unsigned __int128>(spec.entities) * spec.entities *
                        spec.relations;
  if (static_cast<unsigned __int128>(spec.triples) > capacity) {
    throw ConfigError("synthetic.triples exceeds the number of distinct triples");
  }
}

// Generates an isomorphic graph pair: kg1 with power-law endpoint
// frequencies, kg2 as a doubly permuted copy with `noise * triples`
// endpoints rewired, a seed link for round(seed_fraction * entities)
// entities, and five independent 2/1/7 fold splits of those links.
inline SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  SyntheticDataset out;
  out.spec = spec;

  // kg1 triples, distinct.
  const detail::PowerLawSampler sampler(spec.entities, spec.exponent);
  std::unordered_set<std::uint64_t> keys1;
  {
    Rng rng(derive_seed(spec.seed, stream::kSynthetic, 1));
    const auto capacity = static_cast<unsigned __int128>(spec.entities) * spec.entities *
                          spec.relations;
    if (static_cast<unsigned __int128>(spec.triples) * 2 > capacity) {
      // Dense request: enumerate every triple and keep a shuffled prefix.
      if (capacity > 50'000'000) {
        throw ConfigError("synthetic.triples is too close to the distinct-triple capacity");
      }
      std::vector<std::array<std::uint32_t, 3>> all;
      all.reserve(static_cast<std::size_t>(capacity));
      for (std::uint32_t h = 0; h < spec.entities; ++h) {
        for (std::uint32_t r = 0; r < spec.relations; ++r) {
          for (std::uint32_t t = 0; t < spec.entities; ++t) {
            all.push_back({h, r, t});
          }
        }
      }
      rng.shuffle(all);
      all.resize(spec.triples);
      out.triples1 = std::move(all);
      for (const auto& tr : out.triples1) {
        keys1.insert(detail::pack_triple(tr[0], tr[1], tr[2]));
      }
    } else {
      while (out.triples1.size() < spec.triples) {
        const std::uint32_t h = sampler.draw(rng);
        const auto r = static_cast<std::uint32_t>(rng.below(spec.relations));
        const std::uint32_t t = sampler.draw(rng);
        if (keys1.insert(detail::pack_triple(h, r, t)).second) {
          out.triples1.push_back({h, r, t});
        }
      }
    }
  }

  // kg2: permute, then rewire a noise fraction of the copied triples.
  out.ent_perm = detail::random_permutation(spec.entities,
                                            derive_seed(spec.seed, stream::kSynthetic, 2));
  out.rel_perm = detail::random_permutation(spec.relations,
                                            derive_seed(spec.seed, stream::kSynthetic, 3));
  out.triples2.reserve(spec.triples);
  std::unordered_set<std::uint64_t> keys2;
  for (const auto& [h, r, t] : out.triples1) {
    const std::array<std::uint32_t, 3> tr{out.ent_perm[h], out.rel_perm[r], out.ent_perm[t]};
    out.triples2.push_back(tr);
    keys2.insert(detail::pack_triple(tr[0], tr[1], tr[2]));
  }
  const auto n_rewire =
      static_cast<std::size_t>(std::llround(spec.noise * static_cast<double>(spec.triples)));
  if (n_rewire > 0) {
    Rng sel(derive_seed(spec.seed, stream::kSynthetic, 4));
    Rng draw(derive_seed(spec.seed, stream::kSynthetic, 5));
    const std::vector<std::uint32_t> picks =
        sel.sample_indices(static_cast<std::uint32_t>(spec.triples),
                           static_cast<std::uint32_t>(n_rewire));
    for (const std::uint32_t idx : picks) {
      std::array<std::uint32_t, 3>& tr = out.triples2[idx];
      keys2.erase(detail::pack_triple(tr[0], tr[1], tr[2]));
      bool placed = false;
      for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
        std::array<std::uint32_t, 3> cand = tr;
        const auto repl = static_cast<std::uint32_t>(draw.below(spec.entities));
        if (draw.coin()) {
          cand[0] = repl;
        } else {
          cand[2] = repl;
        }
        if (keys2.insert(detail::pack_triple(cand[0], cand[1], cand[2])).second) {
          tr = cand;
          placed = true;
        }
      }
      if (placed) {
        out.rewired += 1;
      } else {
        keys2.insert(detail::pack_triple(tr[0], tr[1], tr[2]));
        out.rewire_skipped += 1;
      }
    }
  }

  // Seed links and their five fold splits.  Links may only reference
  // entities that actually occur in both graphs' triples; the power-law
  // tail can leave entities without any triple.
  const auto n_links = static_cast<std::size_t>(
      std::llround(spec.seed_fraction * static_cast<double>(spec.entities)));
  if (n_links < 1) throw ConfigError("synthetic.seed_fraction yields no seed links");
  const auto n_train = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n_links)));
  const auto n_valid = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n_links)));
  if (n_train < 1 || n_valid < 1 || n_train + n_valid >= n_links) {
    throw ConfigError("synthetic seed set is too small to split into folds");
  }
  {
    std::vector<bool> occ1(spec.entities, false), occ2(spec.entities, false);
    for (const auto& [h, r, t] : out.triples1) {
      occ1[h] = true;
      occ1[t] = true;
    }
    for (const auto& [h, r, t] : out.triples2) {
      occ2[h] = true;
      occ2[t] = true;
    }
    std::vector<std::uint32_t> eligible;
    for (std::uint32_t e = 0; e < spec.entities; ++e) {
      if (occ1[e] && occ2[out.ent_perm[e]]) eligible.push_back(e);
    }
    if (eligible.size() < n_links) {
      throw ConfigError("not enough connected entities for the requested seed fraction");
    }
    Rng rng(derive_seed(spec.seed, stream::kSynthetic, 6));
    const std::vector<std::uint32_t> picks =
        rng.sample_indices(static_cast<std::uint32_t>(eligible.size()),
                           static_cast<std::uint32_t>(n_links));
    out.linked.reserve(n_links);
    for (const std::uint32_t p : picks) out.linked.push_back(eligible[p]);
    std::sort(out.linked.begin(), out.linked.end());
  }
  for (std::size_t f = 0; f < 5; ++f) {
    std::vector<std::uint32_t> order = out.linked;
    Rng rng(derive_seed(spec.seed, stream::kSynthetic, 7 + f));
    rng.shuffle(order);
    auto& parts = out.folds[f];
    parts[0].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    parts[1].assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                    order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    parts[2].assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), order.end());
    for (auto& part : parts) std::sort(part.begin(), part.end());
  }
  return out;
}

namespace detail {

inline std::string synthetic_entity_label(KgTag kg, std::uint32_t idx) {
  return std::string(kg_tag_name(kg)) + "/e" + std::to_string(idx);
}

inline std::string synthetic_relation_label(KgTag kg, std::uint32_t idx) {
  return std::string(kg_tag_name(kg)) + "/r" + std::to_string(idx);
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace detail

// Writes the dataset in the directory layout the loader expects, plus a
// rel_links file with the relation correspondence.  Output is a pure
// function of the dataset, byte for byte.
inline void write_openea(const SyntheticDataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream f = detail::open_for_write(dir / "rel_triples_1");
    for (const auto& [h, r, t] : ds.triples1) {
      f << detail::synthetic_entity_label(KgTag::Kg1, h) << '\t'
        << detail::synthetic_relation_label(KgTag::Kg1, r) << '\t'
        << detail::synthetic_entity_label(KgTag::Kg1, t) << '\n';
    }
  }
  {
    std::ofstream f = detail::open_for_write(dir / "rel_triples_2");
    for (const auto& [h, r, t] : ds.triples2) {
      f << detail::synthetic_entity_label(KgTag::Kg2, h) << '\t'
        << detail::synthetic_relation_label(KgTag::Kg2, r) << '\t'
        << detail::synthetic_entity_label(KgTag::Kg2, t) << '\n';
    }
  }
  {
    std::ofstream f = detail::open_for_write(dir / "ent_links");
    for (const std::uint32_t e : ds.linked) {
      f << detail::synthetic_entity_label(KgTag::Kg1, e) << '\t'
        << detail::synthetic_entity_label(KgTag::Kg2, ds.ent_perm[e]) << '\n';
    }
  }
  {
    std::ofstream f = detail::open_for_write(dir / "rel_links");
    for (std::uint32_t r = 0; r < ds.rel_perm.size(); ++r) {
      f << detail::synthetic_relation_label(KgTag::Kg1, r) << '\t'
        << detail::synthetic_relation_label(KgTag::Kg2, ds.rel_perm[r]) << '\n';
    }
  }
  for (std::size_t f = 0; f < 5; ++f) {
    const fs::path fold_dir = dir / "721_5fold" / std::to_string(f + 1);
    fs::create_directories(fold_dir);
    const std::array<const char*, 3> names{"train_links", "valid_links", "test_links"};
    for (std::size_t p = 0; p < 3; ++p) {
      std::ofstream out = detail::open_for_write(fold_dir / names[p]);
      for (const std::uint32_t e : ds.folds[f][p]) {
        out << detail::synthetic_entity_label(KgTag::Kg1, e) << '\t'
            << detail::synthetic_entity_label(KgTag::Kg2, ds.ent_perm[e]) << '\n';
      }
    }
  }
}

}  // namespace neoea
