#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "neoea/errors.hpp"
#include "neoea/rng.hpp"

namespace neoea {

enum class KgTag : std::uint8_t { Kg1 = 0, Kg2 = 1 };

inline const char* kg_tag_name(KgTag t) { return t == KgTag::Kg1 ? "kg1" : "kg2"; }

// Interned, per-graph dense ids.  The tag travels with the id so that a
// merged embedding table can resolve rows without extra context.
struct EntityId {
  std::uint32_t idx = 0;
  KgTag kg = KgTag::Kg1;
  friend bool operator==(const EntityId&, const EntityId&) = default;
  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

struct RelationId {
  std::uint32_t idx = 0;
  KgTag kg = KgTag::Kg1;
  friend bool operator==(const RelationId&, const RelationId&) = default;
  friend auto operator<=>(const RelationId&, const RelationId&) = default;
};

struct Triple {
  EntityId head;
  RelationId rel;
  EntityId tail;
  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

namespace detail {

// Ids are packed three-per-u64 for the membership set; 2^21 per field.
constexpr std::uint32_t kMaxInternedId = (1u << 21) - 1;

inline std::uint64_t pack_triple(std::uint32_t h, std::uint32_t r, std::uint32_t t) {
  return (static_cast<std::uint64_t>(h) << 42) | (static_cast<std::uint64_t>(r) << 21) |
         static_cast<std::uint64_t>(t);
}

inline std::uint64_t pack_pair(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

}  // namespace detail

// One knowledge graph: interned labels, the triple sequence, and derived
// indexes.  Indexes are pure functions of `triples` (see build_indexes).
struct KnowledgeGraph {
  KgTag tag = KgTag::Kg1;

  std::vector<std::string> entity_labels;
  std::vector<std::string> relation_labels;
  std::unordered_map<std::string, std::uint32_t> entity_by_label;
  std::unordered_map<std::string, std::uint32_t> relation_by_label;
  std::vector<Triple> triples;

  // Derived; rebuilt by build_indexes().
  std::vector<std::vector<std::uint32_t>> heads_by_relation;  // sorted, distinct
  std::vector<std::vector<std::uint32_t>> tails_by_relation;  // sorted, distinct
  std::vector<std::vector<std::uint32_t>> neighbors;          // sorted, distinct
  std::unordered_set<std::uint64_t> triple_keys;

  explicit KnowledgeGraph(KgTag t = KgTag::Kg1) : tag(t) {}

  std::size_t num_entities() const { return entity_labels.size(); }
  std::size_t num_relations() const { return relation_labels.size(); }

  EntityId entity(std::uint32_t idx) const { return EntityId{idx, tag}; }
  RelationId relation(std::uint32_t idx) const { return RelationId{idx, tag}; }

  std::uint32_t intern_entity(const std::string& label) {
    auto it = entity_by_label.find(label);
    if (it != entity_by_label.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(entity_labels.size());
    if (id > detail::kMaxInternedId) throw DataError("entity id space exhausted");
    entity_labels.push_back(label);
    entity_by_label.emplace(label, id);
    return id;
  }

  std::uint32_t intern_relation(const std::string& label) {
    auto it = relation_by_label.find(label);
    if (it != relation_by_label.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(relation_labels.size());
    if (id > detail::kMaxInternedId) throw DataError("relation id space exhausted");
    relation_labels.push_back(label);
    relation_by_label.emplace(label, id);
    return id;
  }

  std::optional<std::uint32_t> find_entity(const std::string& label) const {
    auto it = entity_by_label.find(label);
    if (it == entity_by_label.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::uint32_t h, std::uint32_t r, std::uint32_t t) const {
    return triple_keys.count(detail::pack_triple(h, r, t)) != 0;
  }

  // Appends (h, r, t); returns false on an exact duplicate.
  bool add_triple(std::uint32_t h, std::uint32_t r, std::uint32_t t) {
    const std::uint64_t key = detail::pack_triple(h, r, t);
    if (!triple_keys.insert(key).second) return false;
    triples.push_back(Triple{EntityId{h, tag}, RelationId{r, tag}, EntityId{t, tag}});
    return true;
  }

  // Rebuilds every derived index from the triple sequence.
  void build_indexes() {
    heads_by_relation.assign(num_relations(), {});
    tails_by_relation.assign(num_relations(), {});
    neighbors.assign(num_entities(), {});
    triple_keys.clear();
    for (const Triple& tr : triples) {
      triple_keys.insert(detail::pack_triple(tr.head.idx, tr.rel.idx, tr.tail.idx));
      heads_by_relation[tr.rel.idx].push_back(tr.head.idx);
      tails_by_relation[tr.rel.idx].push_back(tr.tail.idx);
      neighbors[tr.head.idx].push_back(tr.tail.idx);
      if (tr.tail.idx != tr.head.idx) neighbors[tr.tail.idx].push_back(tr.head.idx);
    }
    auto dedupe = [](std::vector<std::uint32_t>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    for (auto& v : heads_by_relation) dedupe(v);
    for (auto& v : tails_by_relation) dedupe(v);
    for (auto& v : neighbors) dedupe(v);
  }

  // Distinct-neighbor count.
  std::size_t degree(std::uint32_t e) const { return neighbors[e].size(); }
};

// One aligned entity pair; e1 lives in KG1, e2 in KG2.
struct AlignedPair {
  EntityId e1;
  EntityId e2;
  friend bool operator==(const AlignedPair&, const AlignedPair&) = default;
};

enum class FoldPart : std::uint8_t { Train = 0, Valid = 1, Test = 2 };

// The seed alignment: every known pair plus its fold assignment.  An
// entity appears in at most one pair.
struct SeedAlignment {
  std::vector<AlignedPair> pairs;
  std::vector<FoldPart> partition;             // parallel to pairs
  std::unordered_set<std::uint64_t> pair_keys;  // (e1.idx, e2.idx) packed

  bool contains(std::uint32_t idx1, std::uint32_t idx2) const {
    return pair_keys.count(detail::pack_pair(idx1, idx2)) != 0;
  }

  std::vector<AlignedPair> fold_pairs(FoldPart part) const {
    std::vector<AlignedPair> out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (partition[i] == part) out.push_back(pairs[i]);
    }
    return out;
  }
};

// One-to-one relation correspondence; used by diagnostics and by the
// pairwise form of the distribution loss, never by training.
struct RelationAlignment {
  std::vector<std::pair<RelationId, RelationId>> pairs;
};

inline RelationAlignment make_relation_alignment(
    const std::vector<std::pair<RelationId, RelationId>>& pairs) {
  std::unordered_set<std::uint32_t> left, right;
  for (const auto& [r1, r2] : pairs) {
    if (r1.kg != KgTag::Kg1 || r2.kg != KgTag::Kg2) {
      throw DataError("relation alignment: sides must be (kg1, kg2)");
    }
    if (!left.insert(r1.idx).second || !right.insert(r2.idx).second) {
      throw DataError("relation alignment is not one-to-one");
    }
  }
  return RelationAlignment{pairs};
}

// A sampled sub-graph: the triple sample plus the entity/relation sets it
// induces (sorted, distinct).
struct SubKg {
  KgTag tag = KgTag::Kg1;
  std::vector<Triple> triples;
  std::vector<std::uint32_t> entities;
  std::vector<std::uint32_t> relations;
};

// Uniform triple sample without replacement; min(batch_size, |T|) triples.
inline SubKg sample_subkg(const KnowledgeGraph& kg, std::size_t batch_size,
                          std::uint64_t seed) {
  if (batch_size == 0) throw ConfigError("sample_subkg: batch_size must be positive");
  SubKg out;
  out.tag = kg.tag;
  const auto n = static_cast<std::uint32_t>(kg.triples.size());
  const auto k = static_cast<std::uint32_t>(std::min<std::size_t>(batch_size, n));
  Rng rng(seed);
  std::vector<std::uint32_t> picks = rng.sample_indices(n, k);
  out.triples.reserve(k);
  std::unordered_set<std::uint32_t> ents, rels;
  for (std::uint32_t i : picks) {
    const Triple& tr = kg.triples[i];
    out.triples.push_back(tr);
    ents.insert(tr.head.idx);
    ents.insert(tr.tail.idx);
    rels.insert(tr.rel.idx);
  }
  out.entities.assign(ents.begin(), ents.end());
  out.relations.assign(rels.begin(), rels.end());
  std::sort(out.entities.begin(), out.entities.end());
  std::sort(out.relations.begin(), out.relations.end());
  return out;
}

// The four sample-set families drawn from a sub-graph.  Basic covers every
// entity; the conditional kinds are per-relation.
enum class AxiomKind : std::uint8_t { Basic = 0, HeadGivenRel, TailGivenRel, PairGivenRel };

inline const char* axiom_kind_name(AxiomKind k) {
  switch (k) {
    case AxiomKind::Basic: return "basic";
    case AxiomKind::HeadGivenRel: return "head";
    case AxiomKind::TailGivenRel: return "tail";
    case AxiomKind::PairGivenRel: return "pair";
  }
  return "?";
}

struct AxiomSampleSet {
  AxiomKind kind = AxiomKind::Basic;
  KgTag kg = KgTag::Kg1;
  std::optional<RelationId> rel;                           // empty for Basic
  std::vector<EntityId> members;                           // Basic/Head/Tail
  std::vector<std::pair<EntityId, EntityId>> pair_members;  // Pair: (head, tail)

  std::size_t size() const {
    return kind == AxiomKind::PairGivenRel ? pair_members.size() : members.size();
  }
};

// Enumerates the sample sets of a sub-graph: one Basic set, then one
// Head/Tail/Pair set per relation in ascending relation order.  Members
// are sorted and distinct.
inline std::vector<AxiomSampleSet> extract_axiom_sets(const SubKg& sub) {
  std::vector<AxiomSampleSet> out;
  AxiomSampleSet basic;
  basic.kind = AxiomKind::Basic;
  basic.kg = sub.tag;
  basic.members.reserve(sub.entities.size());
  for (std::uint32_t e : sub.entities) basic.members.push_back(EntityId{e, sub.tag});
  out.push_back(std::move(basic));

  for (std::uint32_t r : sub.relations) {
    std::vector<std::uint32_t> heads, tails;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (const Triple& tr : sub.triples) {
      if (tr.rel.idx != r) continue;
      heads.push_back(tr.head.idx);
      tails.push_back(tr.tail.idx);
      pairs.emplace_back(tr.head.idx, tr.tail.idx);
    }
    auto dedupe32 = [](std::vector<std::uint32_t>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedupe32(heads);
    dedupe32(tails);
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    const RelationId rid{r, sub.tag};
    AxiomSampleSet hs, ts, ps;
    hs.kind = AxiomKind::HeadGivenRel;
    ts.kind = AxiomKind::TailGivenRel;
    ps.kind = AxiomKind::PairGivenRel;
    for (AxiomSampleSet* s : {&hs, &ts, &ps}) {
      s->kg = sub.tag;
      s->rel = rid;
    }
    for (std::uint32_t e : heads) hs.members.push_back(EntityId{e, sub.tag});
    for (std::uint32_t e : tails) ts.members.push_back(EntityId{e, sub.tag});
    for (auto [h, t] : pairs) {
      ps.pair_members.emplace_back(EntityId{h, sub.tag}, EntityId{t, sub.tag});
    }
    out.push_back(std::move(hs));
    out.push_back(std::move(ts));
    out.push_back(std::move(ps));
  }
  return out;
}

struct TripleCorruptions {
  std::vector<Triple> triples;
  std::size_t skipped = 0;  // positives whose corruption never left the triple store
};

// Negative triples: per positive, `ratio` corruptions replacing head or
// tail (fair coin) with a uniform entity of the same graph.  A candidate
// already present in the positive store is resampled, up to 100 attempts.
inline TripleCorruptions corrupt_triples(const KnowledgeGraph& kg,
                                         const std::vector<Triple>& positives,
                                         int ratio, std::uint64_t seed) {
  if (ratio < 1) throw ConfigError("corrupt_triples: ratio must be >= 1");
  TripleCorruptions out;
  out.triples.reserve(positives.size() * static_cast<std::size_t>(ratio));
  Rng rng(seed);
  const auto num_entities = static_cast<std::uint64_t>(kg.num_entities());
  for (const Triple& pos : positives) {
    for (int j = 0; j < ratio; ++j) {
      bool emitted = false;
      for (int attempt = 0; attempt < 100; ++attempt) {
        Triple cand = pos;
        const auto repl = static_cast<std::uint32_t>(rng.below(num_entities));
        if (rng.coin()) {
          cand.head.idx = repl;
        } else {
          cand.tail.idx = repl;
        }
        if (!kg.contains(cand.head.idx, cand.rel.idx, cand.tail.idx)) {
          out.triples.push_back(cand);
          emitted = true;
          break;
        }
      }
      if (!emitted) out.skipped += 1;
    }
  }
  return out;
}

struct PairCorruptions {
  std::vector<AlignedPair> pairs;
  std::size_t skipped = 0;
};

// Negative pairs: corrupt one side of each training pair with a uniform
// entity of that side's graph; candidates found anywhere in the seed
// alignment are resampled (100-attempt cap, then skipped).
inline PairCorruptions sample_negative_pairs(const SeedAlignment& alignment,
                                             const KnowledgeGraph& kg1,
                                             const KnowledgeGraph& kg2, int ratio,
                                             std::uint64_t seed) {
  if (ratio < 0) throw ConfigError("sample_negative_pairs: ratio must be >= 0");
  PairCorruptions out;
  Rng rng(seed);
  const auto n1 = static_cast<std::uint64_t>(kg1.num_entities());
  const auto n2 = static_cast<std::uint64_t>(kg2.num_entities());
  for (std::size_t i = 0; i < alignment.pairs.size(); ++i) {
    if (alignment.partition[i] != FoldPart::Train) continue;
    const AlignedPair& pos = alignment.pairs[i];
    for (int j = 0; j < ratio; ++j) {
      bool emitted = false;
      for (int attempt = 0; attempt < 100; ++attempt) {
        AlignedPair cand = pos;
        if (rng.coin()) {
          cand.e1.idx = static_cast<std::uint32_t>(rng.below(n1));
        } else {
          cand.e2.idx = static_cast<std::uint32_t>(rng.below(n2));
        }
        if (!alignment.contains(cand.e1.idx, cand.e2.idx)) {
          out.pairs.push_back(cand);
          emitted = true;
          break;
        }
      }
      if (!emitted) out.skipped += 1;
    }
  }
  return out;
}

// ---- dataset loading -------------------------------------------------------
//
// Directory layout: rel_triples_1 and rel_triples_2 (tab-separated
// head/relation/tail labels), ent_links (tab-separated pairs), and
// 721_5fold/<fold>/{train_links,valid_links,test_links} partitioning the
// links.  Files are UTF-8 with LF line endings.

struct LoadedDataset {
  KnowledgeGraph kg1{KgTag::Kg1};
  KnowledgeGraph kg2{KgTag::Kg2};
  SeedAlignment alignment;
  std::size_t duplicate_triples_kg1 = 0;
  std::size_t duplicate_triples_kg2 = 0;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

template <class LineFn>
void for_each_line(const std::filesystem::path& path, LineFn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(line, lineno);
  }
}

inline std::size_t load_triple_file(const std::filesystem::path& path, KnowledgeGraph& kg) {
  std::size_t duplicates = 0;
  bool any = false;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    any = true;
    const std::vector<std::string> f = split_tabs(line);
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty()) {
      throw DataError("malformed triple at " + path.string() + ":" + std::to_string(lineno));
    }
    const std::uint32_t h = kg.intern_entity(f[0]);
    const std::uint32_t r = kg.intern_relation(f[1]);
    const std::uint32_t t = kg.intern_entity(f[2]);
    if (!kg.add_triple(h, r, t)) ++duplicates;
  });
  if (!any) throw DataError("empty triple file: " + path.string());
  return duplicates;
}

inline std::vector<std::pair<std::string, std::string>> load_link_file(
    const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> out;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    const std::vector<std::string> f = split_tabs(line);
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      throw DataError("malformed link at " + path.string() + ":" + std::to_string(lineno));
    }
    out.emplace_back(f[0], f[1]);
  });
  return out;
}

}  // namespace detail

inline LoadedDataset load_openea_dataset(const std::filesystem::path& root, int fold) {
  if (fold < 1 || fold > 5) throw ConfigError("fold must be in 1..5");
  LoadedDataset ds;
  ds.duplicate_triples_kg1 = detail::load_triple_file(root / "rel_triples_1", ds.kg1);
  ds.duplicate_triples_kg2 = detail::load_triple_file(root / "rel_triples_2", ds.kg2);
  ds.kg1.build_indexes();
  ds.kg2.build_indexes();

  const auto links = detail::load_link_file(root / "ent_links");
  std::unordered_map<std::uint64_t, std::size_t> pair_index;
  std::unordered_set<std::uint32_t> used1, used2;
  for (const auto& [l1, l2] : links) {
    const auto e1 = ds.kg1.find_entity(l1);
    const auto e2 = ds.kg2.find_entity(l2);
    if (!e1) throw DataError("ent_links references unknown kg1 entity: " + l1);
    if (!e2) throw DataError("ent_links references unknown kg2 entity: " + l2);
    if (!used1.insert(*e1).second || !used2.insert(*e2).second) {
      throw DataError("duplicate link for entity: " + l1 + " / " + l2);
    }
    pair_index.emplace(detail::pack_pair(*e1, *e2), ds.alignment.pairs.size());
    ds.alignment.pairs.push_back(AlignedPair{EntityId{*e1, KgTag::Kg1}, EntityId{*e2, KgTag::Kg2}});
    ds.alignment.pair_keys.insert(detail::pack_pair(*e1, *e2));
  }
  ds.alignment.partition.assign(ds.alignment.pairs.size(), FoldPart::Train);

  const std::filesystem::path fold_dir = root / "721_5fold" / std::to_string(fold);
  std::vector<bool> assigned(ds.alignment.pairs.size(), false);
  const std::array<std::pair<const char*, FoldPart>, 3> parts{{
      {"train_links", FoldPart::Train},
      {"valid_links", FoldPart::Valid},
      {"test_links", FoldPart::Test},
  }};
  for (const auto& [name, part] : parts) {
    for (const auto& [l1, l2] : detail::load_link_file(fold_dir / name)) {
      const auto e1 = ds.kg1.find_entity(l1);
      const auto e2 = ds.kg2.find_entity(l2);
      if (!e1 || !e2) {
        throw DataError(std::string("fold link references unknown entity: ") + l1 + " / " + l2);
      }
      const auto it = pair_index.find(detail::pack_pair(*e1, *e2));
      if (it == pair_index.end()) {
        throw DataError(std::string("fold link not present in ent_links: ") + l1 + " / " + l2);
      }
      if (assigned[it->second]) {
        throw DataError(std::string("fold parts overlap on link: ") + l1 + " / " + l2);
      }
      assigned[it->second] = true;
      ds.alignment.partition[it->second] = part;
    }
  }
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (!assigned[i]) {
      throw DataError("fold parts do not cover ent_links (missing pair index " +
                      std::to_string(i) + ")");
    }
  }
  return ds;
}

// Optional rel_links file (same two-column format as ent_links).  Returns
// nothing if the file does not exist.
inline std::optional<RelationAlignment> load_relation_links(
    const std::filesystem::path& root, const KnowledgeGraph& kg1, const KnowledgeGraph& kg2) {
  const std::filesystem::path path = root / "rel_links";
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::vector<std::pair<RelationId, RelationId>> pairs;
  for (const auto& [l1, l2] : detail::load_link_file(path)) {
    const auto it1 = kg1.relation_by_label.find(l1);
    const auto it2 = kg2.relation_by_label.find(l2);
    if (it1 == kg1.relation_by_label.end() || it2 == kg2.relation_by_label.end()) {
      throw DataError("rel_links references unknown relation: " + l1 + " / " + l2);
    }
    pairs.emplace_back(RelationId{it1->second, KgTag::Kg1}, RelationId{it2->second, KgTag::Kg2});
  }
  return make_relation_alignment(pairs);
}

}  // namespace neoea
