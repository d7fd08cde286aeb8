#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "neoea/errors.hpp"
#include "neoea/kg.hpp"
#include "neoea/rng.hpp"

namespace testutil {

// Self-cleaning scratch directory under the system temp root.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::uint64_t counter = 0;
    const auto base = std::filesystem::temp_directory_path();
    path = base / ("neoea_test_" + std::to_string(::getpid()) + "_" +
                   std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw neoea::DataError("test: cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A ten-link OpenEA fixture: two 12-entity graphs, one fold directory with
// the 2/1/7 split.  Entity a<i> links to b<i> for i in 0..9.
inline void write_fixture_dataset(const std::filesystem::path& root) {
  std::string t1, t2;
  for (int i = 0; i < 10; ++i) {
    t1 += "a" + std::to_string(i) + "\tp0\ta" + std::to_string((i + 1) % 12) + "\n";
    t2 += "b" + std::to_string(i) + "\tq0\tb" + std::to_string((i + 1) % 12) + "\n";
  }
  t1 += "a10\tp1\ta11\n";
  t2 += "b10\tq1\tb11\n";
  write_file(root / "rel_triples_1", t1);
  write_file(root / "rel_triples_2", t2);

  std::string links;
  for (int i = 0; i < 10; ++i) {
    links += "a" + std::to_string(i) + "\tb" + std::to_string(i) + "\n";
  }
  write_file(root / "ent_links", links);

  auto link_lines = [](int lo, int hi) {
    std::string s;
    for (int i = lo; i < hi; ++i) {
      s += "a" + std::to_string(i) + "\tb" + std::to_string(i) + "\n";
    }
    return s;
  };
  for (int fold = 1; fold <= 5; ++fold) {
    const auto dir = root / "721_5fold" / std::to_string(fold);
    write_file(dir / "train_links", link_lines(0, 2));
    write_file(dir / "valid_links", link_lines(2, 3));
    write_file(dir / "test_links", link_lines(3, 10));
  }
}

// Random simple graph over `entities` x `relations` with exactly `triples`
// distinct triples.
inline neoea::KnowledgeGraph random_graph(neoea::KgTag tag, std::size_t entities,
                                          std::size_t relations, std::size_t triples,
                                          std::uint64_t seed) {
  neoea::KnowledgeGraph kg(tag);
  const char* ep = (tag == neoea::KgTag::Kg1) ? "a" : "b";
  const char* rp = (tag == neoea::KgTag::Kg1) ? "p" : "q";
  for (std::size_t i = 0; i < entities; ++i) kg.intern_entity(ep + std::to_string(i));
  for (std::size_t i = 0; i < relations; ++i) kg.intern_relation(rp + std::to_string(i));
  neoea::Rng rng(seed);
  std::size_t added = 0;
  while (added < triples) {
    const auto h = static_cast<std::uint32_t>(rng.below(entities));
    const auto r = static_cast<std::uint32_t>(rng.below(relations));
    const auto t = static_cast<std::uint32_t>(rng.below(entities));
    if (kg.add_triple(h, r, t)) ++added;
  }
  kg.build_indexes();
  return kg;
}

}  // namespace testutil
