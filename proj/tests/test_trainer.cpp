#include <cmath>
#include <vector>

#include "doctest.h"
#include "neoea/errors.hpp"
#include "neoea/trainer.hpp"
#include "test_util.hpp"

using namespace neoea;

namespace {

struct DatasetFixture {
  testutil::TempDir dir;
  LoadedDataset ds;

  DatasetFixture() {
    testutil::write_fixture_dataset(dir.path);
    ds = load_openea_dataset(dir.path, 1);
  }
};

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.model.dim = 4;
  cfg.mode = AblationMode::Full;
  cfg.critic_steps = 2;
  cfg.triple_batch = 8;
  cfg.subkg_batch = 8;
  cfg.neg_ratio = 2;
  cfg.max_epochs = 10;
  cfg.eval_every = 5;
  cfg.patience = 10;
  cfg.seed = 7;
  return cfg;
}

std::uint64_t state_checksum(const TrainState& st) {
  return matrix_checksum(st.emb.entity_emb) ^ mix64(matrix_checksum(st.emb.relation_emb)) ^
         mix64(st.critics.checksum());
}

}  // namespace

TEST_CASE("ablation modes nest") {
  EnabledKinds full = kinds_for_mode(AblationMode::Full);
  CHECK(full.basic);
  CHECK(full.head);
  CHECK(full.tail);
  CHECK(full.pair);

  EnabledKinds partial = kinds_for_mode(AblationMode::Partial);
  CHECK(partial.basic);
  CHECK(partial.head);
  CHECK(partial.tail);
  CHECK_FALSE(partial.pair);

  EnabledKinds basic = kinds_for_mode(AblationMode::Basic);
  CHECK(basic.basic);
  CHECK_FALSE(basic.head);
  CHECK_FALSE(basic.tail);
  CHECK_FALSE(basic.pair);

  CHECK_FALSE(kinds_for_mode(AblationMode::Original).any());

  CHECK(parse_ablation_mode("full") == AblationMode::Full);
  CHECK(parse_ablation_mode("partial") == AblationMode::Partial);
  CHECK(parse_ablation_mode("basic") == AblationMode::Basic);
  CHECK(parse_ablation_mode("original") == AblationMode::Original);
  CHECK_THROWS_AS(parse_ablation_mode("everything"), ConfigError);
  CHECK(std::string(ablation_mode_name(AblationMode::Partial)) == "partial");
}

TEST_CASE("config validation rejects each bad field") {
  TrainConfig good = small_config();
  CHECK_NOTHROW(validate_train_config(good));
  auto reject = [&](auto mutate) {
    TrainConfig bad = good;
    mutate(bad);
    CHECK_THROWS_AS(validate_train_config(bad), ConfigError);
  };
  reject([](TrainConfig& c) { c.model.dim = 0; });
  reject([](TrainConfig& c) { c.model.lambda = 0.0; });
  reject([](TrainConfig& c) { c.model.alpha = -1.0; });
  reject([](TrainConfig& c) { c.critic_steps = -1; });
  reject([](TrainConfig& c) { c.triple_batch = 0; });
  reject([](TrainConfig& c) { c.subkg_batch = 0; });
  reject([](TrainConfig& c) { c.neg_ratio = 0; });
  reject([](TrainConfig& c) { c.clip_c = 0.0; });
  reject([](TrainConfig& c) { c.max_epochs = 0; });
  reject([](TrainConfig& c) { c.eval_every = 0; });
  reject([](TrainConfig& c) { c.patience = 0; });
}

TEST_CASE("phase batches are deterministic per epoch") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  const std::vector<AlignedPair> train = f.ds.alignment.fold_pairs(FoldPart::Train);

  PhaseBatches a = build_phase_batches(f.ds.kg1, f.ds.kg2, f.ds.alignment, train, cfg, 3);
  PhaseBatches b = build_phase_batches(f.ds.kg1, f.ds.kg2, f.ds.alignment, train, cfg, 3);
  CHECK(a.pos_triples == b.pos_triples);
  CHECK(a.neg_triples == b.neg_triples);
  CHECK(a.sub1.triples == b.sub1.triples);
  CHECK(a.neg_pairs.size() == b.neg_pairs.size());

  PhaseBatches c = build_phase_batches(f.ds.kg1, f.ds.kg2, f.ds.alignment, train, cfg, 4);
  CHECK(a.pos_triples != c.pos_triples);

  // Both graphs contribute triple_batch positives (capped by store size).
  CHECK(a.pos_triples.size() == 16);
  CHECK(a.neg_triples.size() <= a.pos_triples.size() * 2);
  CHECK(a.train_pairs == train);
  // Sub-graphs are only sampled when the distribution loss is active.
  CHECK(a.sub1.triples.size() == 8);
  TrainConfig orig = cfg;
  orig.mode = AblationMode::Original;
  PhaseBatches d = build_phase_batches(f.ds.kg1, f.ds.kg2, f.ds.alignment, train, orig, 3);
  CHECK(d.sub1.triples.empty());
}

TEST_CASE("model phase updates embeddings and leaves critics alone") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  TrainState st;
  st.emb = EmbeddingTable::init(f.ds.kg1, f.ds.kg2, cfg.model.dim, 1);
  l2_normalize_rows(st.emb.entity_emb);
  st.critics = CriticSet::init(kinds_for_mode(cfg.mode), cfg.model.dim, cfg.clip_c, 2);
  st.model_opt = Optimizer(cfg.model_opt);
  st.critic_opt = Optimizer(cfg.critic_opt);

  const std::uint64_t critic_sum = st.critics.checksum();
  const std::uint64_t emb_sum = matrix_checksum(st.emb.entity_emb);
  PhaseBatches b = build_phase_batches(f.ds.kg1, f.ds.kg2, f.ds.alignment,
                                       f.ds.alignment.fold_pairs(FoldPart::Train), cfg, 1);
  PhaseLosses losses = model_phase_step(st, b, cfg);
  CHECK(std::isfinite(losses.l_align));
  CHECK(std::isfinite(losses.l_score));
  CHECK(std::isfinite(losses.l_sep));
  CHECK(matrix_checksum(st.emb.entity_emb) != emb_sum);
  CHECK(st.critics.checksum() == critic_sum);

  // Entity rows stay on the unit sphere when normalization is on.
  for (std::size_t r = 0; r < st.emb.entity_emb.rows; ++r) {
    double sq = 0.0;
    for (std::size_t k = 0; k < st.emb.dim(); ++k) {
      sq += st.emb.entity_emb.at(r, k) * st.emb.entity_emb.at(r, k);
    }
    CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("distribution loss is inert in original mode") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  cfg.mode = AblationMode::Original;
  TrainState st;
  st.emb = EmbeddingTable::init(f.ds.kg1, f.ds.kg2, cfg.model.dim, 1);
  st.model_opt = Optimizer(cfg.model_opt);
  st.critic_opt = Optimizer(cfg.critic_opt);
  PhaseBatches b = build_phase_batches(f.ds.kg1, f.ds.kg2, f.ds.alignment,
                                       f.ds.alignment.fold_pairs(FoldPart::Train), cfg, 1);
  PhaseLosses losses = model_phase_step(st, b, cfg);
  CHECK(losses.l_sep == 0.0);
}

TEST_CASE("evaluation pass is a pure snapshot") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  TrainState st;
  st.emb = EmbeddingTable::init(f.ds.kg1, f.ds.kg2, cfg.model.dim, 1);
  st.critics = CriticSet::init(kinds_for_mode(cfg.mode), cfg.model.dim, cfg.clip_c, 2);

  EvalPassResult a = evaluation_pass(st, f.ds.kg1, f.ds.kg2, f.ds.alignment, cfg);
  EvalPassResult b = evaluation_pass(st, f.ds.kg1, f.ds.kg2, f.ds.alignment, cfg);
  CHECK(a.l_align == b.l_align);
  CHECK(a.l_score == b.l_score);
  CHECK(a.l_sep == b.l_sep);
  CHECK(a.val_l_align == b.val_l_align);

  // The validation metric is the mean embedding distance over valid pairs.
  const std::vector<AlignedPair> valid = f.ds.alignment.fold_pairs(FoldPart::Valid);
  double sum = 0.0;
  for (const AlignedPair& p : valid) sum += entity_distance(st.emb, p.e1, p.e2);
  CHECK(a.val_l_align ==
        doctest::Approx(sum / static_cast<double>(valid.size())).epsilon(1e-12));
}

TEST_CASE("training runs to the epoch cap and tracks the best snapshot") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  TrainResult r = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, cfg);

  CHECK(r.state.status == "max_epochs");
  CHECK(r.state.epoch == 10);
  REQUIRE(r.log.size() == 2);
  CHECK(r.log[0].epoch == 5);
  CHECK(r.log[1].epoch == 10);
  CHECK(r.log[0].wall_ms <= r.log[1].wall_ms);
  for (const LogRecord& rec : r.log) {
    CHECK(std::isfinite(rec.l_align));
    CHECK(std::isfinite(rec.l_score));
    CHECK(std::isfinite(rec.l_sep));
    CHECK(std::isfinite(rec.val_l_align));
  }

  // The first evaluation always improves on infinity.
  CHECK(r.state.has_best);
  CHECK(r.state.best_epoch >= 5);
  CHECK(r.state.best_val < std::numeric_limits<double>::infinity());
  CHECK(&r.state.final_embeddings() == &r.state.best_emb);
  CHECK(r.state.final_embeddings().entity_emb.all_finite());
}

TEST_CASE("training is bitwise deterministic") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  TrainResult a = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, cfg);
  TrainResult b = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, cfg);
  CHECK(a.state.emb.entity_emb == b.state.emb.entity_emb);
  CHECK(a.state.emb.relation_emb == b.state.emb.relation_emb);
  CHECK(a.state.critics.checksum() == b.state.critics.checksum());
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].l_align == b.log[i].l_align);
    CHECK(a.log[i].l_score == b.log[i].l_score);
    CHECK(a.log[i].l_sep == b.log[i].l_sep);
    CHECK(a.log[i].val_l_align == b.log[i].val_l_align);
  }

  TrainConfig other = cfg;
  other.seed = 8;
  TrainResult c = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, other);
  CHECK(a.state.emb.entity_emb != c.state.emb.entity_emb);
}

TEST_CASE("original mode trains without critics") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  cfg.mode = AblationMode::Original;
  TrainResult r = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, cfg);
  CHECK(r.state.critics.empty());
  for (const LogRecord& rec : r.log) CHECK(rec.l_sep == 0.0);
  CHECK(r.state.status == "max_epochs");
}

TEST_CASE("debug checks observe clean phase isolation") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  cfg.debug_checks = true;
  TrainResult r = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, cfg);
  CHECK(r.state.clip_violations == 0);
  CHECK(r.state.isolation_violations == 0);
}

TEST_CASE("runaway steps end in diverged status") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  cfg.model.normalize_entities = false;
  cfg.model_opt = OptimizerConfig{OptimKind::Sgd, 1e200};
  TrainResult r = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, cfg);
  CHECK(r.state.status == "diverged");
}

TEST_CASE("checkpoint round trip preserves the exact state") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  TrainResult r = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, cfg);

  testutil::TempDir ckpt;
  save_checkpoint(r.state, cfg, 0xabcdULL, ckpt.path);
  TrainState back = load_checkpoint(ckpt.path, 0xabcdULL);

  CHECK(back.emb.entity_emb == r.state.emb.entity_emb);
  CHECK(back.emb.relation_emb == r.state.emb.relation_emb);
  CHECK(back.emb.entities_kg1 == r.state.emb.entities_kg1);
  CHECK(back.epoch == r.state.epoch);
  CHECK(std::bit_cast<std::uint64_t>(back.best_val) ==
        std::bit_cast<std::uint64_t>(r.state.best_val));
  CHECK(back.best_epoch == r.state.best_epoch);
  CHECK(back.evals_since_best == r.state.evals_since_best);
  CHECK(back.has_best == r.state.has_best);
  CHECK(back.status == r.state.status);
  CHECK(back.critics.checksum() == r.state.critics.checksum());
  CHECK(back.best_critics.checksum() == r.state.best_critics.checksum());
  CHECK(back.best_emb.entity_emb == r.state.best_emb.entity_emb);

  // Optimizer moments and step counters survive exactly.
  for (const auto& [name, slot] : r.state.model_opt.slots()) {
    const auto& loaded = back.model_opt.slots().at(name);
    CHECK(loaded.t == slot.t);
    CHECK(loaded.m == slot.m);
    CHECK(loaded.v == slot.v);
  }
  CHECK(back.model_opt.config().lr == cfg.model_opt.lr);
  CHECK(back.critic_opt.config().kind == OptimKind::RmsProp);
}

TEST_CASE("checkpoint loading guards format and config hash") {
  DatasetFixture f;
  TrainConfig cfg = small_config();
  cfg.max_epochs = 5;
  TrainResult r = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, cfg);

  testutil::TempDir ckpt;
  save_checkpoint(r.state, cfg, 1, ckpt.path);
  CHECK_THROWS_AS(load_checkpoint(ckpt.path, 2), ConfigError);
  CHECK_NOTHROW(load_checkpoint(ckpt.path, 2, /*allow_config_mismatch=*/true));

  testutil::TempDir empty;
  CHECK_THROWS_AS(load_checkpoint(empty.path, 1), DataError);

  testutil::write_file(ckpt.path / "manifest.json", "not json");
  CHECK_THROWS_AS(load_checkpoint(ckpt.path, 1), DataError);
  testutil::write_file(ckpt.path / "manifest.json", "{\"format\":\"other\",\"version\":1}");
  CHECK_THROWS_AS(load_checkpoint(ckpt.path, 1), DataError);
}

TEST_CASE("a resumed run replays the uninterrupted trajectory") {
  DatasetFixture f;
  TrainConfig full_cfg = small_config();
  full_cfg.max_epochs = 10;
  TrainResult whole = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, full_cfg);

  TrainConfig half_cfg = full_cfg;
  half_cfg.max_epochs = 5;
  TrainResult half = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, half_cfg);

  testutil::TempDir ckpt;
  save_checkpoint(half.state, half_cfg, 9, ckpt.path);
  TrainState restored = load_checkpoint(ckpt.path, 9);
  TrainResult resumed = train(f.ds.kg1, f.ds.kg2, f.ds.alignment, full_cfg, &restored);

  CHECK(resumed.state.epoch == whole.state.epoch);
  CHECK(resumed.state.status == whole.state.status);
  CHECK(resumed.state.emb.entity_emb == whole.state.emb.entity_emb);
  CHECK(resumed.state.emb.relation_emb == whole.state.emb.relation_emb);
  CHECK(resumed.state.critics.checksum() == whole.state.critics.checksum());
  CHECK(state_checksum(resumed.state) == state_checksum(whole.state));
  CHECK(std::bit_cast<std::uint64_t>(resumed.state.best_val) ==
        std::bit_cast<std::uint64_t>(whole.state.best_val));
  CHECK(resumed.state.best_emb.entity_emb == whole.state.best_emb.entity_emb);

  // The resumed log covers the remaining evaluations.
  REQUIRE(resumed.log.size() == 1);
  CHECK(resumed.log[0].epoch == 10);
  CHECK(resumed.log[0].l_align == whole.log[1].l_align);
  CHECK(resumed.log[0].val_l_align == whole.log[1].val_l_align);
}
