#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "neoea/errors.hpp"
#include "neoea/matrix.hpp"
#include "neoea/synthetic.hpp"
#include "neoea/trainer.hpp"

namespace neoea {

// Run configuration: a flat JSON object with dotted keys.  Unknown keys
// are rejected outright so typos cannot silently fall back to defaults.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out;           // run directory; excluded from the config hash
  std::string dataset_path;  // empty means no on-disk dataset
  int fold = 1;
  bool synthetic_enabled = false;
  std::size_t synthetic_entities = 300;
  std::size_t synthetic_relations = 12;
  std::size_t synthetic_triples = 900;
  double synthetic_exponent = 2.5;
  double synthetic_noise = 0.15;
  double synthetic_seed_fraction = 0.3;
  std::size_t model_dim = 32;
  double model_lambda = 0.5;
  double model_alpha = 1.0;
  std::string model_norm = "l2";
  bool model_normalize_entities = true;
  std::string train_mode = "full";
  int train_critic_steps = 5;
  std::size_t train_triple_batch = 256;
  std::size_t train_subkg_batch = 256;
  int train_neg_ratio = 2;
  double train_model_lr = 1e-3;
  double train_critic_lr = 5e-4;
  double train_clip_c = 0.01;
  int train_max_epochs = 400;
  int train_eval_every = 5;
  int train_patience = 10;
  double train_weight_align = 1.0;
  double train_weight_score = 1.0;
  double train_weight_neo = 1.0;
  bool train_debug_checks = false;
  std::vector<std::size_t> rank_bins{1, 5, 20, 100};

  TrainConfig train_config() const {
    TrainConfig cfg;
    cfg.model.dim = model_dim;
    cfg.model.lambda = model_lambda;
    cfg.model.alpha = model_alpha;
    cfg.model.norm = (model_norm == "l1") ? Norm::L1 : Norm::L2;
    cfg.model.normalize_entities = model_normalize_entities;
    cfg.mode = parse_ablation_mode(train_mode);
    cfg.critic_steps = train_critic_steps;
    cfg.triple_batch = train_triple_batch;
    cfg.subkg_batch = train_subkg_batch;
    cfg.neg_ratio = train_neg_ratio;
    cfg.model_opt = OptimizerConfig{OptimKind::Adam, train_model_lr};
    cfg.critic_opt.kind = OptimKind::RmsProp;
    cfg.critic_opt.lr = train_critic_lr;
    cfg.clip_c = train_clip_c;
    cfg.max_epochs = train_max_epochs;
    cfg.eval_every = train_eval_every;
    cfg.patience = train_patience;
    cfg.weight_align = train_weight_align;
    cfg.weight_score = train_weight_score;
    cfg.weight_neo = train_weight_neo;
    cfg.debug_checks = train_debug_checks;
    cfg.seed = seed;
    return cfg;
  }

  // The generator seed is derived from the master seed, so a run is fully
  // determined by one number.
  SyntheticSpec synthetic_spec() const {
    SyntheticSpec spec;
    spec.entities = synthetic_entities;
    spec.relations = synthetic_relations;
    spec.triples = synthetic_triples;
    spec.exponent = synthetic_exponent;
    spec.noise = synthetic_noise;
    spec.seed_fraction = synthetic_seed_fraction;
    spec.seed = derive_seed(seed, stream::kSynthetic);
    return spec;
  }
};

namespace detail {

inline std::uint64_t config_u64(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0)) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline int config_int(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) {
    throw ConfigError("config key '" + key + "' must be an integer");
  }
  return v.get<int>();
}

inline std::size_t config_size(const nlohmann::json& v, const std::string& key) {
  return static_cast<std::size_t>(config_u64(v, key));
}

inline double config_double(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) {
    throw ConfigError("config key '" + key + "' must be a number");
  }
  return v.get<double>();
}

inline std::string config_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) {
    throw ConfigError("config key '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

inline bool config_bool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean()) {
    throw ConfigError("config key '" + key + "' must be a boolean");
  }
  return v.get<bool>();
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig rc;
  for (const auto& [key, value] : j.items()) {
    if (key == "seed") {
      rc.seed = detail::config_u64(value, key);
    } else if (key == "out") {
      rc.out = detail::config_string(value, key);
    } else if (key == "dataset.path") {
      rc.dataset_path = detail::config_string(value, key);
    } else if (key == "dataset.fold") {
      rc.fold = detail::config_int(value, key);
    } else if (key == "synthetic.enabled") {
      rc.synthetic_enabled = detail::config_bool(value, key);
    } else if (key == "synthetic.entities") {
      rc.synthetic_entities = detail::config_size(value, key);
    } else if (key == "synthetic.relations") {
      rc.synthetic_relations = detail::config_size(value, key);
    } else if (key == "synthetic.triples") {
      rc.synthetic_triples = detail::config_size(value, key);
    } else if (key == "synthetic.exponent") {
      rc.synthetic_exponent = detail::config_double(value, key);
    } else if (key == "synthetic.noise") {
      rc.synthetic_noise = detail::config_double(value, key);
    } else if (key == "synthetic.seed_fraction") {
      rc.synthetic_seed_fraction = detail::config_double(value, key);
    } else if (key == "model.dim") {
      rc.model_dim = detail::config_size(value, key);
    } else if (key == "model.lambda") {
      rc.model_lambda = detail::config_double(value, key);
    } else if (key == "model.alpha") {
      rc.model_alpha = detail::config_double(value, key);
    } else if (key == "model.norm") {
      rc.model_norm = detail::config_string(value, key);
      if (rc.model_norm != "l1" && rc.model_norm != "l2") {
        throw ConfigError("config key 'model.norm' must be \"l1\" or \"l2\"");
      }
    } else if (key == "model.normalize_entities") {
      rc.model_normalize_entities = detail::config_bool(value, key);
    } else if (key == "train.mode") {
      rc.train_mode = detail::config_string(value, key);
      parse_ablation_mode(rc.train_mode);  // validates
    } else if (key == "train.critic_steps") {
      rc.train_critic_steps = detail::config_int(value, key);
    } else if (key == "train.triple_batch") {
      rc.train_triple_batch = detail::config_size(value, key);
    } else if (key == "train.subkg_batch") {
      rc.train_subkg_batch = detail::config_size(value, key);
    } else if (key == "train.neg_ratio") {
      rc.train_neg_ratio = detail::config_int(value, key);
    } else if (key == "train.model_lr") {
      rc.train_model_lr = detail::config_double(value, key);
    } else if (key == "train.critic_lr") {
      rc.train_critic_lr = detail::config_double(value, key);
    } else if (key == "train.clip_c") {
      rc.train_clip_c = detail::config_double(value, key);
    } else if (key == "train.max_epochs") {
      rc.train_max_epochs = detail::config_int(value, key);
    } else if (key == "train.eval_every") {
      rc.train_eval_every = detail::config_int(value, key);
    } else if (key == "train.patience") {
      rc.train_patience = detail::config_int(value, key);
    } else if (key == "train.weight_align") {
      rc.train_weight_align = detail::config_double(value, key);
    } else if (key == "train.weight_score") {
      rc.train_weight_score = detail::config_double(value, key);
    } else if (key == "train.weight_neo") {
      rc.train_weight_neo = detail::config_double(value, key);
    } else if (key == "train.debug_checks") {
      rc.train_debug_checks = detail::config_bool(value, key);
    } else if (key == "eval.rank_bins") {
      if (!value.is_array() || value.empty()) {
        throw ConfigError("config key 'eval.rank_bins' must be a non-empty array");
      }
      rc.rank_bins.clear();
      std::size_t prev = 0;
      for (const auto& v : value) {
        const std::size_t edge = detail::config_size(v, key);
        if (edge <= prev) {
          throw ConfigError("config key 'eval.rank_bins' must be strictly increasing");
        }
        rc.rank_bins.push_back(edge);
        prev = edge;
      }
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  if (rc.fold < 1 || rc.fold > 5) throw ConfigError("dataset.fold must be in 1..5");
  return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config file " + path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

// The fully resolved configuration: every key present, defaults filled
// in.  Feeding this back through parse_run_config reproduces the run.
inline nlohmann::json resolved_config_json(const RunConfig& rc) {
  nlohmann::json j;
  j["seed"] = rc.seed;
  j["out"] = rc.out;
  j["dataset.path"] = rc.dataset_path;
  j["dataset.fold"] = rc.fold;
  j["synthetic.enabled"] = rc.synthetic_enabled;
  j["synthetic.entities"] = rc.synthetic_entities;
  j["synthetic.relations"] = rc.synthetic_relations;
  j["synthetic.triples"] = rc.synthetic_triples;
  j["synthetic.exponent"] = rc.synthetic_exponent;
  j["synthetic.noise"] = rc.synthetic_noise;
  j["synthetic.seed_fraction"] = rc.synthetic_seed_fraction;
  j["model.dim"] = rc.model_dim;
  j["model.lambda"] = rc.model_lambda;
  j["model.alpha"] = rc.model_alpha;
  j["model.norm"] = rc.model_norm;
  j["model.normalize_entities"] = rc.model_normalize_entities;
  j["train.mode"] = rc.train_mode;
  j["train.critic_steps"] = rc.train_critic_steps;
  j["train.triple_batch"] = rc.train_triple_batch;
  j["train.subkg_batch"] = rc.train_subkg_batch;
  j["train.neg_ratio"] = rc.train_neg_ratio;
  j["train.model_lr"] = rc.train_model_lr;
  j["train.critic_lr"] = rc.train_critic_lr;
  j["train.clip_c"] = rc.train_clip_c;
  j["train.max_epochs"] = rc.train_max_epochs;
  j["train.eval_every"] = rc.train_eval_every;
  j["train.patience"] = rc.train_patience;
  j["train.weight_align"] = rc.train_weight_align;
  j["train.weight_score"] = rc.train_weight_score;
  j["train.weight_neo"] = rc.train_weight_neo;
  j["train.debug_checks"] = rc.train_debug_checks;
  j["eval.rank_bins"] = rc.rank_bins;
  return j;
}

// Hash of the resolved configuration with the output location removed, so
// reruns into different directories share an identity.
inline std::uint64_t config_hash(const RunConfig& rc) {
  nlohmann::json j = resolved_config_json(rc);
  j.erase("out");
  const std::string s = j.dump();
  return fnv1a_bytes(s.data(), s.size());
}

}  // namespace neoea
