#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "neoea/errors.hpp"
#include "neoea/matrix.hpp"

namespace neoea {

enum class OptimKind { Sgd, Adam, RmsProp };

enum class Direction { Minimize, Maximize };

struct OptimizerConfig {
  OptimKind kind = OptimKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;    // Adam first-moment decay
  double beta2 = 0.999;  // Adam second-moment decay
  double rho = 0.9;      // RMSProp decay
  double eps = 1e-8;
};

// Keyed per-parameter optimizer.  Each named parameter gets its own moment
// buffers and step counter, created on first use.  Maximize negates the
// gradient before the update, so ascent shares the moment bookkeeping.
class Optimizer {
 public:
  struct Slot {
    DenseMatrix m;  // first moment (Adam only)
    DenseMatrix v;  // second moment (Adam, RMSProp)
    std::int64_t t = 0;
  };

  Optimizer() = default;
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  const OptimizerConfig& config() const { return cfg_; }

  void step(const std::string& name, DenseMatrix& param, const DenseMatrix& grad,
            Direction dir) {
    if (!param.same_shape(grad)) {
      throw DataError("optimizer step: shape mismatch for parameter '" + name + "'");
    }
    if (!grad.all_finite()) {
      throw NumericError("non-finite gradient for parameter '" + name + "'");
    }
    Slot& slot = slots_[name];
    if (slot.t == 0) {
      if (cfg_.kind == OptimKind::Adam) slot.m = DenseMatrix(param.rows, param.cols);
      if (cfg_.kind != OptimKind::Sgd) slot.v = DenseMatrix(param.rows, param.cols);
    }
    slot.t += 1;
    const double sign = (dir == Direction::Maximize) ? -1.0 : 1.0;
    const std::size_t n = param.values.size();
    switch (cfg_.kind) {
      case OptimKind::Sgd: {
        for (std::size_t i = 0; i < n; ++i) {
          param.values[i] -= cfg_.lr * sign * grad.values[i];
        }
        break;
      }
      case OptimKind::Adam: {
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(slot.t));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(slot.t));
        for (std::size_t i = 0; i < n; ++i) {
          const double g = sign * grad.values[i];
          slot.m.values[i] = cfg_.beta1 * slot.m.values[i] + (1.0 - cfg_.beta1) * g;
          slot.v.values[i] = cfg_.beta2 * slot.v.values[i] + (1.0 - cfg_.beta2) * g * g;
          const double mhat = slot.m.values[i] / bc1;
          const double vhat = slot.v.values[i] / bc2;
          param.values[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        break;
      }
      case OptimKind::RmsProp: {
        for (std::size_t i = 0; i < n; ++i) {
          const double g = sign * grad.values[i];
          slot.v.values[i] = cfg_.rho * slot.v.values[i] + (1.0 - cfg_.rho) * g * g;
          param.values[i] -= cfg_.lr * g / (std::sqrt(slot.v.values[i]) + cfg_.eps);
        }
        break;
      }
    }
  }

  const std::map<std::string, Slot>& slots() const { return slots_; }
  std::map<std::string, Slot>& mutable_slots() { return slots_; }
  void set_config(OptimizerConfig cfg) { cfg_ = cfg; }

 private:
  OptimizerConfig cfg_{};
  std::map<std::string, Slot> slots_;
};

}  // namespace neoea
