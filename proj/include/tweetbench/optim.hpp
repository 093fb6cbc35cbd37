#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "tweetbench/common/math.hpp"

namespace tweetbench::optim {

enum class Kind { kAdam, kSgd };

std::string_view kind_name(Kind kind);
std::optional<Kind> kind_from_name(std::string_view name);

struct OptimizerConfig {
  Kind kind = Kind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Half-open range [begin, end) of a flat parameter vector.
struct Segment {
  Index begin = 0;
  Index end = 0;
};

/// Adam or plain SGD over one flat parameter vector.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, Index num_parameters);

  void step(VectorXd& params, const VectorXd& grad);
  /// Lazy update: only the listed segments move and only their moment
  /// estimates are touched. The step counter used for bias correction is global.
  void step(VectorXd& params, const VectorXd& grad, std::span<const Segment> segments);

  long steps() const { return t_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  void update(VectorXd& params, const VectorXd& grad, Index begin, Index end);

  OptimizerConfig config_;
  VectorXd m_, v_;
  long t_ = 0;
  double c1_ = 1.0, c2_ = 1.0;
};

}  // namespace tweetbench::optim
