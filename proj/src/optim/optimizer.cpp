#include <cmath>

#include "tweetbench/common/error.hpp"
#include "tweetbench/optim.hpp"

namespace tweetbench::optim {

std::string_view kind_name(Kind kind) { return kind == Kind::kAdam ? "adam" : "sgd"; }

std::optional<Kind> kind_from_name(std::string_view name) {
  if (name == "adam" || name == "Adam") return Kind::kAdam;
  if (name == "sgd" || name == "SGD") return Kind::kSgd;
  return std::nullopt;
}

Optimizer::Optimizer(const OptimizerConfig& config, Index num_parameters) : config_(config) {
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate))
    throw ConfigError("learning rate must be a non-negative number");
  if (config.kind == Kind::kAdam) {
    m_ = VectorXd::Zero(num_parameters);
    v_ = VectorXd::Zero(num_parameters);
  }
}

void Optimizer::update(VectorXd& params, const VectorXd& grad, Index begin, Index end) {
  const Index n = end - begin;
  auto p = params.segment(begin, n);
  const auto g = grad.segment(begin, n);
  if (config_.kind == Kind::kSgd) {
    p -= config_.learning_rate * g;
    return;
  }
  auto m = m_.segment(begin, n);
  auto v = v_.segment(begin, n);
  m = config_.beta1 * m + (1.0 - config_.beta1) * g;
  v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseAbs2();
  const double step = config_.learning_rate / c1_;
  p.array() -= step * m.array() / ((v.array() / c2_).sqrt() + config_.epsilon);
}

void Optimizer::step(VectorXd& params, const VectorXd& grad) {
  const Segment all{0, params.size()};
  step(params, grad, std::span(&all, 1));
}

void Optimizer::step(VectorXd& params, const VectorXd& grad, std::span<const Segment> segments) {
  ++t_;
  c1_ = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  c2_ = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (const auto& s : segments) update(params, grad, s.begin, s.end);
}

}  // namespace tweetbench::optim
