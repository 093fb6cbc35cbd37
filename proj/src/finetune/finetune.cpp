#include <algorithm>
#include <cmath>
#include <numeric>

#include "tweetbench/common/error.hpp"
#include "tweetbench/common/hash.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/finetune.hpp"

namespace tweetbench::finetune {

namespace {

std::vector<optim::Segment> merge(std::vector<optim::Segment> segs) {
  std::sort(segs.begin(), segs.end(), [](const auto& a, const auto& b) { return a.begin < b.begin; });
  std::vector<optim::Segment> out;
  for (const auto& s : segs) {
    if (!out.empty() && s.begin <= out.back().end)
      out.back().end = std::max(out.back().end, s.end);
    else
      out.push_back(s);
  }
  return out;
}

// Removes the frozen ranges from sorted, disjoint segments.
std::vector<optim::Segment> subtract(const std::vector<optim::Segment>& segs, const std::vector<optim::Segment>& frozen) {
  std::vector<optim::Segment> out;
  for (auto s : segs) {
    std::vector<optim::Segment> pieces{s};
    for (const auto& f : frozen) {
      std::vector<optim::Segment> next;
      for (const auto& p : pieces) {
        if (f.end <= p.begin || f.begin >= p.end) {
          next.push_back(p);
          continue;
        }
        if (p.begin < f.begin) next.push_back({p.begin, f.begin});
        if (f.end < p.end) next.push_back({f.end, p.end});
      }
      pieces = std::move(next);
    }
    out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

void check_labels(std::span<const int> labels, std::size_t n, int num_classes) {
  if (labels.size() != n) throw DataError("text and label counts differ");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw DataError("label id out of range: " + std::to_string(y));
}

}  // namespace

void FinetuneConfig::validate() const {
  if (epochs < 1) throw ConfigError("finetune epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("finetune batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("finetune learning_rate must be >= 0");
}

nlohmann::json FinetuneConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"seed", seed},
          {"frozen_groups", frozen_groups}};
}

FinetuneConfig FinetuneConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("finetune config must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (key != "epochs" && key != "batch_size" && key != "learning_rate" && key != "seed" && key != "frozen_groups")
      throw ConfigError("finetune config: unknown key '" + key + "'");
  FinetuneConfig c;
  try {
    c.epochs = doc.value("epochs", c.epochs);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.seed = doc.value("seed", c.seed);
    c.frozen_groups = doc.value("frozen_groups", c.frozen_groups);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("finetune config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json StfModel::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : history) {
    nlohmann::json row = {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", nullptr}};
    if (e.val_loss) row["val_loss"] = *e.val_loss;
    hist.push_back(std::move(row));
  }
  nlohmann::json W = nlohmann::json::array();
  for (Index c = 0; c < head_weights.rows(); ++c) {
    const VectorXd r = head_weights.row(c).transpose();
    W.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  }
  Fnv1a h;
  if (backend) h.update_dense(backend->parameters());
  return {{"model", "stf"},
          {"version", 1},
          {"backend", backend ? backend->name() : ""},
          {"backend_hash", h.hex()},
          {"config", config.to_json()},
          {"head_weights", std::move(W)},
          {"head_bias", std::vector<double>(head_bias.data(), head_bias.data() + head_bias.size())},
          {"initial_train_loss", initial_train_loss},
          {"history", std::move(hist)}};
}

double head_loss(const MatrixXd& encoded, std::span<const int> labels, const MatrixXd& W, const VectorXd& b,
                 MatrixXd* grad_W, VectorXd* grad_b, MatrixXd* grad_encoded) {
  const Index n = encoded.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw DataError("text and label counts differ");
  if (n == 0) return 0.0;
  MatrixXd Z = encoded * W.transpose();
  Z.rowwise() += b.transpose();
  double loss = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double lse = logsumexp(Z.row(i));
    const int y = labels[static_cast<std::size_t>(i)];
    loss += lse - Z(i, y);
    Z.row(i) = (Z.row(i).array() - lse).exp();
    Z(i, y) -= 1.0;
  }
  Z /= static_cast<double>(n);  // now dLoss/dlogits
  if (grad_W) *grad_W = Z.transpose() * encoded;
  if (grad_b) *grad_b = Z.colwise().sum().transpose();
  if (grad_encoded) *grad_encoded = Z * W;
  return loss / static_cast<double>(n);
}

StfModel finetune(std::unique_ptr<EncoderBackend> backend, std::span<const std::string> train_texts,
                  std::span<const int> train_labels, std::span<const std::string> val_texts,
                  std::span<const int> val_labels, int num_classes, const FinetuneConfig& config) {
  config.validate();
  if (!backend) throw ConfigError("finetune needs an encoder backend");
  if (!backend->trainable()) throw ConfigError("backend '" + backend->name() + "' is not trainable");
  if (num_classes < 2) throw ConfigError("a classifier needs at least 2 classes");
  if (train_texts.empty()) throw DataError("finetune needs training texts");
  check_labels(train_labels, train_texts.size(), num_classes);
  check_labels(val_labels, val_texts.size(), num_classes);

  std::vector<optim::Segment> frozen;
  const auto groups = backend->groups();
  for (const auto& name : config.frozen_groups) {
    const auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.name == name; });
    if (it == groups.end()) throw ConfigError("backend '" + backend->name() + "' has no parameter group '" + name + "'");
    frozen.push_back(it->segment);
  }

  const Index dim = backend->embedding_dim(), k = num_classes;
  StfModel model;
  model.config = config;
  VectorXd head(k * dim + k);
  {
    Rng rng(derive_seed(config.seed, 1));
    const double limit = std::sqrt(6.0 / static_cast<double>(dim + k));
    for (Index i = 0; i < k * dim; ++i) head[i] = rng.uniform(-limit, limit);
    head.tail(k).setZero();
  }
  auto W = [&] { return Eigen::Map<MatrixXd>(head.data(), k, dim); };
  auto b = [&] { return head.tail(k); };

  const double lr = config.learning_rate * backend->learning_rate_scale();
  optim::Optimizer head_opt({optim::Kind::kAdam, lr}, head.size());
  optim::Optimizer backend_opt({optim::Kind::kAdam, lr}, backend->parameters().size());
  VectorXd grad = VectorXd::Zero(backend->parameters().size());

  const auto full_loss = [&](std::span<const std::string> texts, std::span<const int> labels) {
    return head_loss(backend->forward(texts), labels, W(), b());
  };
  model.initial_train_loss = full_loss(train_texts, train_labels);

  Rng order_rng(derive_seed(config.seed, 2));
  std::vector<std::size_t> order(train_texts.size());
  std::iota(order.begin(), order.end(), 0);
  MatrixXd gW, dU;
  VectorXd gb, head_grad(head.size());
  std::vector<optim::Segment> touched;
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(std::span(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const auto end = std::min(order.size(), start + bs);
      std::vector<std::string> texts;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        texts.push_back(train_texts[order[i]]);
        labels.push_back(train_labels[order[i]]);
      }
      const MatrixXd U = backend->forward(texts);
      const double l = head_loss(U, labels, W(), b(), &gW, &gb, &dU);
      if (!std::isfinite(l))
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + " for config " +
                              config.to_json().dump());
      total += l * static_cast<double>(end - start);
      touched.clear();
      backend->backward(dU, grad, touched);
      head_grad << Eigen::Map<const VectorXd>(gW.data(), gW.size()), gb;
      head_opt.step(head, head_grad);
      const auto segs = merge(touched);
      const auto active = subtract(segs, frozen);
      backend_opt.step(backend->parameters(), grad, active);
      for (const auto& s : segs) grad.segment(s.begin, s.end - s.begin).setZero();
    }
    EpochLoss rec{epoch, total / static_cast<double>(order.size()), std::nullopt};
    if (!val_texts.empty()) {
      rec.val_loss = full_loss(val_texts, val_labels);
      if (!std::isfinite(*rec.val_loss))
        throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    model.history.push_back(rec);
  }
  model.head_weights = W();
  model.head_bias = b();
  model.backend = std::move(backend);
  return model;
}

StfPrediction stf_predict(const StfModel& model, std::span<const std::string> texts) {
  if (!model.backend) throw ModelError("stf model has no backend");
  if (model.head_weights.cols() != model.backend->embedding_dim() ||
      model.head_weights.rows() != model.head_bias.size())
    throw ModelError("classification head does not match the backend dimension");
  StfPrediction out;
  out.probabilities.resize(static_cast<Index>(texts.size()), model.num_classes());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const VectorXd u = model.backend->encode(texts[i]).vector;
    const VectorXd p = softmax(model.head_weights * u + model.head_bias);
    out.probabilities.row(static_cast<Index>(i)) = p.transpose();
    out.labels.push_back(static_cast<int>(argmax_first(p)));
  }
  return out;
}

}  // namespace tweetbench::finetune
