#include <algorithm>
#include <cmath>
#include <numeric>

#include "tweetbench/common/error.hpp"
#include "tweetbench/neural.hpp"

namespace tweetbench::neural {

namespace {

using ConstMap = Eigen::Map<const MatrixXd>;
using Map = Eigen::Map<MatrixXd>;
using Windows = Eigen::Map<const MatrixXd, 0, Eigen::OuterStride<>>;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

template <typename Derived>
auto activate(const Eigen::ArrayBase<Derived>& z, Activation a) {
  using Result = Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime>;
  if (a == Activation::kTanh) return Result(z.tanh());
  return Result(z.max(0.0));
}

// Derivative expressed through the activation output y = act(z).
template <typename Derived>
auto activate_grad_from_output(const Eigen::ArrayBase<Derived>& y, Activation a) {
  using Result = Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime>;
  if (a == Activation::kTanh) return Result(1.0 - y.square());
  return Result((y > 0.0).template cast<double>());
}

struct Layout {
  // CNN: per width, filters (size x w*dim) then bias (size).
  std::vector<Index> conv_offset;
  // LSTM: per direction, W (4s x dim), U (4s x s), b (4s).
  std::vector<Index> lstm_offset;
  Index dense_offset = 0;
  Index total = 0;
};

Layout make_layout(const NeuralConfig& c, Index dim, int num_classes, Index feature_width) {
  Layout l;
  Index off = 0;
  const Index s = c.size;
  if (c.arch == Arch::kCnn) {
    for (int w : c.filter_widths) {
      l.conv_offset.push_back(off);
      off += s * w * dim + s;
    }
  } else {
    const int dirs = c.arch == Arch::kBiLstm ? 2 : 1;
    for (int d = 0; d < dirs; ++d) {
      l.lstm_offset.push_back(off);
      off += 4 * s * dim + 4 * s * s + 4 * s;
    }
  }
  l.dense_offset = off;
  off += num_classes * feature_width + num_classes;
  l.total = off;
  return l;
}

struct LstmTrace {
  MatrixXd i, f, g, o, c, h;  // s x T each
};

}  // namespace

struct TextNetwork::Workspace {
  // CNN
  MatrixXd padded;
  std::vector<std::vector<Index>> argmax;  // per width, per filter
  std::vector<VectorXd> pooled;            // per width, activated maxima
  // LSTM, per direction
  std::vector<LstmTrace> traces;
};

TextNetwork::TextNetwork(const NeuralConfig& config, std::shared_ptr<const EmbeddingTable> embeddings,
                         int num_classes)
    : config_(config), embeddings_(std::move(embeddings)), num_classes_(num_classes) {
  config_.validate();
  if (num_classes < 2) throw ConfigError("a classifier needs at least 2 classes, got " + std::to_string(num_classes));
  if (!embeddings_ || embeddings_->dimension() < 1) throw ConfigError("neural model needs a word embedding table");
  dim_ = embeddings_->dimension();
  const auto layout = make_layout(config_, dim_, num_classes_, feature_width());
  encoder_params_ = layout.dense_offset;
  params_ = VectorXd::Zero(layout.total);
  init_weights();
}

Index TextNetwork::feature_width() const {
  switch (config_.arch) {
    case Arch::kCnn: return config_.size * static_cast<Index>(config_.filter_widths.size());
    case Arch::kLstm: return config_.size;
    case Arch::kBiLstm: return 2 * config_.size;
  }
  return config_.size;
}

void TextNetwork::init_weights() {
  Rng rng(derive_seed(config_.seed, 1));
  const auto layout = make_layout(config_, dim_, num_classes_, feature_width());
  auto glorot = [&](Index offset, Index count, Index fan_in, Index fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Index i = 0; i < count; ++i) params_[offset + i] = rng.uniform(-limit, limit);
  };
  const Index s = config_.size;
  for (std::size_t k = 0; k < layout.conv_offset.size(); ++k) {
    const Index w = config_.filter_widths[k];
    glorot(layout.conv_offset[k], s * w * dim_, w * dim_, s);
  }
  for (Index off : layout.lstm_offset) {
    glorot(off, 4 * s * dim_, dim_, 4 * s);
    glorot(off + 4 * s * dim_, 4 * s * s, s, 4 * s);
    params_.segment(off + 4 * s * dim_ + 4 * s * s + s, s).setOnes();  // forget-gate bias
  }
  glorot(layout.dense_offset, num_classes_ * feature_width(), feature_width(), num_classes_);
}

EncodedDoc TextNetwork::encode(const TokenList& doc) const {
  const auto n = std::min<std::size_t>(doc.size(), static_cast<std::size_t>(config_.max_len));
  EncodedDoc x = MatrixXd::Zero(dim_, static_cast<Index>(n));
  for (std::size_t t = 0; t < n; ++t)
    if (const auto* v = embeddings_->find(doc[t])) x.col(static_cast<Index>(t)) = *v;
  return x;
}

VectorXd TextNetwork::features(const EncodedDoc& x, Workspace* ws) const {
  const auto layout = make_layout(config_, dim_, num_classes_, feature_width());
  const Index s = config_.size, T = x.cols();
  VectorXd out(feature_width());

  if (config_.arch == Arch::kCnn) {
    const int wmax = *std::max_element(config_.filter_widths.begin(), config_.filter_widths.end());
    MatrixXd padded = MatrixXd::Zero(dim_, std::max<Index>(T, wmax));
    padded.leftCols(T) = x;
    if (ws) {
      ws->argmax.assign(config_.filter_widths.size(), {});
      ws->pooled.assign(config_.filter_widths.size(), {});
    }
    for (std::size_t k = 0; k < config_.filter_widths.size(); ++k) {
      const Index w = config_.filter_widths[k];
      const Index off = layout.conv_offset[k];
      const ConstMap F(params_.data() + off, s, w * dim_);
      const auto b = params_.segment(off + s * w * dim_, s);
      const Index nwin = std::max<Index>(T, w) - w + 1;
      const Windows win(padded.data(), w * dim_, nwin, Eigen::OuterStride<>(dim_));
      MatrixXd Z = F * win;
      Z.colwise() += b;
      VectorXd zmax(s);
      std::vector<Index> arg(static_cast<std::size_t>(s));
      for (Index f = 0; f < s; ++f) {
        Index best = 0;
        for (Index t = 1; t < nwin; ++t)
          if (Z(f, t) > Z(f, best)) best = t;
        arg[static_cast<std::size_t>(f)] = best;
        zmax[f] = Z(f, best);
      }
      const VectorXd pooled = activate(zmax.array(), config_.activation).matrix();
      out.segment(static_cast<Index>(k) * s, s) = pooled;
      if (ws) {
        ws->argmax[k] = std::move(arg);
        ws->pooled[k] = pooled;
      }
    }
    if (ws) ws->padded = std::move(padded);
    return out;
  }

  const int dirs = config_.arch == Arch::kBiLstm ? 2 : 1;
  if (ws) ws->traces.assign(static_cast<std::size_t>(dirs), {});
  for (int d = 0; d < dirs; ++d) {
    const Index off = layout.lstm_offset[static_cast<std::size_t>(d)];
    const ConstMap W(params_.data() + off, 4 * s, dim_);
    const ConstMap U(params_.data() + off + 4 * s * dim_, 4 * s, s);
    const auto b = params_.segment(off + 4 * s * dim_ + 4 * s * s, 4 * s);
    VectorXd h = VectorXd::Zero(s), c = VectorXd::Zero(s);
    LstmTrace tr;
    if (ws) {
      for (auto* m : {&tr.i, &tr.f, &tr.g, &tr.o, &tr.c, &tr.h}) m->resize(s, T);
    }
    for (Index step = 0; step < T; ++step) {
      const Index t = d == 0 ? step : T - 1 - step;
      VectorXd z = W * x.col(t) + U * h + b;
      const VectorXd i = z.segment(0, s).unaryExpr(&sigmoid);
      const VectorXd f = z.segment(s, s).unaryExpr(&sigmoid);
      const VectorXd g = activate(z.segment(2 * s, s).array(), config_.activation).matrix();
      const VectorXd o = z.segment(3 * s, s).unaryExpr(&sigmoid);
      c = f.cwiseProduct(c) + i.cwiseProduct(g);
      h = o.cwiseProduct(activate(c.array(), config_.activation).matrix());
      if (ws) {
        tr.i.col(step) = i;
        tr.f.col(step) = f;
        tr.g.col(step) = g;
        tr.o.col(step) = o;
        tr.c.col(step) = c;
        tr.h.col(step) = h;
      }
    }
    out.segment(d * s, s) = h;
    if (ws) ws->traces[static_cast<std::size_t>(d)] = std::move(tr);
  }
  return out;
}

void TextNetwork::backward_features(const EncodedDoc& x, const Workspace& ws, const VectorXd& d_features,
                                    VectorXd& grad) const {
  const auto layout = make_layout(config_, dim_, num_classes_, feature_width());
  const Index s = config_.size, T = x.cols();

  if (config_.arch == Arch::kCnn) {
    for (std::size_t k = 0; k < config_.filter_widths.size(); ++k) {
      const Index w = config_.filter_widths[k];
      const Index off = layout.conv_offset[k];
      Map dF(grad.data() + off, s, w * dim_);
      auto db = grad.segment(off + s * w * dim_, s);
      const VectorXd dz = d_features.segment(static_cast<Index>(k) * s, s).cwiseProduct(
          activate_grad_from_output(ws.pooled[k].array(), config_.activation).matrix());
      for (Index f = 0; f < s; ++f) {
        if (dz[f] == 0.0) continue;
        const Index t = ws.argmax[k][static_cast<std::size_t>(f)];
        dF.row(f) += dz[f] * Eigen::Map<const VectorXd>(ws.padded.data() + t * dim_, w * dim_).transpose();
        db[f] += dz[f];
      }
    }
    return;
  }

  const int dirs = config_.arch == Arch::kBiLstm ? 2 : 1;
  for (int d = 0; d < dirs; ++d) {
    if (T == 0) continue;
    const Index off = layout.lstm_offset[static_cast<std::size_t>(d)];
    const ConstMap U(params_.data() + off + 4 * s * dim_, 4 * s, s);
    Map dW(grad.data() + off, 4 * s, dim_);
    Map dU(grad.data() + off + 4 * s * dim_, 4 * s, s);
    auto db = grad.segment(off + 4 * s * dim_ + 4 * s * s, 4 * s);
    const auto& tr = ws.traces[static_cast<std::size_t>(d)];

    VectorXd dh = d_features.segment(d * s, s);
    VectorXd dc = VectorXd::Zero(s);
    VectorXd dz(4 * s);
    for (Index step = T - 1; step >= 0; --step) {
      const Index t = d == 0 ? step : T - 1 - step;
      const auto i = tr.i.col(step).array(), f = tr.f.col(step).array(), g = tr.g.col(step).array(),
                 o = tr.o.col(step).array();
      const Eigen::ArrayXd ac = activate(tr.c.col(step).array(), config_.activation);
      dc.array() += dh.array() * o * activate_grad_from_output(ac, config_.activation);
      const Eigen::ArrayXd c_prev = step > 0 ? Eigen::ArrayXd(tr.c.col(step - 1).array()) : Eigen::ArrayXd::Zero(s);
      dz.segment(0, s) = (dc.array() * g * i * (1.0 - i)).matrix();
      dz.segment(s, s) = (dc.array() * c_prev * f * (1.0 - f)).matrix();
      dz.segment(2 * s, s) = (dc.array() * i * activate_grad_from_output(g, config_.activation)).matrix();
      dz.segment(3 * s, s) = (dh.array() * ac * o * (1.0 - o)).matrix();
      dW.noalias() += dz * x.col(t).transpose();
      if (step > 0) dU.noalias() += dz * tr.h.col(step - 1).transpose();
      db += dz;
      dh.noalias() = U.transpose() * dz;
      dc.array() *= f;
    }
  }
}

double TextNetwork::loss(std::span<const EncodedDoc> docs, std::span<const int> labels, VectorXd* grad,
                         Rng* dropout_rng) const {
  if (docs.size() != labels.size()) throw DataError("document and label counts differ");
  if (docs.empty()) return 0.0;
  const Index F = feature_width();
  const Index dense = encoder_params_;
  const ConstMap Wd(params_.data() + dense, num_classes_, F);
  const auto bd = params_.segment(dense + num_classes_ * F, num_classes_);
  if (grad) *grad = VectorXd::Zero(params_.size());
  const double keep = 1.0 - config_.dropout;
  const double scale = 1.0 / static_cast<double>(docs.size());

  double total = 0.0;
  Workspace ws;
  for (std::size_t n = 0; n < docs.size(); ++n) {
    const int y = labels[n];
    if (y < 0 || y >= num_classes_) throw DataError("label id out of range: " + std::to_string(y));
    const VectorXd h = features(docs[n], grad ? &ws : nullptr);
    VectorXd mask = VectorXd::Ones(F);
    if (dropout_rng && config_.dropout > 0.0)
      for (Index j = 0; j < F; ++j) mask[j] = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
    const VectorXd hd = h.cwiseProduct(mask);
    const VectorXd logits = Wd * hd + bd;
    const double lse = logsumexp(logits);
    total += lse - logits[y];
    if (grad) {
      VectorXd dlogits = (logits.array() - lse).exp().matrix();
      dlogits[y] -= 1.0;
      dlogits *= scale;
      Map(grad->data() + dense, num_classes_, F).noalias() += dlogits * hd.transpose();
      grad->segment(dense + num_classes_ * F, num_classes_) += dlogits;
      const VectorXd dh = (Wd.transpose() * dlogits).cwiseProduct(mask);
      backward_features(docs[n], ws, dh, *grad);
    }
  }
  return total * scale;
}

TrainHistory TextNetwork::train(std::span<const TokenList> train_docs, std::span<const int> train_labels,
                                std::span<const TokenList> val_docs, std::span<const int> val_labels) {
  if (train_docs.empty() || val_docs.empty()) throw DataError("training and validation splits must be non-empty");
  if (train_docs.size() != train_labels.size() || val_docs.size() != val_labels.size())
    throw DataError("document and label counts differ");
  std::vector<EncodedDoc> train_x, val_x;
  train_x.reserve(train_docs.size());
  for (const auto& d : train_docs) train_x.push_back(encode(d));
  for (const auto& d : val_docs) val_x.push_back(encode(d));

  optim::Optimizer opt({config_.optimizer, config_.learning_rate}, params_.size());
  Rng order_rng(derive_seed(config_.seed, 2));
  Rng dropout_rng(derive_seed(config_.seed, 3));
  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  VectorXd best = params_;
  double best_loss = std::numeric_limits<double>::infinity();
  int patience_left = config_.patience;
  VectorXd grad;
  auto diverged = [&](int epoch) {
    return DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + " for config " +
                           config_.to_json().dump());
  };

  for (int epoch = 1; epoch <= config_.max_epochs; ++epoch) {
    order_rng.shuffle(std::span(order));
    double train_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config_.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(config_.batch_size));
      std::vector<EncodedDoc> batch;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(train_x[order[i]]);
        labels.push_back(train_labels[order[i]]);
      }
      const double l = loss(batch, labels, &grad, &dropout_rng);
      if (!std::isfinite(l) || !grad.allFinite()) throw diverged(epoch);
      train_loss += l * static_cast<double>(end - start);
      opt.step(params_, grad);
    }
    train_loss /= static_cast<double>(order.size());
    const double val_loss = loss(val_x, val_labels);
    if (!std::isfinite(val_loss)) throw diverged(epoch);

    bool stop = false;
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = params_;
      patience_left = config_.patience;
      history.best_epoch = epoch;
    } else if (patience_left == 0 || --patience_left == 0) {
      stop = true;
    }
    history.epochs.push_back({epoch, train_loss, val_loss, best_loss, patience_left});
    if (stop) {
      history.stopped_early = true;
      break;
    }
  }
  params_ = std::move(best);
  trained_ = true;
  return history;
}

MatrixXd TextNetwork::predict_proba(std::span<const TokenList> docs) const {
  if (!trained_) throw ModelError("predict called on an untrained model");
  const Index F = feature_width();
  const ConstMap Wd(params_.data() + encoder_params_, num_classes_, F);
  const auto bd = params_.segment(encoder_params_ + num_classes_ * F, num_classes_);
  MatrixXd P(static_cast<Index>(docs.size()), num_classes_);
  for (std::size_t n = 0; n < docs.size(); ++n) {
    const VectorXd logits = Wd * features(encode(docs[n]), nullptr) + bd;
    P.row(static_cast<Index>(n)) = softmax(logits).transpose();
  }
  return P;
}

std::vector<int> TextNetwork::predict(std::span<const TokenList> docs) const {
  const MatrixXd P = predict_proba(docs);
  std::vector<int> out(docs.size());
  for (Index i = 0; i < P.rows(); ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(argmax_first(P.row(i)));
  return out;
}

nlohmann::json TextNetwork::to_json() const {
  return {{"model", "neural"},
          {"version", 1},
          {"config", config_.to_json()},
          {"num_classes", num_classes_},
          {"embedding_dim", dim_},
          {"trained", trained_},
          {"weights", std::vector<double>(params_.data(), params_.data() + params_.size())}};
}

TextNetwork TextNetwork::from_json(const nlohmann::json& doc, std::shared_ptr<const EmbeddingTable> embeddings) {
  if (!doc.is_object() || doc.value("model", "") != "neural" || doc.value("version", 0) != 1)
    throw DataError("not a version-1 neural model document");
  try {
    TextNetwork net(NeuralConfig::from_json(doc.at("config")), std::move(embeddings), doc.at("num_classes").get<int>());
    if (doc.at("embedding_dim").get<Index>() != net.dim_) throw DataError("embedding dimension mismatch");
    const auto w = doc.at("weights").get<std::vector<double>>();
    if (static_cast<Index>(w.size()) != net.params_.size()) throw DataError("weight count mismatch");
    net.params_ = Eigen::Map<const VectorXd>(w.data(), static_cast<Index>(w.size()));
    net.trained_ = doc.value("trained", false);
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed neural model: ") + e.what());
  }
}

}  // namespace tweetbench::neural
