#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tweetbench/common/math.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/features.hpp"
#include "tweetbench/optim.hpp"

namespace tweetbench::neural {

using features::EmbeddingTable;
using features::TokenList;

enum class Arch { kCnn, kLstm, kBiLstm };
enum class Activation { kTanh, kRelu };

std::string_view arch_name(Arch arch);
std::optional<Arch> arch_from_name(std::string_view name);
std::string_view activation_name(Activation a);
std::optional<Activation> activation_from_name(std::string_view name);

struct NeuralConfig {
  Arch arch = Arch::kCnn;
  int size = 50;  // filters per width (CNN) or recurrent units
  double dropout = 0.25;
  Activation activation = Activation::kRelu;
  optim::Kind optimizer = optim::Kind::kAdam;
  int batch_size = 32;
  double learning_rate = 0.001;
  int max_len = 64;
  std::vector<int> filter_widths{3, 4, 5};
  int max_epochs = 30;
  int patience = 3;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are a ConfigError.
  static NeuralConfig from_json(const nlohmann::json& doc);
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double best_val_loss = 0.0;
  int patience_left = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool stopped_early = false;

  nlohmann::json to_json() const;
};

/// A document as a (dimension x tokens) matrix of frozen embeddings.
using EncodedDoc = MatrixXd;

/// CNN / LSTM / BiLSTM text classifier over frozen word embeddings. All
/// trainable weights live in one flat vector; layers are views into it.
class TextNetwork {
 public:
  TextNetwork(const NeuralConfig& config, std::shared_ptr<const EmbeddingTable> embeddings, int num_classes);

  const NeuralConfig& config() const { return config_; }
  int num_classes() const { return num_classes_; }
  Index embedding_dim() const { return dim_; }

  /// Convolution weights (CNN) or recurrent weights (LSTM, both directions for BiLSTM).
  Index encoder_parameters() const { return encoder_params_; }
  Index dense_parameters() const { return params_.size() - encoder_params_; }
  Index num_parameters() const { return params_.size(); }
  /// Width of the pooled/last-state vector fed to the dense layer.
  Index feature_width() const;

  /// Truncates to max_len; OOV tokens map to zero vectors.
  EncodedDoc encode(const TokenList& doc) const;

  /// Mean cross-entropy over the batch. With a non-null rng dropout is
  /// active (training mode); grad receives the gradient of the mean loss.
  double loss(std::span<const EncodedDoc> docs, std::span<const int> labels, VectorXd* grad = nullptr,
              Rng* dropout_rng = nullptr) const;

  /// Early-stopped training on validation loss; restores the best weights.
  /// Throws DivergenceError (echoing the config) on a non-finite loss.
  TrainHistory train(std::span<const TokenList> train_docs, std::span<const int> train_labels,
                     std::span<const TokenList> val_docs, std::span<const int> val_labels);

  /// Probability rows (documents x classes). Throws ModelError before training.
  MatrixXd predict_proba(std::span<const TokenList> docs) const;
  std::vector<int> predict(std::span<const TokenList> docs) const;

  VectorXd& parameters() { return params_; }
  const VectorXd& parameters() const { return params_; }
  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  /// Config, seed, class count and weights; the embedding table is supplied on load.
  nlohmann::json to_json() const;
  static TextNetwork from_json(const nlohmann::json& doc, std::shared_ptr<const EmbeddingTable> embeddings);

 private:
  struct Workspace;

  VectorXd features(const EncodedDoc& x, Workspace* ws) const;
  void backward_features(const EncodedDoc& x, const Workspace& ws, const VectorXd& d_features, VectorXd& grad) const;
  void init_weights();

  NeuralConfig config_;
  std::shared_ptr<const EmbeddingTable> embeddings_;
  int num_classes_;
  Index dim_;
  Index encoder_params_ = 0;
  VectorXd params_;
  bool trained_ = false;
};

}  // namespace tweetbench::neural
