#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tweetbench/common/math.hpp"
#include "tweetbench/optim.hpp"

namespace tweetbench::finetune {

struct Encoding {
  VectorXd vector;
  bool truncated = false;
};

/// Named slice of a backend's flat parameter vector.
struct ParameterGroup {
  std::string name;
  optim::Segment segment;
};

/// Sentence encoder with trainable weights. Implementations keep the
/// activations of the last forward() for the following backward().
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual std::string name() const = 0;
  virtual Index embedding_dim() const = 0;
  virtual int max_sequence_length() const = 0;
  /// Multiplier applied to configured learning rates (1 for real checkpoints).
  virtual double learning_rate_scale() const { return 1.0; }

  virtual Encoding encode(std::string_view text) const = 0;

  /// Batch encode (rows = texts), remembering what backward() needs.
  virtual MatrixXd forward(std::span<const std::string> texts) = 0;
  /// Accumulates dLoss/dparameters into grad given dLoss/d(rows of the last
  /// forward output). Appends the parameter ranges that received gradient.
  virtual void backward(const MatrixXd& d_output, VectorXd& grad, std::vector<optim::Segment>& touched) = 0;

  virtual VectorXd& parameters() = 0;
  virtual const VectorXd& parameters() const = 0;
  virtual std::vector<ParameterGroup> groups() const = 0;
  virtual std::unique_ptr<EncoderBackend> clone() const = 0;
  /// Versioned binary blob with an embedded config hash.
  virtual void save(std::ostream& out) const = 0;

  bool trainable() const { return trainable_; }
  void set_trainable(bool on) { trainable_ = on; }

 private:
  bool trainable_ = true;
};

/// Whitespace tokens truncated to `max_len`; sets *truncated when anything was cut.
std::vector<std::string_view> split_tokens(std::string_view text, int max_len, bool* truncated = nullptr);

inline constexpr Index kStubBuckets = Index{1} << 15;
inline constexpr int kDefaultMaxSequenceLength = 64;

/// Hashed token embeddings (2^15 buckets) -> mean pooling -> dense tanh.
/// Stands in for pretrained checkpoints; dim >= 8.
std::unique_ptr<EncoderBackend> stub_backend(Index dim, std::uint64_t seed,
                                             int max_sequence_length = kDefaultMaxSequenceLength);

/// The pretrained checkpoint names the registry accepts, in benchmark order.
const std::vector<std::string>& pretrained_names();
bool is_known_backend(std::string_view name);

struct BackendOptions {
  Index stub_dim = 64;
  std::uint64_t seed = 0;
  /// Directory holding <name>/backend.bin; defaults to $TWEETBENCH_BACKEND_CACHE.
  std::optional<std::filesystem::path> cache_dir;
};

/// "stub" builds a fresh stub backend; pretrained names load
/// <cache>/<name>/backend.bin. Missing or unreadable checkpoints raise
/// BackendError naming the checkpoint; unknown names raise ConfigError.
std::unique_ptr<EncoderBackend> load_backend(std::string_view name, const BackendOptions& options = {});
std::unique_ptr<EncoderBackend> read_backend_blob(std::istream& in, std::string_view source);
void save_backend(const EncoderBackend& backend, const std::filesystem::path& path);

struct FinetuneConfig {
  int epochs = 20;
  int batch_size = 8;
  /// As listed in the grid; multiplied by the backend's learning_rate_scale().
  double learning_rate = 2e-5;
  std::uint64_t seed = 0;
  /// Backend parameter groups left untouched by training.
  std::vector<std::string> frozen_groups;

  void validate() const;
  nlohmann::json to_json() const;
  static FinetuneConfig from_json(const nlohmann::json& doc);
};

struct EpochLoss {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

struct StfModel {
  std::unique_ptr<EncoderBackend> backend;
  MatrixXd head_weights;  // classes x embedding_dim
  VectorXd head_bias;     // classes
  FinetuneConfig config;
  double initial_train_loss = 0.0;
  std::vector<EpochLoss> history;

  int num_classes() const { return static_cast<int>(head_bias.size()); }
  /// Head, config and history; the backend is referenced by name and weight hash.
  nlohmann::json to_json() const;
};

/// Mean cross-entropy of softmax(U W^T + b) with optional head gradients.
double head_loss(const MatrixXd& encoded, std::span<const int> labels, const MatrixXd& W, const VectorXd& b,
                 MatrixXd* grad_W = nullptr, VectorXd* grad_b = nullptr, MatrixXd* grad_encoded = nullptr);

/// Fine-tunes head and backend jointly with Adam for config.epochs epochs.
/// Validation texts may be empty (then no val_loss is recorded).
StfModel finetune(std::unique_ptr<EncoderBackend> backend, std::span<const std::string> train_texts,
                  std::span<const int> train_labels, std::span<const std::string> val_texts,
                  std::span<const int> val_labels, int num_classes, const FinetuneConfig& config);

struct StfPrediction {
  std::vector<int> labels;
  MatrixXd probabilities;  // texts x classes
};

StfPrediction stf_predict(const StfModel& model, std::span<const std::string> texts);

}  // namespace tweetbench::finetune
