#include <cmath>
#include <set>

#include "tweetbench/common/error.hpp"
#include "tweetbench/neural.hpp"

namespace tweetbench::neural {

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::kCnn: return "cnn";
    case Arch::kLstm: return "lstm";
    case Arch::kBiLstm: return "bilstm";
  }
  return "cnn";
}

std::optional<Arch> arch_from_name(std::string_view name) {
  if (name == "cnn") return Arch::kCnn;
  if (name == "lstm") return Arch::kLstm;
  if (name == "bilstm") return Arch::kBiLstm;
  return std::nullopt;
}

std::string_view activation_name(Activation a) { return a == Activation::kTanh ? "tanh" : "relu"; }

std::optional<Activation> activation_from_name(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  return std::nullopt;
}

void NeuralConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("neural config: " + msg); };
  if (size < 1) fail("size must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
  if (max_len < 1) fail("max_len must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (patience < 0) fail("patience must be >= 0");
  if (arch == Arch::kCnn) {
    if (filter_widths.empty()) fail("filter_widths must not be empty");
    for (int w : filter_widths)
      if (w < 1) fail("filter widths must be >= 1");
  }
}

nlohmann::json NeuralConfig::to_json() const {
  return {{"arch", arch_name(arch)},
          {"size", size},
          {"dropout", dropout},
          {"activation", activation_name(activation)},
          {"optimizer", optim::kind_name(optimizer)},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"max_len", max_len},
          {"filter_widths", filter_widths},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"seed", seed}};
}

NeuralConfig NeuralConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("neural config must be a JSON object");
  static const std::set<std::string> known{"arch",    "size",       "dropout",       "activation",
                                           "optimizer", "batch_size", "learning_rate", "max_len",
                                           "filter_widths", "max_epochs", "patience", "seed"};
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw ConfigError("neural config: unknown key '" + key + "'");
  NeuralConfig c;
  try {
    if (doc.contains("arch")) {
      const auto a = arch_from_name(doc["arch"].get<std::string>());
      if (!a) throw ConfigError("neural config: unknown arch " + doc["arch"].dump());
      c.arch = *a;
    }
    if (doc.contains("activation")) {
      const auto a = activation_from_name(doc["activation"].get<std::string>());
      if (!a) throw ConfigError("neural config: unknown activation " + doc["activation"].dump());
      c.activation = *a;
    }
    if (doc.contains("optimizer")) {
      const auto o = optim::kind_from_name(doc["optimizer"].get<std::string>());
      if (!o) throw ConfigError("neural config: unknown optimizer " + doc["optimizer"].dump());
      c.optimizer = *o;
    }
    c.size = doc.value("size", c.size);
    c.dropout = doc.value("dropout", c.dropout);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.max_len = doc.value("max_len", c.max_len);
    c.filter_widths = doc.value("filter_widths", c.filter_widths);
    c.max_epochs = doc.value("max_epochs", c.max_epochs);
    c.patience = doc.value("patience", c.patience);
    c.seed = doc.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("neural config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json TrainHistory::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs)
    rows.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"val_loss", e.val_loss},
                    {"best_val_loss", e.best_val_loss},
                    {"patience_left", e.patience_left}});
  return {{"epochs", std::move(rows)}, {"best_epoch", best_epoch}, {"stopped_early", stopped_early}};
}

}  // namespace tweetbench::neural
