#include <cmath>

#include "doctest.h"
#include "support/toys.hpp"
#include "tweetbench/common/error.hpp"
#include "tweetbench/neural.hpp"

using namespace tweetbench;
using namespace tweetbench::neural;

namespace {

std::shared_ptr<const EmbeddingTable> table_for(const std::vector<std::string>& terms, Index dim, std::uint64_t seed) {
  return std::make_shared<const EmbeddingTable>(features::random_embeddings(terms, dim, seed));
}

const auto& kTerms = tbtest::toy_terms();

void toy(Rng& rng, int n, std::vector<TokenList>& docs, std::vector<int>& labels) {
  tbtest::signal_word_toy(rng, n, docs, labels);
}

double relative_gradient_error(const TextNetwork& net, std::span<const EncodedDoc> docs, std::span<const int> y) {
  TextNetwork probe = net;
  VectorXd grad;
  probe.loss(docs, y, &grad);
  VectorXd numeric(grad.size());
  const double h = 1e-6;
  for (Index i = 0; i < grad.size(); ++i) {
    const double keep = probe.parameters()[i];
    probe.parameters()[i] = keep + h;
    const double up = probe.loss(docs, y);
    probe.parameters()[i] = keep - h;
    const double down = probe.loss(docs, y);
    probe.parameters()[i] = keep;
    numeric[i] = (up - down) / (2 * h);
  }
  return (grad - numeric).norm() / std::max(1e-12, grad.norm() + numeric.norm());
}

}  // namespace

TEST_CASE("parameter counts") {
  const auto emb = table_for({"a"}, 300, 1);
  NeuralConfig c;
  c.size = 50;
  const TextNetwork cnn(c, emb, 6);
  CHECK(cnn.encoder_parameters() == 180150);
  CHECK(cnn.feature_width() == 150);
  CHECK(cnn.dense_parameters() == 150 * 6 + 6);

  c.arch = Arch::kLstm;
  c.size = 75;
  const TextNetwork lstm(c, emb, 2);
  CHECK(lstm.encoder_parameters() == 112800);
  CHECK(lstm.feature_width() == 75);

  c.arch = Arch::kBiLstm;
  const TextNetwork bi(c, emb, 2);
  CHECK(bi.feature_width() == 150);
  CHECK(bi.encoder_parameters() == 2 * 112800);

  CHECK_THROWS_AS(TextNetwork(c, emb, 1), ConfigError);
  c.dropout = 1.0;
  CHECK_THROWS_AS(TextNetwork(c, emb, 2), ConfigError);
}

TEST_CASE("analytic gradients match central differences") {
  const auto emb = table_for({"x", "y", "z"}, 4, 5);
  SUBCASE("one-filter CNN on a two-token document") {
    NeuralConfig c;
    c.size = 1;
    c.filter_widths = {2};
    c.dropout = 0.0;
    for (auto act : {Activation::kTanh, Activation::kRelu}) {
      c.activation = act;
      c.seed = 11;
      const TextNetwork net(c, emb, 2);
      const std::vector<EncodedDoc> docs{net.encode({"x", "y"})};
      const std::vector<int> y{1};
      CHECK(relative_gradient_error(net, docs, y) < 1e-3);
    }
  }
  SUBCASE("all architectures on a small batch") {
    for (auto arch : {Arch::kCnn, Arch::kLstm, Arch::kBiLstm}) {
      for (auto act : {Activation::kTanh, Activation::kRelu}) {
        NeuralConfig c;
        c.arch = arch;
        c.activation = act;
        c.size = 3;
        c.filter_widths = {1, 2, 3};
        c.dropout = 0.0;
        c.seed = 3;
        TextNetwork net(c, emb, 3);
        // move biases off zero so no ReLU sits exactly on its kink
        Rng jitter(7);
        for (Index i = 0; i < net.parameters().size(); ++i) net.parameters()[i] += 0.1 * jitter.normal();
        const std::vector<EncodedDoc> docs{net.encode({"x", "y", "z", "x"}), net.encode({"z"}), net.encode({}),
                                           net.encode({"y", "oov", "x"})};
        const std::vector<int> y{0, 2, 1, 2};
        CAPTURE(arch_name(arch));
        CAPTURE(activation_name(act));
        CHECK(relative_gradient_error(net, docs, y) < 1e-5);
      }
    }
  }
}

TEST_CASE("separable toy reaches perfect training accuracy") {
  Rng rng(21);
  std::vector<TokenList> train, val;
  std::vector<int> ytrain, yval;
  toy(rng, 20, train, ytrain);
  toy(rng, 10, val, yval);
  const auto emb = table_for(kTerms, 16, 9);
  for (auto arch : {Arch::kCnn, Arch::kLstm, Arch::kBiLstm}) {
    NeuralConfig c;
    c.arch = arch;
    c.size = 8;
    c.batch_size = 4;
    c.learning_rate = 0.01;
    c.max_epochs = 30;
    c.seed = 4;
    TextNetwork net(c, emb, 2);
    const auto history = net.train(train, ytrain, val, yval);
    CAPTURE(arch_name(arch));
    CHECK(history.epochs.size() <= 30);
    CHECK(net.predict(train) == ytrain);
  }
}

TEST_CASE("early stopping") {
  Rng rng(2);
  std::vector<TokenList> train, val;
  std::vector<int> ytrain, yval;
  toy(rng, 12, train, ytrain);
  toy(rng, 6, val, yval);
  const auto emb = table_for(kTerms, 8, 1);
  NeuralConfig c;
  c.size = 4;
  c.batch_size = 4;
  c.max_epochs = 10;

  SUBCASE("patience counts non-improving epochs") {
    c.learning_rate = 0.0;  // validation loss never improves after epoch 1
    for (int patience : {0, 1, 3}) {
      c.patience = patience;
      TextNetwork net(c, emb, 2);
      const auto h = net.train(train, ytrain, val, yval);
      CHECK(h.epochs.size() == static_cast<std::size_t>(1 + std::max(patience, 1)));
      CHECK(h.stopped_early);
      CHECK(h.best_epoch == 1);
      for (const auto& e : h.epochs) {
        CHECK(e.patience_left >= 0);
        CHECK(e.patience_left <= patience);
      }
    }
  }
  SUBCASE("best weights are restored") {
    c.learning_rate = 0.05;
    c.patience = 2;
    TextNetwork net(c, emb, 2);
    const auto h = net.train(train, ytrain, val, yval);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < h.epochs.size(); ++i) {
      CHECK(h.epochs[i].best_val_loss <= (i ? h.epochs[i - 1].best_val_loss : best));
      best = std::min(best, h.epochs[i].val_loss);
    }
    std::vector<EncodedDoc> vx;
    for (const auto& d : val) vx.push_back(net.encode(d));
    CHECK(net.loss(vx, yval) == doctest::Approx(best).epsilon(1e-12));
    CHECK(h.epochs[static_cast<std::size_t>(h.best_epoch - 1)].val_loss == best);
  }
  SUBCASE("same seed, same curve") {
    c.learning_rate = 0.01;
    c.dropout = 0.5;
    TextNetwork a(c, emb, 2), b(c, emb, 2);
    CHECK(a.train(train, ytrain, val, yval).to_json() == b.train(train, ytrain, val, yval).to_json());
    CHECK(a.parameters() == b.parameters());
  }
}

TEST_CASE("prediction") {
  const auto emb = table_for(kTerms, 8, 3);
  NeuralConfig c;
  c.arch = Arch::kBiLstm;
  c.size = 4;
  TextNetwork net(c, emb, 3);
  const std::vector<TokenList> docs{{"good", "movie"}, {"bad"}, {}, {"very", "very", "so", "oov"}};
  CHECK_THROWS_AS(net.predict(docs), ModelError);
  net.mark_trained();
  CHECK(net.predict_proba(std::vector<TokenList>{}).rows() == 0);
  const MatrixXd p = net.predict_proba(docs);
  for (Index i = 0; i < p.rows(); ++i) CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-6);
  CHECK(net.predict_proba(docs) == p);

  const auto restored = TextNetwork::from_json(nlohmann::json::parse(net.to_json().dump()), emb);
  CHECK(restored.predict_proba(docs) == p);

  // documents shorter than max_len are unaffected by it
  for (auto arch : {Arch::kCnn, Arch::kLstm, Arch::kBiLstm}) {
    NeuralConfig a;
    a.arch = arch;
    a.size = 4;
    a.max_len = 64;
    NeuralConfig b = a;
    b.max_len = 5;
    TextNetwork na(a, emb, 2), nb(b, emb, 2);
    na.mark_trained();
    nb.mark_trained();
    CHECK(na.predict_proba(docs) == nb.predict_proba(docs));
  }
}
