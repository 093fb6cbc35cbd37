#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support/toys.hpp"
#include "tweetbench/common/error.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/finetune.hpp"

using namespace tweetbench;
using namespace tweetbench::finetune;

namespace {

using tbtest::keyword_toy;

double cosine(const VectorXd& a, const VectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

double accuracy(const std::vector<int>& a, const std::vector<int>& b) {
  int hit = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i];
  return static_cast<double>(hit) / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("stub backend encoding") {
  const auto s = stub_backend(16, 7);
  CHECK(s->embedding_dim() == 16);
  CHECK(s->max_sequence_length() == 64);
  CHECK(s->trainable());
  CHECK(s->encode("").vector == VectorXd::Zero(16));
  CHECK(s->encode("   ").vector == VectorXd::Zero(16));
  CHECK(s->encode("hello world").vector == s->encode("hello world").vector);
  CHECK(s->encode("a").vector.isApprox(s->encode("a a").vector, 1e-14));
  CHECK(std::abs(cosine(s->encode("football match tonight").vector, s->encode("senate passes budget").vector)) < 0.5);
  CHECK(stub_backend(16, 7)->parameters() == s->parameters());
  CHECK(stub_backend(16, 8)->parameters() != s->parameters());
  CHECK_THROWS_AS(stub_backend(4, 0), ConfigError);

  SUBCASE("truncation at 64 tokens") {
    std::string head;
    for (int i = 0; i < 64; ++i) head += "w" + std::to_string(i) + " ";
    const auto a = s->encode(head + "tail one");
    const auto b = s->encode(head + "other ending entirely");
    CHECK(a.truncated);
    CHECK(a.vector == b.vector);
    CHECK_FALSE(s->encode(head).truncated);
    bool cut = false;
    CHECK(split_tokens(head + "x", 64, &cut).size() == 64);
    CHECK(cut);
  }
}

TEST_CASE("gradients") {
  Rng rng(3);
  std::vector<std::string> texts;
  std::vector<int> labels;
  keyword_toy(rng, 6, texts, labels);
  texts.push_back("");
  labels.push_back(1);
  auto backend = stub_backend(8, 2);
  const MatrixXd U = backend->forward(texts);
  MatrixXd W(2, 8);
  VectorXd b(2);
  for (Index i = 0; i < W.size(); ++i) W.data()[i] = rng.normal();
  b << 0.3, -0.2;

  SUBCASE("head weights") {
    MatrixXd gW;
    VectorXd gb;
    head_loss(U, labels, W, b, &gW, &gb);
    const double h = 1e-6;
    VectorXd analytic(W.size() + 2), numeric(W.size() + 2);
    for (Index i = 0; i < W.size(); ++i) {
      MatrixXd Wp = W, Wm = W;
      Wp.data()[i] += h;
      Wm.data()[i] -= h;
      numeric[i] = (head_loss(U, labels, Wp, b) - head_loss(U, labels, Wm, b)) / (2 * h);
      analytic[i] = gW.data()[i];
    }
    for (Index i = 0; i < 2; ++i) {
      VectorXd bp = b, bm = b;
      bp[i] += h;
      bm[i] -= h;
      numeric[W.size() + i] = (head_loss(U, labels, W, bp) - head_loss(U, labels, W, bm)) / (2 * h);
      analytic[W.size() + i] = gb[i];
    }
    CHECK((analytic - numeric).norm() / numeric.norm() < 1e-4);
  }
  SUBCASE("backend weights") {
    MatrixXd dU;
    head_loss(U, labels, W, b, nullptr, nullptr, &dU);
    VectorXd grad = VectorXd::Zero(backend->parameters().size());
    std::vector<optim::Segment> touched;
    backend->backward(dU, grad, touched);
    REQUIRE_FALSE(touched.empty());
    const double h = 1e-6;
    double err = 0, scale = 0;
    for (const auto& s : touched)
      for (Index i = s.begin; i < s.end; i += 3) {
        auto& p = backend->parameters()[i];
        const double keep = p;
        p = keep + h;
        const double up = head_loss(backend->forward(texts), labels, W, b);
        p = keep - h;
        const double down = head_loss(backend->forward(texts), labels, W, b);
        p = keep;
        const double num = (up - down) / (2 * h);
        err += (num - grad[i]) * (num - grad[i]);
        scale += num * num;
      }
    CHECK(std::sqrt(err / scale) < 1e-4);
  }
}

TEST_CASE("finetune on the separable toy") {
  Rng rng(12);
  std::vector<std::string> train, val;
  std::vector<int> ytrain, yval;
  keyword_toy(rng, 40, train, ytrain);
  keyword_toy(rng, 20, val, yval);
  FinetuneConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 8;
  cfg.learning_rate = 2e-5;
  cfg.seed = 5;
  const auto model = finetune::finetune(stub_backend(64, 1), train, ytrain, val, yval, 2, cfg);
  REQUIRE(model.history.size() == 20);
  CHECK(accuracy(stf_predict(model, val).labels, yval) == 1.0);
  CHECK(stf_predict(model, train).labels == ytrain);
  double best = model.history[0].train_loss;
  for (const auto& e : model.history) best = std::min(best, e.train_loss);
  CHECK(best < 0.5 * model.initial_train_loss);

  const auto p = stf_predict(model, val).probabilities;
  for (Index i = 0; i < p.rows(); ++i) CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-6);
  CHECK(stf_predict(model, std::vector<std::string>{}).labels.empty());

  const auto again = finetune::finetune(stub_backend(64, 1), train, ytrain, val, yval, 2, cfg);
  CHECK(again.head_weights == model.head_weights);
  CHECK(again.backend->parameters() == model.backend->parameters());
  CHECK(again.to_json() == model.to_json());
}

TEST_CASE("finetune contracts") {
  Rng rng(4);
  std::vector<std::string> texts;
  std::vector<int> labels;
  keyword_toy(rng, 16, texts, labels);
  FinetuneConfig cfg;
  cfg.epochs = 3;

  SUBCASE("zero learning rate leaves weights bit-identical") {
    auto backend = stub_backend(16, 3);
    const VectorXd before = backend->parameters();
    cfg.learning_rate = 0.0;
    const auto m = finetune::finetune(std::move(backend), texts, labels, texts, labels, 2, cfg);
    CHECK(m.backend->parameters() == before);
    for (const auto& e : m.history) {
      CHECK(e.train_loss == doctest::Approx(m.initial_train_loss).epsilon(1e-12));
      CHECK(*e.val_loss == m.history[0].val_loss);
    }
  }
  SUBCASE("one step changes backend weights") {
    auto backend = stub_backend(16, 3);
    const VectorXd before = backend->parameters();
    cfg.epochs = 1;
    cfg.batch_size = 64;
    const auto m = finetune::finetune(std::move(backend), texts, labels, {}, {}, 2, cfg);
    CHECK(m.backend->parameters() != before);
    CHECK_FALSE(m.history[0].val_loss.has_value());
  }
  SUBCASE("frozen groups") {
    auto backend = stub_backend(16, 3);
    const VectorXd before = backend->parameters();
    const auto groups = backend->groups();
    cfg.frozen_groups = {"embeddings"};
    const auto m = finetune::finetune(std::move(backend), texts, labels, {}, {}, 2, cfg);
    const auto emb = groups[0].segment;
    const auto dense = groups[1].segment;
    CHECK(m.backend->parameters().segment(emb.begin, emb.end - emb.begin) ==
          before.segment(emb.begin, emb.end - emb.begin));
    CHECK(m.backend->parameters().segment(dense.begin, dense.end - dense.begin) !=
          before.segment(dense.begin, dense.end - dense.begin));
    cfg.frozen_groups = {"nope"};
    CHECK_THROWS_AS(finetune::finetune(stub_backend(16, 3), texts, labels, {}, {}, 2, cfg), ConfigError);
  }
  SUBCASE("errors") {
    auto frozen = stub_backend(16, 3);
    frozen->set_trainable(false);
    CHECK_THROWS_AS(finetune::finetune(std::move(frozen), texts, labels, {}, {}, 2, cfg), ConfigError);
    CHECK_THROWS_AS(finetune::finetune(stub_backend(16, 3), texts, labels, {}, {}, 1, cfg), ConfigError);
    std::vector<int> bad = labels;
    bad[0] = 5;
    CHECK_THROWS_AS(finetune::finetune(stub_backend(16, 3), texts, bad, {}, {}, 2, cfg), DataError);
    cfg.epochs = 0;
    CHECK_THROWS_AS(finetune::finetune(stub_backend(16, 3), texts, labels, {}, {}, 2, cfg), ConfigError);
  }
  SUBCASE("zero head gives uniform probabilities") {
    StfModel m;
    m.backend = stub_backend(16, 3);
    m.head_weights = MatrixXd::Zero(3, 16);
    m.head_bias = VectorXd::Zero(3);
    const auto p = stf_predict(m, texts);
    CHECK(p.probabilities.isApproxToConstant(1.0 / 3.0));
    CHECK(p.labels[0] == 0);
    m.head_weights = MatrixXd::Zero(3, 15);
    CHECK_THROWS_AS(stf_predict(m, texts), ModelError);
  }
}

TEST_CASE("backend registry and checkpoints") {
  CHECK(pretrained_names().size() == 16);
  CHECK(is_known_backend("stub"));
  CHECK(is_known_backend("all-roberta-large-v1"));
  CHECK_FALSE(is_known_backend("gpt-9"));
  CHECK_THROWS_AS(load_backend("gpt-9"), ConfigError);

  const auto dir = std::filesystem::temp_directory_path() / "tb_backend_cache_test";
  std::filesystem::remove_all(dir);
  BackendOptions opts;
  opts.cache_dir = dir;
  CHECK_THROWS_WITH_AS(load_backend("all-roberta-large-v1", opts), doctest::Contains("all-roberta-large-v1"),
                       BackendError);

  auto original = stub_backend(12, 9);
  original->parameters()[3] = 42.0;
  save_backend(*original, dir / "all-MiniLM-L12-v2" / "backend.bin");
  const auto loaded = load_backend("all-MiniLM-L12-v2", opts);
  CHECK(loaded->parameters() == original->parameters());
  CHECK(loaded->embedding_dim() == 12);

  ::setenv("TWEETBENCH_BACKEND_CACHE", dir.c_str(), 1);
  CHECK(load_backend("all-MiniLM-L12-v2")->parameters() == original->parameters());
  ::unsetenv("TWEETBENCH_BACKEND_CACHE");
  CHECK_THROWS_AS(load_backend("all-MiniLM-L12-v2"), BackendError);

  // the same fine-tuning code path runs on a loaded checkpoint
  Rng rng(1);
  std::vector<std::string> texts;
  std::vector<int> labels;
  keyword_toy(rng, 10, texts, labels);
  FinetuneConfig cfg;
  cfg.epochs = 2;
  const auto a = finetune::finetune(original->clone(), texts, labels, {}, {}, 2, cfg);
  const auto b = finetune::finetune(load_backend("all-MiniLM-L12-v2", opts), texts, labels, {}, {}, 2, cfg);
  CHECK(a.head_weights == b.head_weights);
  CHECK(a.backend->parameters() == b.backend->parameters());

  {
    std::ofstream corrupt(dir / "roberta-base" / "backend.bin", std::ios::binary);
  }
  std::filesystem::create_directories(dir / "roberta-base");
  {
    std::ofstream corrupt(dir / "roberta-base" / "backend.bin", std::ios::binary);
    corrupt << "not a checkpoint";
  }
  CHECK_THROWS_AS(load_backend("roberta-base", opts), BackendError);

  std::stringstream blob;
  original->save(blob);
  auto bytes = blob.str();
  bytes[bytes.size() - 20] ^= 0x5a;
  std::istringstream damaged(bytes);
  CHECK_THROWS_WITH_AS(read_backend_blob(damaged, "x"), doctest::Contains("checksum"), BackendError);
  std::filesystem::remove_all(dir);
}
