#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include "tweetbench/common/error.hpp"
#include "tweetbench/common/hash.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/finetune.hpp"

namespace tweetbench::finetune {

namespace {

constexpr char kMagic[8] = {'T', 'B', 'E', 'N', 'C', '\x01', '\n', '\0'};
constexpr std::string_view kStubArch = "hashed-bag";

std::string config_hash(Index dim, Index buckets, int max_len) {
  Fnv1a h;
  h.update(kStubArch).update(static_cast<std::int64_t>(dim)).update(static_cast<std::int64_t>(buckets)).update(max_len);
  return h.hex();
}

class StubBackend final : public EncoderBackend {
 public:
  StubBackend(std::string name, Index dim, std::uint64_t seed, int max_len)
      : name_(std::move(name)), dim_(dim), max_len_(max_len), seed_(seed) {
    if (dim < 8) throw ConfigError("stub backend dimension must be >= 8, got " + std::to_string(dim));
    if (max_len < 1) throw ConfigError("max_sequence_length must be >= 1");
    params_.resize(kStubBuckets * dim_ + dim_ * dim_ + dim_);
    Rng rng(derive_seed(seed, 0x57ab));
    // Small rows let a few hundred Adam steps at 1e-3 move keyword vectors apart.
    for (Index i = 0; i < kStubBuckets * dim_; ++i) params_[i] = 0.1 * rng.normal();
    const double limit = std::sqrt(6.0 / static_cast<double>(2 * dim_));
    for (Index i = 0; i < dim_ * dim_; ++i) params_[dense_offset() + i] = rng.uniform(-limit, limit);
    params_.tail(dim_).setZero();
  }

  std::string name() const override { return name_; }
  Index embedding_dim() const override { return dim_; }
  int max_sequence_length() const override { return max_len_; }
  // Grid learning rates (1e-5 .. 5e-5) are sized for large pretrained encoders.
  double learning_rate_scale() const override { return 50.0; }

  Encoding encode(std::string_view text) const override {
    Encoding e;
    Pooled p = pool(text, &e.truncated);
    e.vector = p.buckets.empty() ? VectorXd::Zero(dim_) : activate(p.mean);
    return e;
  }

  MatrixXd forward(std::span<const std::string> texts) override {
    cache_.clear();
    MatrixXd out(static_cast<Index>(texts.size()), dim_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      Pooled p = pool(texts[i], nullptr);
      const VectorXd y = p.buckets.empty() ? VectorXd::Zero(dim_) : activate(p.mean);
      out.row(static_cast<Index>(i)) = y.transpose();
      cache_.push_back({std::move(p), y});
    }
    return out;
  }

  void backward(const MatrixXd& d_output, VectorXd& grad, std::vector<optim::Segment>& touched) override {
    if (d_output.rows() != static_cast<Index>(cache_.size()) || d_output.cols() != dim_)
      throw ModelError("backward called with a gradient that does not match the last forward pass");
    Eigen::Map<MatrixXd> dW(grad.data() + dense_offset(), dim_, dim_);
    auto db = grad.segment(dense_offset() + dim_ * dim_, dim_);
    const Eigen::Map<const MatrixXd> W(params_.data() + dense_offset(), dim_, dim_);
    bool dense_touched = false;
    for (std::size_t i = 0; i < cache_.size(); ++i) {
      const auto& c = cache_[i];
      if (c.pooled.buckets.empty()) continue;
      const VectorXd da = d_output.row(static_cast<Index>(i)).transpose().cwiseProduct(
          (1.0 - c.output.array().square()).matrix());
      dW.noalias() += da * c.pooled.mean.transpose();
      db += da;
      dense_touched = true;
      const VectorXd du = W.transpose() * da / static_cast<double>(c.pooled.buckets.size());
      for (Index b : c.pooled.buckets) {
        grad.segment(b * dim_, dim_) += du;
        touched.push_back({b * dim_, (b + 1) * dim_});
      }
    }
    if (dense_touched) touched.push_back({dense_offset(), params_.size()});
  }

  VectorXd& parameters() override { return params_; }
  const VectorXd& parameters() const override { return params_; }

  std::vector<ParameterGroup> groups() const override {
    return {{"embeddings", {0, dense_offset()}}, {"dense", {dense_offset(), params_.size()}}};
  }

  std::unique_ptr<EncoderBackend> clone() const override {
    auto copy = std::make_unique<StubBackend>(*this);
    copy->cache_.clear();
    return copy;
  }

  void save(std::ostream& out) const override {
    const nlohmann::json header = {{"arch", kStubArch},
                                   {"name", name_},
                                   {"dim", dim_},
                                   {"buckets", kStubBuckets},
                                   {"max_sequence_length", max_len_},
                                   {"seed", seed_},
                                   {"trainable", trainable()},
                                   {"config_hash", config_hash(dim_, kStubBuckets, max_len_)}};
    const std::string text = header.dump();
    const std::uint64_t header_len = text.size(), n = static_cast<std::uint64_t>(params_.size());
    Fnv1a h;
    h.update(params_.data(), static_cast<std::size_t>(params_.size()) * sizeof(double));
    const std::uint64_t digest = h.digest();
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&header_len), sizeof header_len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(params_.data()), static_cast<std::streamsize>(n * sizeof(double)));
    out.write(reinterpret_cast<const char*>(&digest), sizeof digest);
  }

 private:
  struct Pooled {
    std::vector<Index> buckets;
    VectorXd mean;
  };
  struct Cached {
    Pooled pooled;
    VectorXd output;
  };

  Index dense_offset() const { return kStubBuckets * dim_; }

  Pooled pool(std::string_view text, bool* truncated) const {
    Pooled p;
    p.mean = VectorXd::Zero(dim_);
    for (auto tok : split_tokens(text, max_len_, truncated)) {
      const auto b = static_cast<Index>(fnv1a(tok) & static_cast<std::uint64_t>(kStubBuckets - 1));
      p.buckets.push_back(b);
      p.mean += params_.segment(b * dim_, dim_);
    }
    if (!p.buckets.empty()) p.mean /= static_cast<double>(p.buckets.size());
    return p;
  }

  VectorXd activate(const VectorXd& u) const {
    const Eigen::Map<const MatrixXd> W(params_.data() + dense_offset(), dim_, dim_);
    return (W * u + params_.tail(dim_)).array().tanh().matrix();
  }

  std::string name_;
  Index dim_;
  int max_len_;
  std::uint64_t seed_;
  VectorXd params_;
  std::vector<Cached> cache_;
};

}  // namespace

std::vector<std::string_view> split_tokens(std::string_view text, int max_len, bool* truncated) {
  std::vector<std::string_view> out;
  if (truncated) *truncated = false;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const auto start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    if (static_cast<int>(out.size()) == max_len) {
      if (truncated) *truncated = true;
      break;
    }
    out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::unique_ptr<EncoderBackend> stub_backend(Index dim, std::uint64_t seed, int max_sequence_length) {
  return std::make_unique<StubBackend>("stub", dim, seed, max_sequence_length);
}

const std::vector<std::string>& pretrained_names() {
  static const std::vector<std::string> names{
      "electra-base-discriminator", "electra-base-generator",
      "distilbert-base-uncased",    "distilroberta-base",
      "bert-base-uncased",          "albert-base-v2",
      "roberta-base",               "paraphrase-mpnet-base-v2-fuzzy-matcher",
      "paraphrase-mpnet-base-v2",   "all-mpnet-base-v1",
      "all-mpnet-base-v2",          "all-MiniLM-L12-v2",
      "paraphrase-albert-small-v2", "all-roberta-large-v1",
      "paraphrase-MiniLM-L3-v2",    "all-distilroberta-v1"};
  return names;
}

bool is_known_backend(std::string_view name) {
  const auto& names = pretrained_names();
  return name == "stub" || std::find(names.begin(), names.end(), name) != names.end();
}

std::unique_ptr<EncoderBackend> read_backend_blob(std::istream& in, std::string_view source) {
  const auto fail = [&](const std::string& why) { return BackendError("checkpoint " + std::string(source) + ": " + why); };
  char magic[sizeof kMagic];
  std::uint64_t header_len = 0;
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic))
    throw fail("not a tweetbench encoder blob");
  if (!in.read(reinterpret_cast<char*>(&header_len), sizeof header_len) || header_len > (1u << 20))
    throw fail("truncated header");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) throw fail("truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw fail("unreadable header");
  }
  if (header.value("arch", "") != kStubArch)
    throw fail("architecture '" + header.value("arch", "?") + "' is not supported by this build");
  const auto dim = header.value("dim", Index{0});
  const auto buckets = header.value("buckets", Index{0});
  const int max_len = header.value("max_sequence_length", 0);
  if (buckets != kStubBuckets || header.value("config_hash", "") != config_hash(dim, buckets, max_len))
    throw fail("config hash mismatch");

  auto backend = std::make_unique<StubBackend>(header.value("name", std::string(source)), dim,
                                               header.value("seed", std::uint64_t{0}), max_len);
  std::uint64_t n = 0, digest = 0;
  auto& params = backend->parameters();
  if (!in.read(reinterpret_cast<char*>(&n), sizeof n) || n != static_cast<std::uint64_t>(params.size()))
    throw fail("parameter count mismatch");
  if (!in.read(reinterpret_cast<char*>(params.data()), static_cast<std::streamsize>(n * sizeof(double))) ||
      !in.read(reinterpret_cast<char*>(&digest), sizeof digest))
    throw fail("truncated weights");
  Fnv1a h;
  h.update(params.data(), static_cast<std::size_t>(n) * sizeof(double));
  if (h.digest() != digest) throw fail("weight checksum mismatch");
  backend->set_trainable(header.value("trainable", true));
  return backend;
}

std::unique_ptr<EncoderBackend> load_backend(std::string_view name, const BackendOptions& options) {
  if (name == "stub") return stub_backend(options.stub_dim, options.seed);
  if (!is_known_backend(name)) throw ConfigError("unknown encoder backend: " + std::string(name));
  std::filesystem::path dir;
  if (options.cache_dir) {
    dir = *options.cache_dir;
  } else if (const char* env = std::getenv("TWEETBENCH_BACKEND_CACHE")) {
    dir = env;
  } else {
    throw BackendError("checkpoint '" + std::string(name) +
                       "' is not installed (set TWEETBENCH_BACKEND_CACHE to a directory containing " +
                       std::string(name) + "/backend.bin)");
  }
  const auto path = dir / std::string(name) / "backend.bin";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError("checkpoint '" + std::string(name) + "' not found at " + path.string());
  return read_backend_blob(in, path.string());
}

void save_backend(const EncoderBackend& backend, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  backend.save(out);
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace tweetbench::finetune
