#pragma once

#include <cstdint>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace tweetbench {

/// Incremental 64-bit FNV-1a. Used for provenance hashes (fold assignments,
/// configs, fitted statistics), never for security.
class Fnv1a {
 public:
  Fnv1a& update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= bytes[i];
      state_ *= kPrime;
    }
    return *this;
  }

  Fnv1a& update(std::string_view s) {
    update(s.data(), s.size());
    // Length-terminate so ("ab","c") and ("a","bc") differ.
    const std::uint64_t n = s.size();
    return update(&n, sizeof n);
  }

  Fnv1a& update(std::uint64_t v) { return update(&v, sizeof v); }
  Fnv1a& update(std::int64_t v) { return update(&v, sizeof v); }
  Fnv1a& update(int v) { return update(static_cast<std::int64_t>(v)); }
  Fnv1a& update(double v) { return update(&v, sizeof v); }

  template <typename Derived>
  Fnv1a& update_dense(const Eigen::DenseBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) update(static_cast<double>(m(i, j)));
    return *this;
  }

  std::uint64_t digest() const noexcept { return state_; }

  std::string hex() const {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << state_;
    return out.str();
  }

 private:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a(std::string_view s) {
  Fnv1a h;
  h.update(s.data(), s.size());
  return h.digest();
}

}  // namespace tweetbench
