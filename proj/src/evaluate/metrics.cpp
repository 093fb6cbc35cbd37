#include <cmath>
#include <limits>
#include <string>

#include "tweetbench/common/error.hpp"
#include "tweetbench/evaluate.hpp"

namespace tweetbench::evaluate {

namespace {

void check_pair(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw DataError("accuracy: " + std::to_string(y_true.size()) + " labels but " + std::to_string(y_pred.size()) +
                    " predictions");
  if (y_true.empty()) throw DataError("accuracy: no predictions");
}

}  // namespace

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  check_pair(y_true, y_pred);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i];
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

ConfusionCounts ConfusionCounts::from(std::span<const int> y_true, std::span<const int> y_pred, int num_classes) {
  check_pair(y_true, y_pred);
  if (num_classes < 1) throw ConfigError("confusion counts need at least one class");
  ConfusionCounts c;
  const auto k = static_cast<std::size_t>(num_classes);
  c.tp.assign(k, 0);
  c.fp.assign(k, 0);
  c.fn.assign(k, 0);
  c.tn.assign(k, 0);
  c.n = static_cast<long>(y_true.size());
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
      throw DataError("confusion counts: label out of range at position " + std::to_string(i));
    if (t == p) {
      ++c.tp[t];
    } else {
      ++c.fn[t];
      ++c.fp[p];
    }
  }
  for (std::size_t j = 0; j < k; ++j) c.tn[j] = c.n - c.tp[j] - c.fp[j] - c.fn[j];
  return c;
}

double ConfusionCounts::one_vs_rest_accuracy(int c) const {
  const auto j = static_cast<std::size_t>(c);
  return static_cast<double>(tp[j] + tn[j]) / static_cast<double>(tp[j] + fp[j] + tn[j] + fn[j]);
}

long ConfusionCounts::correct() const {
  long s = 0;
  for (long v : tp) s += v;
  return s;
}

// Every prediction is a positive for exactly one class, so pooling the
// per-class positive outcomes counts each document once.
double ConfusionCounts::micro_accuracy() const {
  long pooled_tp = 0, pooled_fp = 0;
  for (std::size_t j = 0; j < tp.size(); ++j) {
    pooled_tp += tp[j];
    pooled_fp += fp[j];
  }
  return static_cast<double>(pooled_tp) / static_cast<double>(pooled_tp + pooled_fp);
}

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw ConfigError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  // The series converges like x^n; switch tails so x stays small.
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(1.0 - x, b, a);

  // I_x(a,b) = x^a (1-x)^b / (a B(a,b)) * sum_n (a+b)_n / (a+1)_n x^n
  const double log_front =
      a * std::log(x) + b * std::log1p(-x) - std::log(a) - (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  double term = 1.0, sum = 1.0;
  for (int n = 0; n < 100000; ++n) {
    term *= (a + b + n) / (a + 1.0 + n) * x;
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return std::exp(log_front) * sum;
}

double student_t_two_tailed(double t, double df) {
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return incomplete_beta(df / (df + t * t), df / 2.0, 0.5);
}

TTest paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DataError("paired t-test: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " folds");
  if (a.size() < 2) throw DataError("paired t-test needs at least 2 folds");
  const auto k = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= k;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = (a[i] - b[i]) - mean;
    ss += e * e;
  }

  TTest r;
  r.df = static_cast<int>(a.size()) - 1;
  const double sd = std::sqrt(ss / (k - 1.0));
  // Differences below this are indistinguishable from rounding of the inputs.
  const double floor = 1e-12;
  if (sd <= floor) {
    if (std::abs(mean) <= floor) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
      r.degenerate = true;
    }
  } else {
    r.t = mean / (sd / std::sqrt(k));
    r.p = student_t_two_tailed(r.t, r.df);
  }
  r.significant = r.p < 0.05;
  return r;
}

}  // namespace tweetbench::evaluate
