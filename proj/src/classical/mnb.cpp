#include <cmath>

#include "tweetbench/classical.hpp"
#include "tweetbench/common/error.hpp"

namespace tweetbench::classical {

namespace {

void check_labels(std::span<const int> y, Index rows, int num_classes) {
  if (static_cast<Index>(y.size()) != rows)
    throw DataError("label count " + std::to_string(y.size()) + " does not match " + std::to_string(rows) + " rows");
  if (num_classes < 1) throw DataError("need at least one class");
  for (int c : y)
    if (c < 0 || c >= num_classes) throw DataError("label id out of range: " + std::to_string(c));
}

}  // namespace

MnbModel mnb_fit(const SparseMatrix& X, std::span<const int> y, int num_classes, const MnbParams& params) {
  if (!(params.alpha > 0.0) || !std::isfinite(params.alpha))
    throw ConfigError("alpha must be positive, got " + std::to_string(params.alpha));
  check_labels(y, X.rows(), num_classes);

  const Index k = num_classes;
  MatrixXd counts = MatrixXd::Zero(k, X.cols());
  VectorXd class_n = VectorXd::Zero(k);
  for (Index i = 0; i < X.outerSize(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    class_n[c] += 1.0;
    for (SparseMatrix::InnerIterator it(X, i); it; ++it) {
      if (!(it.value() >= 0.0) || !std::isfinite(it.value()))
        throw DataError("multinomial naive Bayes needs non-negative finite features (row " + std::to_string(i) +
                        ", column " + std::to_string(it.index()) + ")");
      counts(c, it.index()) += it.value();
    }
  }
  for (Index c = 0; c < k; ++c)
    if (class_n[c] == 0.0) throw DataError("class " + std::to_string(c) + " has no training examples");

  MnbModel model;
  model.params = params;
  const double v = static_cast<double>(X.cols());
  model.feature_log_prob = (counts.array() + params.alpha).log().matrix();
  const VectorXd denom = (counts.rowwise().sum().array() + params.alpha * v).log().matrix();
  model.feature_log_prob.colwise() -= denom;
  if (params.fit_prior)
    model.class_log_prior = (class_n.array() / static_cast<double>(X.rows())).log().matrix();
  else
    model.class_log_prior = VectorXd::Constant(k, -std::log(static_cast<double>(k)));
  return model;
}

Prediction mnb_predict(const MnbModel& model, const SparseRow& x) {
  if (x.size() != model.num_features())
    throw DataError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                    std::to_string(model.num_features()));
  VectorXd scores = model.class_log_prior;
  for (SparseRow::InnerIterator it(x); it; ++it) scores += it.value() * model.feature_log_prob.col(it.index());
  return {static_cast<int>(argmax_first(scores)), std::move(scores)};
}

MatrixXd mnb_scores(const MnbModel& model, const SparseMatrix& X) {
  if (X.cols() != model.num_features())
    throw DataError("feature dimension " + std::to_string(X.cols()) + " does not match model dimension " +
                    std::to_string(model.num_features()));
  MatrixXd scores = X * model.feature_log_prob.transpose();
  scores.rowwise() += model.class_log_prior.transpose();
  return scores;
}

std::vector<int> mnb_predict(const MnbModel& model, const SparseMatrix& X) {
  const MatrixXd scores = mnb_scores(model, X);
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(argmax_first(scores.row(i)));
  return out;
}

}  // namespace tweetbench::classical
