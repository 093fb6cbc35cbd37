#include <cmath>

#include "tweetbench/classical.hpp"
#include "tweetbench/common/error.hpp"

namespace tweetbench::classical {

std::string_view penalty_name(Penalty p) { return p == Penalty::kL1 ? "l1" : "l2"; }

std::optional<Penalty> penalty_from_name(std::string_view name) {
  if (name == "l1") return Penalty::kL1;
  if (name == "l2") return Penalty::kL2;
  return std::nullopt;
}

std::string_view class_weight_name(ClassWeight w) { return w == ClassWeight::kBalanced ? "balanced" : "none"; }

std::optional<ClassWeight> class_weight_from_name(std::string_view name) {
  if (name == "none" || name == "None") return ClassWeight::kNone;
  if (name == "balanced") return ClassWeight::kBalanced;
  return std::nullopt;
}

VectorXd balanced_class_weights(std::span<const int> y, int num_classes) {
  VectorXd n_c = VectorXd::Zero(num_classes);
  for (int c : y) n_c[c] += 1.0;
  VectorXd w(num_classes);
  const double n = static_cast<double>(y.size());
  for (int c = 0; c < num_classes; ++c) w[c] = n_c[c] > 0 ? n / (num_classes * n_c[c]) : 0.0;
  return w;
}

LrObjective::LrObjective(const SparseMatrix& X, std::span<const int> y, int num_classes, const LrParams& params)
    : X_(X), y_(y.begin(), y.end()), num_classes_(num_classes), params_(params) {
  if (!(params.C > 0.0) || !std::isfinite(params.C))
    throw ConfigError("C must be positive, got " + std::to_string(params.C));
  if (static_cast<Index>(y_.size()) != X.rows())
    throw DataError("label count " + std::to_string(y_.size()) + " does not match " + std::to_string(X.rows()) +
                    " rows");
  for (int c : y_)
    if (c < 0 || c >= num_classes) throw DataError("label id out of range: " + std::to_string(c));
  for (Index i = 0; i < X.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(X, i); it; ++it)
      if (!std::isfinite(it.value())) throw DataError("non-finite feature in row " + std::to_string(i));
  sample_weight_ = VectorXd::Ones(X.rows());
  if (params.class_weight == ClassWeight::kBalanced) {
    const VectorXd cw = balanced_class_weights(y_, num_classes);
    for (std::size_t i = 0; i < y_.size(); ++i) sample_weight_[static_cast<Index>(i)] = cw[y_[i]];
  }
}

double LrObjective::smooth(const MatrixXd& W, const VectorXd& b, MatrixXd* grad_W, VectorXd* grad_b) const {
  MatrixXd Z = X_ * W.transpose();
  Z.rowwise() += b.transpose();
  double loss = 0.0;
  MatrixXd G(Z.rows(), Z.cols());
  for (Index i = 0; i < Z.rows(); ++i) {
    const double lse = logsumexp(Z.row(i));
    const int yi = y_[static_cast<std::size_t>(i)];
    const double s = sample_weight_[i];
    loss += s * (lse - Z(i, yi));
    G.row(i) = s * (Z.row(i).array() - lse).exp();
    G(i, yi) -= s;
  }
  const double inv_c = 1.0 / params_.C;
  if (params_.penalty == Penalty::kL2) loss += 0.5 * inv_c * W.squaredNorm();
  if (grad_W) {
    *grad_W = (X_.transpose() * G).transpose();
    if (params_.penalty == Penalty::kL2) *grad_W += inv_c * W;
  }
  if (grad_b) *grad_b = G.colwise().sum().transpose();
  return loss;
}

double LrObjective::nonsmooth(const MatrixXd& W) const {
  return params_.penalty == Penalty::kL1 ? W.lpNorm<1>() / params_.C : 0.0;
}

LrModel lr_fit(const SparseMatrix& X, std::span<const int> y, int num_classes, const LrParams& params) {
  if (params.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(params.tol >= 0.0)) throw ConfigError("tol must be non-negative");
  const LrObjective objective(X, y, num_classes, params);
  const Index k = num_classes, d = X.cols();
  const bool l1 = params.penalty == Penalty::kL1;

  MatrixXd W = MatrixXd::Zero(k, d), yW = W, gW, nW;
  VectorXd b = VectorXd::Zero(k), yb = b, gb, nb;
  double F = objective.value(W, b);
  double t = 1.0, L = 1.0, reference = -1.0;
  bool anchored = true;  // y coincides with the last accepted iterate

  LrModel model;
  model.params = params;
  int it = 0;
  for (; it < params.max_iter; ++it) {
    const double fy = objective.smooth(yW, yb, &gW, &gb);
    if (!std::isfinite(fy)) throw DivergenceError("logistic regression objective became non-finite");
    double fn = 0.0, step2 = 0.0;
    for (;;) {
      nW = yW - gW / L;
      nb = yb - gb / L;
      if (l1) {
        const double thr = 1.0 / (params.C * L);
        nW = nW.array().sign() * (nW.array().abs() - thr).max(0.0);
      }
      fn = objective.smooth(nW, nb);
      if (!std::isfinite(fn)) throw DivergenceError("logistic regression objective became non-finite");
      step2 = (nW - yW).squaredNorm() + (nb - yb).squaredNorm();
      const double linear = (gW.array() * (nW - yW).array()).sum() + gb.dot(nb - yb);
      if (fn <= fy + linear + 0.5 * L * step2 + 1e-12 * std::abs(fy)) break;
      L *= 2.0;
      if (!std::isfinite(L)) throw DivergenceError("logistic regression step size collapsed");
    }
    const double mapping = L * std::sqrt(step2);
    if (reference < 0.0) reference = std::max(mapping, 1e-300);

    const double Fn = fn + objective.nonsmooth(nW);
    if (Fn > F && !anchored) {
      // Momentum overshot: restart from the last accepted iterate.
      t = 1.0;
      yW = W;
      yb = b;
      anchored = true;
    } else {
      // From an anchored point this is a plain proximal step; it is accepted
      // even if rounding makes the objective tick up.
      anchored = false;
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / tn;
      yW = nW + beta * (nW - W);
      yb = nb + beta * (nb - b);
      W.swap(nW);
      b.swap(nb);
      t = tn;
      F = Fn;
    }
    if (mapping <= params.tol * reference) {
      model.converged = true;
      ++it;
      break;
    }
  }
  model.weights = std::move(W);
  model.bias = std::move(b);
  model.iterations = it;
  model.objective = F;
  return model;
}

Prediction lr_predict(const LrModel& model, const SparseRow& x) {
  if (x.size() != model.num_features())
    throw DataError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                    std::to_string(model.num_features()));
  VectorXd z = model.bias;
  for (SparseRow::InnerIterator it(x); it; ++it) z += it.value() * model.weights.col(it.index());
  VectorXd p = softmax(z);
  return {static_cast<int>(argmax_first(p)), std::move(p)};
}

MatrixXd lr_probabilities(const LrModel& model, const SparseMatrix& X) {
  if (X.cols() != model.num_features())
    throw DataError("feature dimension " + std::to_string(X.cols()) + " does not match model dimension " +
                    std::to_string(model.num_features()));
  MatrixXd Z = X * model.weights.transpose();
  Z.rowwise() += model.bias.transpose();
  for (Index i = 0; i < Z.rows(); ++i) Z.row(i) = softmax(Z.row(i).transpose()).transpose();
  return Z;
}

std::vector<int> lr_predict(const LrModel& model, const SparseMatrix& X) {
  const MatrixXd P = lr_probabilities(model, X);
  std::vector<int> out(static_cast<std::size_t>(P.rows()));
  for (Index i = 0; i < P.rows(); ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(argmax_first(P.row(i)));
  return out;
}

}  // namespace tweetbench::classical
