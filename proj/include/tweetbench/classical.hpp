#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tweetbench/common/math.hpp"
#include "tweetbench/features.hpp"

namespace tweetbench::classical {

using features::SparseMatrix;
using features::SparseRow;

struct Prediction {
  int label = 0;
  /// Log scores (MNB) or probabilities (LR), one per class.
  VectorXd scores;
};

// Multinomial naive Bayes

struct MnbParams {
  double alpha = 1.0;
  bool fit_prior = true;
};

struct MnbModel {
  MnbParams params;
  VectorXd class_log_prior;   // classes
  MatrixXd feature_log_prob;  // classes x features

  int num_classes() const { return static_cast<int>(class_log_prior.size()); }
  Index num_features() const { return feature_log_prob.cols(); }
};

/// Rows of X are non-negative feature counts; y holds class ids in [0, num_classes).
MnbModel mnb_fit(const SparseMatrix& X, std::span<const int> y, int num_classes, const MnbParams& params = {});
Prediction mnb_predict(const MnbModel& model, const SparseRow& x);
/// Joint log scores, one row per document.
MatrixXd mnb_scores(const MnbModel& model, const SparseMatrix& X);
std::vector<int> mnb_predict(const MnbModel& model, const SparseMatrix& X);

// Softmax logistic regression

enum class Penalty { kL1, kL2 };
enum class ClassWeight { kNone, kBalanced };

std::string_view penalty_name(Penalty p);
std::optional<Penalty> penalty_from_name(std::string_view name);
std::string_view class_weight_name(ClassWeight w);
std::optional<ClassWeight> class_weight_from_name(std::string_view name);

struct LrParams {
  double C = 1.0;
  Penalty penalty = Penalty::kL2;
  ClassWeight class_weight = ClassWeight::kNone;
  int max_iter = 1000;
  /// Stop once the proximal gradient-mapping norm falls below tol times its
  /// value at the starting point.
  double tol = 1e-6;
};

struct LrModel {
  LrParams params;
  MatrixXd weights;  // classes x features
  VectorXd bias;     // classes
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;

  int num_classes() const { return static_cast<int>(bias.size()); }
  Index num_features() const { return weights.cols(); }
};

/// Balanced per-class weights n / (k * n_c); classes with no examples get 0.
VectorXd balanced_class_weights(std::span<const int> y, int num_classes);

/// The training objective (1/C) R(W) + sum_i s_i CE(softmax(W x_i + b), y_i)
/// with R = 0.5 ||W||^2 (l2) or ||W||_1 (l1); the bias is not penalized.
class LrObjective {
 public:
  LrObjective(const SparseMatrix& X, std::span<const int> y, int num_classes, const LrParams& params);

  /// Weighted cross-entropy, plus the l2 term when penalty is l2. Gradients are
  /// written when the pointers are non-null.
  double smooth(const MatrixXd& W, const VectorXd& b, MatrixXd* grad_W = nullptr, VectorXd* grad_b = nullptr) const;
  /// Non-smooth part: (1/C) ||W||_1 for l1, zero for l2.
  double nonsmooth(const MatrixXd& W) const;
  double value(const MatrixXd& W, const VectorXd& b) const { return smooth(W, b) + nonsmooth(W); }

  const VectorXd& sample_weights() const { return sample_weight_; }
  int num_classes() const { return num_classes_; }
  Index num_features() const { return X_.cols(); }

 private:
  const SparseMatrix& X_;
  std::vector<int> y_;
  int num_classes_;
  LrParams params_;
  VectorXd sample_weight_;
};

/// Accelerated proximal gradient (FISTA with backtracking and adaptive restart).
/// Throws DivergenceError when the objective becomes non-finite.
LrModel lr_fit(const SparseMatrix& X, std::span<const int> y, int num_classes, const LrParams& params = {});
Prediction lr_predict(const LrModel& model, const SparseRow& x);
/// Class probabilities, one row per document.
MatrixXd lr_probabilities(const LrModel& model, const SparseMatrix& X);
std::vector<int> lr_predict(const LrModel& model, const SparseMatrix& X);

nlohmann::json to_json(const MnbModel& model);
nlohmann::json to_json(const LrModel& model);
MnbModel mnb_from_json(const nlohmann::json& doc);
LrModel lr_from_json(const nlohmann::json& doc);

}  // namespace tweetbench::classical
