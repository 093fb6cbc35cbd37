#include "tweetbench/classical.hpp"
#include "tweetbench/common/error.hpp"

namespace tweetbench::classical {

namespace {

constexpr int kVersion = 1;

nlohmann::json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json mat_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

VectorXd vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

MatrixXd mat_from(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("expected a matrix");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const VectorXd r = vec_from(j[static_cast<std::size_t>(i)]);
    if (r.size() != cols) throw DataError("ragged matrix");
    m.row(i) = r.transpose();
  }
  return m;
}

void check_kind(const nlohmann::json& doc, std::string_view kind) {
  if (!doc.is_object() || doc.value("model", "") != kind) throw DataError("not a " + std::string(kind) + " model");
  if (doc.value("version", 0) != kVersion)
    throw DataError("unsupported " + std::string(kind) + " model version");
}

}  // namespace

nlohmann::json to_json(const MnbModel& model) {
  return {{"model", "mnb"},
          {"version", kVersion},
          {"alpha", model.params.alpha},
          {"fit_prior", model.params.fit_prior},
          {"class_log_prior", vec_json(model.class_log_prior)},
          {"feature_log_prob", mat_json(model.feature_log_prob)}};
}

nlohmann::json to_json(const LrModel& model) {
  return {{"model", "lr"},
          {"version", kVersion},
          {"C", model.params.C},
          {"penalty", penalty_name(model.params.penalty)},
          {"class_weight", class_weight_name(model.params.class_weight)},
          {"max_iter", model.params.max_iter},
          {"tol", model.params.tol},
          {"iterations", model.iterations},
          {"converged", model.converged},
          {"objective", model.objective},
          {"weights", mat_json(model.weights)},
          {"bias", vec_json(model.bias)}};
}

MnbModel mnb_from_json(const nlohmann::json& doc) {
  check_kind(doc, "mnb");
  try {
    MnbModel m;
    m.params.alpha = doc.at("alpha").get<double>();
    m.params.fit_prior = doc.at("fit_prior").get<bool>();
    m.class_log_prior = vec_from(doc.at("class_log_prior"));
    m.feature_log_prob = mat_from(doc.at("feature_log_prob"));
    if (m.feature_log_prob.rows() != m.class_log_prior.size()) throw DataError("class count mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed mnb model: ") + e.what());
  }
}

LrModel lr_from_json(const nlohmann::json& doc) {
  check_kind(doc, "lr");
  try {
    LrModel m;
    m.params.C = doc.at("C").get<double>();
    const auto pen = penalty_from_name(doc.at("penalty").get<std::string>());
    const auto cw = class_weight_from_name(doc.at("class_weight").get<std::string>());
    if (!pen || !cw) throw DataError("malformed lr model: unknown penalty or class_weight");
    m.params.penalty = *pen;
    m.params.class_weight = *cw;
    m.params.max_iter = doc.value("max_iter", m.params.max_iter);
    m.params.tol = doc.value("tol", m.params.tol);
    m.iterations = doc.value("iterations", 0);
    m.converged = doc.value("converged", false);
    m.objective = doc.value("objective", 0.0);
    m.weights = mat_from(doc.at("weights"));
    m.bias = vec_from(doc.at("bias"));
    if (m.weights.rows() != m.bias.size()) throw DataError("class count mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed lr model: ") + e.what());
  }
}

}  // namespace tweetbench::classical
