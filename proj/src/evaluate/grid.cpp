#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "tweetbench/common/error.hpp"
#include "tweetbench/evaluate.hpp"

namespace tweetbench::data {
extern const char* const kGrids;
}

namespace tweetbench::evaluate {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t HyperGrid::size() const {
  std::size_t n = 1;
  for (const auto& [name, values] : axes) n *= values.size();
  return n;
}

std::vector<json> HyperGrid::enumerate() const {
  const std::size_t total = size();
  std::vector<json> points;
  points.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    // Mixed-radix decode with the last axis as the fastest digit.
    json point = json::object();
    std::size_t rest = i;
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& values = axes[a].second;
      point[axes[a].first] = values[rest % values.size()];
      rest /= values.size();
    }
    points.push_back(std::move(point));
  }
  return points;
}

json HyperGrid::to_json() const {
  json ax = json::array();
  for (const auto& [name, values] : axes) ax.push_back({{"name", name}, {"values", values}});
  return {{"model", model}, {"axes", ax}};
}

HyperGrid HyperGrid::from_json(const ordered_json& doc) {
  if (!doc.is_object()) throw ConfigError("grid must be a JSON object");
  HyperGrid g;
  auto add_axis = [&](const std::string& name, const ordered_json& values) {
    if (!values.is_array() || values.empty()) throw ConfigError("grid axis '" + name + "' needs a nonempty list");
    for (const auto& [existing, unused] : g.axes)
      if (existing == name) throw ConfigError("grid axis '" + name + "' declared twice");
    std::vector<json> vs;
    for (const auto& v : values) vs.push_back(json::parse(v.dump()));
    g.axes.emplace_back(name, std::move(vs));
  };
  try {
    g.model = doc.value("model", "");
    if (doc.contains("axes")) {
      const auto& axes = doc.at("axes");
      if (axes.is_array()) {
        for (const auto& a : axes) add_axis(a.at("name").get<std::string>(), a.at("values"));
      } else if (axes.is_object()) {
        for (const auto& [name, values] : axes.items()) add_axis(name, values);
      } else {
        throw ConfigError("grid axes must be a list or an object");
      }
    }
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("malformed grid: ") + e.what());
  }
  return g;
}

namespace {

const ordered_json& shipped() {
  static const ordered_json doc = ordered_json::parse(data::kGrids);
  return doc;
}

// "stf:<backend>" grids are declared for the whole "stf" family.
std::string family_key(std::string_view model_name) {
  return model_name.starts_with("stf:") ? "stf" : std::string(model_name);
}

}  // namespace

std::vector<std::string> builtin_grid_names() {
  std::vector<std::string> names;
  for (const auto& [name, unused] : shipped().at("grids").items()) names.push_back(name);
  names.push_back("stf_best_d1");
  names.push_back("stf_best_d2");
  names.push_back("default");
  return names;
}

HyperGrid builtin_grid(std::string_view name, std::string_view model_name) {
  const std::string key(name);
  if (key == "default") return HyperGrid{std::string(model_name), {}};

  if (key == "stf_best_d1" || key == "stf_best_d2") {
    if (!model_name.starts_with("stf:"))
      throw ConfigError("grid '" + key + "' is for stf models, not " + std::string(model_name));
    const std::string backend(model_name.substr(4));
    const auto& best = shipped().at("stf_best");
    if (!best.contains(backend)) throw ConfigError("no tuned fine-tuning values for backend '" + backend + "'");
    HyperGrid g{std::string(model_name), {}};
    for (const auto& [axis, value] : best.at(backend).at(key.substr(9)).items())
      g.axes.emplace_back(axis, std::vector<json>{json::parse(value.dump())});
    return g;
  }

  const auto& grids = shipped().at("grids");
  if (!grids.contains(key)) {
    std::string known;
    for (const auto& n : builtin_grid_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown grid '" + key + "' (built-in grids: " + known + ")");
  }
  HyperGrid g = HyperGrid::from_json(grids.at(key));
  if (g.model != family_key(model_name))
    throw ConfigError("grid '" + key + "' is for " + g.model + " models, not " + std::string(model_name));
  g.model = std::string(model_name);
  return g;
}

HyperGrid resolve_grid(std::string_view reference, std::string_view model_name) {
  const std::filesystem::path path(reference);
  const bool looks_like_file = reference.find('/') != std::string_view::npos || path.extension() == ".json";
  if (!looks_like_file) return builtin_grid(reference, model_name);

  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  ordered_json doc;
  try {
    doc = ordered_json::parse(buf.str());
  } catch (const ordered_json::exception& e) {
    throw ConfigError("grid file " + path.string() + ": " + e.what());
  }
  HyperGrid g = HyperGrid::from_json(doc);
  if (!g.model.empty() && g.model != family_key(model_name) && g.model != model_name)
    throw ConfigError("grid file " + path.string() + " is for " + g.model + " models, not " + std::string(model_name));
  g.model = std::string(model_name);
  return g;
}

GridOutcome grid_search(const HyperGrid& grid, const Evaluator& evaluator, int jobs) {
  const auto points = grid.enumerate();
  if (points.empty()) throw ConfigError("empty grid");
  GridOutcome out;
  out.results.resize(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (std::size_t i; !failed && (i = next++) < points.size();) {
      try {
        out.results[i] = evaluator(points[i]);
        out.results[i].grid_index = static_cast<int>(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::clamp<int>(jobs, 1, static_cast<int>(points.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      const std::string msg = "grid point " + std::to_string(i) + " " + points[i].dump() + ": " + e.what();
      switch (e.code()) {
        case ExitCode::kDataError: throw DataError(msg);
        case ExitCode::kConfigError: throw ConfigError(msg);
        case ExitCode::kBackendError: throw ModelError(msg);
        default: throw Error(e.code(), msg);
      }
    }
  }

  for (std::size_t i = 1; i < out.results.size(); ++i)
    if (out.results[i].mean_accuracy > out.results[out.best].mean_accuracy) out.best = i;
  return out;
}

}  // namespace tweetbench::evaluate
