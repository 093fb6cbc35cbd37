#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "tweetbench/evaluate.hpp"

namespace tweetbench::evaluate {

namespace {

const std::vector<std::string> kGroupOrder{"Traditional machine learning", "Deep Learning", "Transformers",
                                           "Sentence Transformers"};

const std::vector<std::string> kTransformers{"electra-base-discriminator", "electra-base-generator",
                                             "distilbert-base-uncased",    "distilroberta-base",
                                             "bert-base-uncased",          "albert-base-v2",
                                             "roberta-base"};

// Canonical row order; rows not listed follow in order of appearance.
const std::vector<std::string> kRowOrder{
    "MNB", "LR", "MNB-TF_IDF", "LR-TF_IDF", "MNB-BoW", "LR-BoW", "CNN", "LSTM", "BiLSTM",
    "electra-base-discriminator", "electra-base-generator", "distilbert-base-uncased", "distilroberta-base",
    "bert-base-uncased", "albert-base-v2", "roberta-base", "paraphrase-mpnet-base-v2-fuzzy-matcher",
    "paraphrase-mpnet-base-v2", "all-mpnet-base-v1", "all-mpnet-base-v2", "all-MiniLM-L12-v2",
    "paraphrase-albert-small-v2", "all-roberta-large-v1", "paraphrase-MiniLM-L3-v2", "all-distilroberta-v1"};

std::string percent(double acc) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * acc);
  return buf;
}

std::string p_text(double p) {
  char buf[32];
  if (p == 0.0) return "0";
  if (p < 1e-4)
    std::snprintf(buf, sizeof buf, "%.2e", p);
  else
    std::snprintf(buf, sizeof buf, "%.4f", p);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string base_label(const EvaluationResult& r) { return r.display_name.empty() ? r.model_name : r.display_name; }

// Numbers from different protocols never share a row.
std::string row_label(const EvaluationResult& r) {
  return r.protocol == "selection-cv" ? base_label(r) : base_label(r) + " (" + r.protocol + ")";
}

/// One accuracy cell per (row, dataset), keeping the best result when a
/// model/dataset pair appears more than once.
struct Grid {
  std::vector<std::string> datasets;
  std::vector<const EvaluationResult*> rows;  // first result of each row label
  std::map<std::pair<std::string, std::string>, const EvaluationResult*> cell;
  std::set<std::string> protocols;

  explicit Grid(const std::vector<EvaluationResult>& results) {
    std::map<std::string, std::size_t> seen;
    for (const auto& r : results) {
      if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
      const auto label = row_label(r);
      if (!seen.count(label)) {
        seen[label] = rows.size();
        rows.push_back(&r);
      }
      auto& slot = cell[{label, r.dataset}];
      if (!slot || r.mean_accuracy > slot->mean_accuracy) slot = &r;
      protocols.insert(r.protocol);
    }
  }

  const EvaluationResult* at(const std::string& label, const std::string& dataset) const {
    auto it = cell.find({label, dataset});
    return it == cell.end() ? nullptr : it->second;
  }

  /// Highest displayed value per dataset column.
  std::map<std::string, std::string> best() const {
    std::map<std::string, std::string> out;
    for (const auto& d : datasets) {
      double top = -1.0;
      for (const auto* r : rows)
        if (const auto* c = at(row_label(*r), d)) top = std::max(top, std::stod(percent(c->mean_accuracy)));
      if (top >= 0.0) out[d] = percent(top / 100.0);
    }
    return out;
  }

  std::string protocol_note() const {
    std::string s;
    for (const auto& p : protocols) s += (s.empty() ? "" : ", ") + p;
    return s;
  }
};

std::string dataset_header(const std::string& d) { return d.empty() ? "Accuracy" : d; }

Report table4(const ReportInput& input) {
  const Grid grid(input.results);
  const auto best = grid.best();

  std::vector<std::pair<std::size_t, const EvaluationResult*>> ordered;
  for (std::size_t i = 0; i < grid.rows.size(); ++i) ordered.emplace_back(i, grid.rows[i]);
  auto rank = [&](const std::pair<std::size_t, const EvaluationResult*>& e) {
    const auto g = std::find(kGroupOrder.begin(), kGroupOrder.end(), group_of(e.second->model_name)) -
                   kGroupOrder.begin();
    const auto label = base_label(*e.second);
    const auto pos = std::find(kRowOrder.begin(), kRowOrder.end(), label) - kRowOrder.begin();
    return std::tuple(g, pos, e.first);
  };
  std::sort(ordered.begin(), ordered.end(), [&](const auto& a, const auto& b) { return rank(a) < rank(b); });

  std::ostringstream md, csv;
  md << "| Group | Model |";
  csv << "group,model";
  for (const auto& d : grid.datasets) {
    md << ' ' << dataset_header(d) << " |";
    csv << ',' << csv_field(dataset_header(d));
  }
  md << "\n|---|---|";
  for (std::size_t i = 0; i < grid.datasets.size(); ++i) md << "---:|";
  md << '\n';
  csv << '\n';

  std::string last_group;
  for (const auto& [idx, r] : ordered) {
    const auto group = group_of(r->model_name);
    const auto label = row_label(*r);
    md << "| " << (group == last_group ? "" : group) << " | " << label << " |";
    csv << csv_field(group) << ',' << csv_field(label);
    last_group = group;
    for (const auto& d : grid.datasets) {
      const auto* c = grid.at(label, d);
      if (!c) {
        md << " - |";
        csv << ',';
        continue;
      }
      const auto v = percent(c->mean_accuracy);
      const bool top = best.count(d) && best.at(d) == v;
      md << ' ' << (top ? "**" + v + "**" : v) << " |";
      csv << ',' << v;
    }
    md << '\n';
    csv << '\n';
  }
  md << "\nAccuracy (%), mean over cross-validation folds; best per column in bold. Protocol: "
     << grid.protocol_note() << ".\n";
  return {md.str(), csv.str()};
}

Report table5(const ReportInput& input) {
  const Grid grid(input.results);
  const auto best = grid.best();
  auto comparison = [&](const EvaluationResult& r, const std::string& dataset) -> const Comparison* {
    for (const auto& c : input.comparisons)
      if (c.dataset == dataset && (c.model_name == row_label(r) || c.model_name == base_label(r) ||
                                   c.model_name == r.model_name))
        return &c;
    return nullptr;
  };
  std::string baseline;
  if (!input.comparisons.empty()) baseline = input.comparisons.front().baseline;

  std::ostringstream md, csv;
  md << "| Model |";
  csv << "model";
  for (const auto& d : grid.datasets) {
    md << ' ' << dataset_header(d) << " | p (" << dataset_header(d) << ") |";
    csv << ',' << csv_field(dataset_header(d)) << ',' << csv_field("p " + dataset_header(d)) << ','
        << csv_field("significant " + dataset_header(d));
  }
  md << "\n|---|";
  for (std::size_t i = 0; i < grid.datasets.size(); ++i) md << "---:|---:|";
  md << '\n';
  csv << '\n';

  bool any_degenerate = false;
  for (const auto* r : grid.rows) {
    const auto label = row_label(*r);
    const bool is_base = !baseline.empty() && (r->model_name == baseline || label == baseline);
    md << "| " << label << (is_base ? " (baseline)" : "") << " |";
    csv << csv_field(label);
    for (const auto& d : grid.datasets) {
      const auto* c = grid.at(label, d);
      if (!c) {
        md << " - | - |";
        csv << ",,,";
        continue;
      }
      const auto v = percent(c->mean_accuracy);
      const auto* cmp = comparison(*r, d);
      std::string cell = best.count(d) && best.at(d) == v ? "**" + v + "**" : v;
      if (cmp && cmp->test.significant) cell += "\\*";
      std::string p = "-";
      if (cmp) {
        p = p_text(cmp->test.p);
        if (cmp->test.degenerate) {
          p += " (t=" + std::string(cmp->test.t > 0 ? "+inf" : "-inf") + ")";
          any_degenerate = true;
        }
      }
      md << ' ' << cell << " | " << p << " |";
      csv << ',' << v << ',' << (cmp ? p_text(cmp->test.p) : "") << ','
          << (cmp ? (cmp->test.significant ? "1" : "0") : "");
    }
    md << '\n';
    csv << '\n';
  }
  md << "\nAccuracy (%); * marks a difference from the baseline"
     << (baseline.empty() ? "" : " (" + baseline + ")")
     << " with p < 0.05 in a paired two-tailed t-test over folds. Protocol: " << grid.protocol_note() << ".\n";
  if (any_degenerate) md << "Infinite t: every fold differed by the same amount.\n";
  return {md.str(), csv.str()};
}

Report table1(const ReportInput& input) {
  std::ostringstream md, csv;
  md << "| |";
  csv << "statistic";
  for (const auto& [name, s] : input.stats) {
    md << ' ' << name << " |";
    csv << ',' << csv_field(name);
  }
  md << "\n|---|";
  for (std::size_t i = 0; i < input.stats.size(); ++i) md << "---:|";
  md << '\n';
  csv << '\n';
  auto row = [&](const char* label, auto value) {
    md << "| " << label << " |";
    csv << csv_field(label);
    for (const auto& [name, s] : input.stats) {
      const std::string v = value(s);
      md << ' ' << v << " |";
      csv << ',' << v;
    }
    md << '\n';
    csv << '\n';
  };
  row("Number of tweets", [](const corpus::CorpusStats& s) { return std::to_string(s.n_tweets); });
  row("Word count", [](const corpus::CorpusStats& s) { return std::to_string(s.word_count); });
  row("Unique words", [](const corpus::CorpusStats& s) { return std::to_string(s.unique_words); });
  row("Average words per tweet", [](const corpus::CorpusStats& s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", s.avg_words_per_tweet);
    return std::string(buf);
  });
  return {md.str(), csv.str()};
}

}  // namespace

std::optional<Layout> layout_from_name(std::string_view name) {
  if (name == "table1") return Layout::kTable1;
  if (name == "table4") return Layout::kTable4;
  if (name == "table5") return Layout::kTable5;
  return std::nullopt;
}

std::string group_of(std::string_view model_name) {
  std::string backend;
  const auto family = family_from_model_name(model_name, &backend);
  if (!family || *family == Family::kMnb || *family == Family::kLr) return kGroupOrder[0];
  if (is_neural(*family)) return kGroupOrder[1];
  if (std::find(kTransformers.begin(), kTransformers.end(), backend) != kTransformers.end()) return kGroupOrder[2];
  return kGroupOrder[3];
}

Report emit_report(const ReportInput& input, Layout layout) {
  switch (layout) {
    case Layout::kTable1: return table1(input);
    case Layout::kTable4: return table4(input);
    case Layout::kTable5: return table5(input);
  }
  return {};
}

}  // namespace tweetbench::evaluate
