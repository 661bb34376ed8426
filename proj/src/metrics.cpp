#include "topicllm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "topicllm/errors.hpp"
#include "topicllm/text.hpp"

namespace topicllm::metrics {

namespace {

double pairs(std::size_t n) {
  return static_cast<double>(n) * static_cast<double>(n > 0 ? n - 1 : 0) / 2.0;
}

double entropy(const std::vector<std::size_t>& sums, double total) {
  double h = 0.0;
  for (std::size_t s : sums) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / total;
    h -= p * std::log(p);
  }
  return h;
}

std::vector<std::string> sample_ids(const std::vector<std::string>& ids) {
  std::vector<std::string> out(ids.begin(), ids.begin() + std::min<std::size_t>(ids.size(), 5));
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

bool ContingencyTable::identical_partitions() const {
  if (row_sums.size() != col_sums.size()) return false;
  for (const auto& row : n) {
    std::size_t nonzero = 0;
    for (std::size_t x : row) nonzero += x != 0;
    if (nonzero != 1) return false;
  }
  for (std::size_t j = 0; j < col_sums.size(); ++j) {
    std::size_t nonzero = 0;
    for (const auto& row : n) nonzero += row[j] != 0;
    if (nonzero != 1) return false;
  }
  return true;
}

ContingencyTable ContingencyTable::transposed() const {
  ContingencyTable t;
  t.row_labels = col_labels;
  t.col_labels = row_labels;
  t.row_sums = col_sums;
  t.col_sums = row_sums;
  t.total = total;
  t.n.assign(col_sums.size(), std::vector<std::size_t>(row_sums.size(), 0));
  for (std::size_t k = 0; k < n.size(); ++k) {
    for (std::size_t j = 0; j < n[k].size(); ++j) t.n[j][k] = n[k][j];
  }
  return t;
}

ContingencyTable contingency(const Clustering& pred, const Clustering& truth) {
  if (pred.empty() || truth.empty()) {
    throw DataError("cannot compare an empty clustering");
  }
  std::vector<std::string> only_pred, only_truth;
  for (const auto& [id, _] : pred) {
    if (!truth.count(id)) only_pred.push_back(id);
  }
  for (const auto& [id, _] : truth) {
    if (!pred.count(id)) only_truth.push_back(id);
  }
  if (!only_pred.empty() || !only_truth.empty()) {
    std::string msg = "item universes differ:";
    if (!only_pred.empty()) {
      msg += " " + std::to_string(only_pred.size()) +
             " predicted ids have no label (" + join(sample_ids(only_pred)) + ")";
    }
    if (!only_truth.empty()) {
      msg += (only_pred.empty() ? " " : "; ") + std::to_string(only_truth.size()) +
             " labeled ids have no prediction (" + join(sample_ids(only_truth)) + ")";
    }
    throw DataError(msg);
  }

  ContingencyTable t;
  std::map<std::string, std::size_t> rows, cols;
  for (const auto& [_, label] : pred) rows.emplace(label, 0);
  for (const auto& [_, label] : truth) cols.emplace(label, 0);
  for (auto& [label, idx] : rows) {
    idx = t.row_labels.size();
    t.row_labels.push_back(label);
  }
  for (auto& [label, idx] : cols) {
    idx = t.col_labels.size();
    t.col_labels.push_back(label);
  }
  t.n.assign(rows.size(), std::vector<std::size_t>(cols.size(), 0));
  t.row_sums.assign(rows.size(), 0);
  t.col_sums.assign(cols.size(), 0);
  for (const auto& [id, label] : pred) {
    const std::size_t k = rows[label];
    const std::size_t j = cols[truth.at(id)];
    ++t.n[k][j];
    ++t.row_sums[k];
    ++t.col_sums[j];
    ++t.total;
  }
  return t;
}

ContingencyTable table_from_counts(std::vector<std::vector<std::size_t>> counts) {
  const std::size_t cols = counts.empty() ? 0 : counts.front().size();
  std::vector<std::size_t> row_sums(counts.size(), 0), col_sums(cols, 0);
  for (const auto& row : counts) {
    if (row.size() != cols) throw DataError("ragged contingency table");
    for (std::size_t j = 0; j < cols; ++j) {
      col_sums[j] += row[j];
    }
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::size_t x : counts[k]) row_sums[k] += x;
  }
  // Empty rows and columns are not clusters.
  ContingencyTable t;
  std::vector<std::size_t> keep_cols;
  for (std::size_t j = 0; j < cols; ++j) {
    if (col_sums[j] == 0) continue;
    keep_cols.push_back(j);
    t.col_labels.push_back(std::to_string(j));
    t.col_sums.push_back(col_sums[j]);
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (row_sums[k] == 0) continue;
    std::vector<std::size_t> row;
    for (std::size_t j : keep_cols) row.push_back(counts[k][j]);
    t.n.push_back(std::move(row));
    t.row_labels.push_back(std::to_string(k));
    t.row_sums.push_back(row_sums[k]);
    t.total += row_sums[k];
  }
  if (t.total == 0) throw DataError("contingency table is empty");
  return t;
}

double purity(const ContingencyTable& t) {
  std::size_t hit = 0;
  for (const auto& row : t.n) hit += *std::max_element(row.begin(), row.end());
  return static_cast<double>(hit) / static_cast<double>(t.total);
}

double inverse_purity(const ContingencyTable& t) { return purity(t.transposed()); }

double harmonic_purity(const ContingencyTable& t) {
  double acc = 0.0;
  for (std::size_t j = 0; j < t.col_sums.size(); ++j) {
    double best = 0.0;
    for (std::size_t k = 0; k < t.row_sums.size(); ++k) {
      if (t.n[k][j] == 0) continue;
      const double f = 2.0 * static_cast<double>(t.n[k][j]) /
                       static_cast<double>(t.col_sums[j] + t.row_sums[k]);
      best = std::max(best, f);
    }
    acc += static_cast<double>(t.col_sums[j]) * best;
  }
  return std::min(1.0, acc / static_cast<double>(t.total));
}

double adjusted_rand_index(const ContingencyTable& t) {
  double index = 0.0;
  for (const auto& row : t.n) {
    for (std::size_t x : row) index += pairs(x);
  }
  double a = 0.0, b = 0.0;
  for (std::size_t s : t.row_sums) a += pairs(s);
  for (std::size_t s : t.col_sums) b += pairs(s);
  const double all = pairs(t.total);
  const double expected = all > 0.0 ? a * b / all : 0.0;
  const double max_index = (a + b) / 2.0;
  if (max_index == expected) return t.identical_partitions() ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

double nmi(const ContingencyTable& t) {
  if (t.identical_partitions()) return 1.0;
  const double total = static_cast<double>(t.total);
  const double h_pred = entropy(t.row_sums, total);
  const double h_true = entropy(t.col_sums, total);
  if (h_pred == 0.0 || h_true == 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t k = 0; k < t.n.size(); ++k) {
    for (std::size_t j = 0; j < t.n[k].size(); ++j) {
      const double nkj = static_cast<double>(t.n[k][j]);
      if (nkj == 0.0) continue;
      mi += nkj / total *
            std::log(total * nkj / (static_cast<double>(t.row_sums[k]) *
                                    static_cast<double>(t.col_sums[j])));
    }
  }
  return std::clamp(mi / ((h_pred + h_true) / 2.0), 0.0, 1.0);
}

AlignmentReport alignment_report(const ContingencyTable& t) {
  return {purity(t), inverse_purity(t), harmonic_purity(t),
          adjusted_rand_index(t), nmi(t), t.total};
}

AlignmentReport alignment_report(const Clustering& pred, const Clustering& truth) {
  return alignment_report(contingency(pred, truth));
}

Clustering clustering_from_assignments(const std::vector<Assignment>& assignments) {
  Clustering out;
  for (const auto& a : assignments) {
    if (a.entries.size() != 1) {
      throw DataError("document " + a.doc_id + " has " +
                      std::to_string(a.entries.size()) +
                      " topics; metrics need single-label assignments");
    }
    out[a.doc_id] = a.entries.front().label;
  }
  return out;
}

Clustering argmax_clustering(const std::map<std::string, std::vector<double>>& probs,
                             const std::vector<std::string>& names) {
  Clustering out;
  for (const auto& [id, p] : probs) {
    if (p.empty()) throw DataError("document " + id + " has no topic weights");
    const auto best = static_cast<std::size_t>(
        std::max_element(p.begin(), p.end()) - p.begin());
    if (!names.empty() && names.size() != p.size()) {
      throw DataError("document " + id + " has " + std::to_string(p.size()) +
                      " weights for " + std::to_string(names.size()) + " topics");
    }
    out[id] = names.empty() ? "topic_" + std::to_string(best) : names[best];
  }
  return out;
}

Clustering read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labels file " + path.string());
  Clustering out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    std::string id, label;
    if (body.front() == '{') {
      try {
        const auto j = nlohmann::json::parse(body);
        id = j.at("id").get<std::string>();
        if (!j.contains("label") || j["label"].is_null()) {
          throw DataError(where + "record has no label");
        }
        label = j["label"].get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw DataError(where + e.what());
      }
    } else {
      const auto tab = body.find('\t');
      if (tab == std::string_view::npos) {
        throw DataError(where + "expected \"id<TAB>label\"");
      }
      id = std::string(text::trim(body.substr(0, tab)));
      label = std::string(text::trim(body.substr(tab + 1)));
    }
    if (id.empty() || label.empty()) throw DataError(where + "empty id or label");
    if (!out.emplace(id, label).second) {
      throw DataError(where + "duplicate id \"" + id + "\"");
    }
  }
  return out;
}

std::size_t restrict_to_common(Clustering& a, Clustering& b) {
  std::size_t dropped = 0;
  for (auto it = a.begin(); it != a.end();) {
    if (!b.count(it->first)) {
      it = a.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  for (auto it = b.begin(); it != b.end();) {
    if (!a.count(it->first)) {
      it = b.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

}  // namespace topicllm::metrics
