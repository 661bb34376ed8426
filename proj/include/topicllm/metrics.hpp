#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "topicllm/assignment.hpp"

namespace topicllm::metrics {

/// Item id -> cluster label.
using Clustering = std::map<std::string, std::string>;

/// n[k][j] = |omega_k ∩ c_j|. Rows are predicted clusters, columns true
/// classes, both in sorted label order.
struct ContingencyTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<std::size_t>> n;
  std::vector<std::size_t> row_sums;
  std::vector<std::size_t> col_sums;
  std::size_t total = 0;

  /// Both partitions group the items identically (up to relabeling).
  bool identical_partitions() const;
  ContingencyTable transposed() const;
};

/// Throws DataError when the id sets differ or either side is empty.
ContingencyTable contingency(const Clustering& pred, const Clustering& truth);

/// Builds a table directly from counts; rows must be nonempty.
ContingencyTable table_from_counts(std::vector<std::vector<std::size_t>> counts);

double purity(const ContingencyTable& t);
double inverse_purity(const ContingencyTable& t);
/// Class-weighted best-match F measure (P1).
double harmonic_purity(const ContingencyTable& t);
/// Hubert-Arabie ARI. When max index equals expected index: 1 if the
/// partitions are identical, else 0.
double adjusted_rand_index(const ContingencyTable& t);
/// Mutual information over the arithmetic mean of the entropies, natural
/// log. Identical partitions give 1; otherwise a zero entropy gives 0.
double nmi(const ContingencyTable& t);

struct AlignmentReport {
  double purity = 0.0;
  double inverse_purity = 0.0;
  double p1 = 0.0;
  double ari = 0.0;
  double nmi = 0.0;
  std::size_t items = 0;
};

AlignmentReport alignment_report(const ContingencyTable& t);
AlignmentReport alignment_report(const Clustering& pred, const Clustering& truth);

/// One cluster per document: the deepest label of its single entry. Throws
/// DataError on a document with more than one entry.
Clustering clustering_from_assignments(const std::vector<Assignment>& assignments);

/// Soft assignments reduced to their highest-probability topic; ties go to
/// the lower index. Labels are `names[i]` when given, else "topic_<i>".
Clustering argmax_clustering(const std::map<std::string, std::vector<double>>& probs,
                             const std::vector<std::string>& names = {});

/// Ground-truth labels from JSONL records with "id" and "label" (a labeled
/// corpus file works) or from "id<TAB>label" lines.
Clustering read_labels(const std::filesystem::path& path);

/// Drops ids that are not in both clusterings; returns how many were dropped.
std::size_t restrict_to_common(Clustering& a, Clustering& b);

}  // namespace topicllm::metrics
