#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgr/numerics.hpp"

namespace mgr {

struct EvalReport {
  /// Top-1 recall per class; nullopt for classes without support.
  std::vector<std::optional<double>> per_class_recall;
  /// All-points AP per class; nullopt for classes without positives.
  std::vector<std::optional<double>> per_class_ap;
  double map = 0.0;
  double overall_accuracy = 0.0;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<std::size_t> support;
};

std::vector<std::optional<double>> per_class_recall(std::span<const std::size_t> predictions,
                                                    std::span<const std::size_t> labels, std::size_t num_classes);

/// Instances sorted by descending score (ties keep original order); AP is the
/// mean of precision@rank over the ranks holding positives. nullopt without positives.
std::optional<double> average_precision(std::span<const double> scores, const std::vector<bool>& positives);

/// Rows of `probs` are per-instance class distributions.
EvalReport evaluate(const Matrix& probs, std::span<const std::size_t> labels, std::size_t num_classes);

/// Keys: per_class_recall, per_class_ap (null when undefined), map,
/// overall_accuracy, confusion, support, and class_names when given.
nlohmann::json report_to_json(const EvalReport& report, const std::vector<std::string>& class_names = {});

}  // namespace mgr
