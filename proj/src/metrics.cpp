#include "mgr/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "mgr/error.hpp"
#include "mgr/gcn.hpp"

namespace mgr {

std::vector<std::optional<double>> per_class_recall(std::span<const std::size_t> predictions,
                                                    std::span<const std::size_t> labels, std::size_t num_classes) {
  if (predictions.size() != labels.size()) throw InvalidInput("predictions and labels differ in length");
  std::vector<std::size_t> hits(num_classes, 0), support(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes || predictions[i] >= num_classes) throw InvalidInput("class index out of range");
    ++support[labels[i]];
    if (predictions[i] == labels[i]) ++hits[labels[i]];
  }
  std::vector<std::optional<double>> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c)
    if (support[c] > 0) out[c] = static_cast<double>(hits[c]) / static_cast<double>(support[c]);
  return out;
}

std::optional<double> average_precision(std::span<const double> scores, const std::vector<bool>& positives) {
  if (scores.size() != positives.size()) throw InvalidInput("scores and positives differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::size_t seen = 0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!positives[order[rank]]) continue;
    ++seen;
    sum += static_cast<double>(seen) / static_cast<double>(rank + 1);
  }
  if (seen == 0) return std::nullopt;
  return sum / static_cast<double>(seen);
}

EvalReport evaluate(const Matrix& probs, std::span<const std::size_t> labels, std::size_t num_classes) {
  if (probs.rows() != labels.size()) throw InvalidInput("probability rows and labels differ in length");
  if (probs.cols() != num_classes) throw InvalidInput("probability columns != class count");

  EvalReport r;
  std::vector<std::size_t> predictions(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) predictions[i] = argmax(probs.row(i));

  r.per_class_recall = per_class_recall(predictions, labels, num_classes);
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  r.support.assign(num_classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++r.confusion[labels[i]][predictions[i]];
    ++r.support[labels[i]];
    if (predictions[i] == labels[i]) ++correct;
  }
  r.overall_accuracy = labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());

  std::vector<double> column(labels.size());
  std::vector<bool> positives(labels.size());
  double ap_sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      column[i] = probs(i, c);
      positives[i] = labels[i] == c;
    }
    r.per_class_ap.push_back(average_precision(column, positives));
    if (r.per_class_ap.back()) {
      ap_sum += *r.per_class_ap.back();
      ++defined;
    }
  }
  r.map = defined == 0 ? 0.0 : ap_sum / static_cast<double>(defined);
  return r;
}

nlohmann::json report_to_json(const EvalReport& report, const std::vector<std::string>& class_names) {
  auto optional_list = [](const std::vector<std::optional<double>>& values) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : values) arr.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    return arr;
  };
  nlohmann::json j{
      {"per_class_recall", optional_list(report.per_class_recall)},
      {"per_class_ap", optional_list(report.per_class_ap)},
      {"map", report.map},
      {"overall_accuracy", report.overall_accuracy},
      {"confusion", report.confusion},
      {"support", report.support},
  };
  if (!class_names.empty()) j["class_names"] = class_names;
  return j;
}

}  // namespace mgr
