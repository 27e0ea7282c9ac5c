#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tripletclass/errors.hpp"

namespace tripletclass {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::vector<long>> counts;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(counts.size()); }

  long total() const {
    long t = 0;
    for (const auto& row : counts) {
      for (long v : row) t += v;
    }
    return t;
  }
};

inline ConfusionMatrix confusion(const std::vector<int>& true_labels,
                                 const std::vector<int>& predicted, int num_classes,
                                 std::vector<std::string> class_names = {}) {
  if (true_labels.size() != predicted.size()) {
    fail(ErrorCode::contract, "confusion: label vectors differ in length");
  }
  if (num_classes < 1) fail(ErrorCode::contract, "confusion: need at least one class");
  ConfusionMatrix cm;
  cm.counts.assign(num_classes, std::vector<long>(num_classes, 0));
  if (class_names.empty()) {
    for (int c = 0; c < num_classes; ++c) class_names.push_back("class" + std::to_string(c));
  }
  cm.class_names = std::move(class_names);
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i], p = predicted[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      fail(ErrorCode::contract, "confusion: label out of range at row " + std::to_string(i));
    }
    cm.counts[t][p] += 1;
  }
  return cm;
}

struct BinaryCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// One-vs-rest reduction for a single class.
inline BinaryCounts binary_counts(const ConfusionMatrix& cm, int class_index) {
  if (class_index < 0 || class_index >= cm.num_classes()) {
    fail(ErrorCode::contract, "binary_counts: class index out of range");
  }
  BinaryCounts b;
  b.tp = cm.counts[class_index][class_index];
  for (int i = 0; i < cm.num_classes(); ++i) {
    if (i == class_index) continue;
    b.fp += cm.counts[i][class_index];
    b.fn += cm.counts[class_index][i];
  }
  b.tn = cm.total() - b.tp - b.fp - b.fn;
  return b;
}

// Degenerate denominators yield 0 by convention rather than an error.
inline double accuracy(const ConfusionMatrix& cm) {
  const long total = cm.total();
  if (total == 0) return 0.0;
  long diag = 0;
  for (int i = 0; i < cm.num_classes(); ++i) diag += cm.counts[i][i];
  return static_cast<double>(diag) / static_cast<double>(total);
}

inline double precision(long tp, long fp) {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

inline double recall(long tp, long fn) {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

inline double f1(double precision_value, double recall_value) {
  const double denom = precision_value + recall_value;
  return denom == 0.0 ? 0.0 : 2.0 * precision_value * recall_value / denom;
}

inline double specificity(long tn, long fp) {
  return tn + fp == 0 ? 0.0 : static_cast<double>(tn) / static_cast<double>(tn + fp);
}

struct ClassReport {
  BinaryCounts counts;
  double precision = 0.0, recall = 0.0, f1 = 0.0, specificity = 0.0;
};

struct EvalReport {
  ConfusionMatrix confusion;
  std::vector<ClassReport> per_class;
  double accuracy = 0.0;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0, macro_specificity = 0.0;
};

inline EvalReport evaluate(const std::vector<int>& true_labels, const std::vector<int>& predicted,
                           int num_classes, std::vector<std::string> class_names = {}) {
  EvalReport report;
  report.confusion = confusion(true_labels, predicted, num_classes, std::move(class_names));
  report.accuracy = accuracy(report.confusion);
  for (int c = 0; c < num_classes; ++c) {
    ClassReport cr;
    cr.counts = binary_counts(report.confusion, c);
    cr.precision = precision(cr.counts.tp, cr.counts.fp);
    cr.recall = recall(cr.counts.tp, cr.counts.fn);
    cr.f1 = f1(cr.precision, cr.recall);
    cr.specificity = specificity(cr.counts.tn, cr.counts.fp);
    report.macro_precision += cr.precision;
    report.macro_recall += cr.recall;
    report.macro_f1 += cr.f1;
    report.macro_specificity += cr.specificity;
    report.per_class.push_back(cr);
  }
  report.macro_precision /= num_classes;
  report.macro_recall /= num_classes;
  report.macro_f1 /= num_classes;
  report.macro_specificity /= num_classes;
  return report;
}

// --- serialization --------------------------------------------------------------

inline nlohmann::ordered_json eval_report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["macro_precision"] = r.macro_precision;
  j["macro_specificity"] = r.macro_specificity;
  j["macro_recall"] = r.macro_recall;
  j["macro_f1"] = r.macro_f1;
  auto classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& cr = r.per_class[c];
    classes.push_back({{"name", r.confusion.class_names[c]},
                       {"tp", cr.counts.tp},
                       {"fp", cr.counts.fp},
                       {"fn", cr.counts.fn},
                       {"tn", cr.counts.tn},
                       {"precision", cr.precision},
                       {"recall", cr.recall},
                       {"f1", cr.f1},
                       {"specificity", cr.specificity}});
  }
  j["per_class"] = classes;
  j["confusion"] = {{"class_names", r.confusion.class_names}, {"counts", r.confusion.counts}};
  return j;
}

inline void save_eval_report_json(const EvalReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::data, "cannot write report '" + path.string() + "'");
  out << eval_report_to_json(r).dump(2) << "\n";
}

/// One metric per row, one model per column (single column here; the
/// report command merges several runs side by side).
inline void save_eval_report_csv(const EvalReport& r, const std::string& model_name,
                                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::data, "cannot write report '" + path.string() + "'");
  char line[96];
  out << "metric," << model_name << "\n";
  const std::pair<const char*, double> rows[] = {{"accuracy", r.accuracy},
                                                 {"precision", r.macro_precision},
                                                 {"specificity", r.macro_specificity},
                                                 {"recall", r.macro_recall},
                                                 {"f1", r.macro_f1}};
  for (const auto& [name, value] : rows) {
    std::snprintf(line, sizeof(line), "%s,%.9g\n", name, value);
    out << line;
  }
}

/// Header row of class names, then the K x K integer counts.
inline void save_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::data, "cannot write confusion matrix '" + path.string() + "'");
  for (int c = 0; c < cm.num_classes(); ++c) {
    if (c) out << ",";
    out << cm.class_names[c];
  }
  out << "\n";
  for (const auto& row : cm.counts) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << row[i];
    }
    out << "\n";
  }
}

}  // namespace tripletclass
