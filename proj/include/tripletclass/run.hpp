#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tripletclass/config.hpp"
#include "tripletclass/dataset.hpp"
#include "tripletclass/digest.hpp"
#include "tripletclass/knn.hpp"
#include "tripletclass/metrics.hpp"
#include "tripletclass/model.hpp"
#include "tripletclass/pca.hpp"
#include "tripletclass/plot.hpp"
#include "tripletclass/trainer.hpp"

namespace tripletclass {

/// Holds an exclusive flock on <dir>/.tripletclass.lock for the lifetime
/// of one command. A second command on the same directory fails fast.
class OutputDirLock {
 public:
  explicit OutputDirLock(const fs::path& dir) {
    std::filesystem::create_directories(dir);
    path_ = dir / ".tripletclass.lock";
    fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) fail(ErrorCode::data, "cannot open lock file '" + path_.string() + "'");
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      fail(ErrorCode::locked, "output directory '" + dir.string() + "' is locked by another run");
    }
  }

  OutputDirLock(const OutputDirLock&) = delete;
  OutputDirLock& operator=(const OutputDirLock&) = delete;

  ~OutputDirLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

inline std::string iso_utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --- prepare -----------------------------------------------------------------

struct PrepareOutputs {
  fs::path manifest_path;
  DatasetManifest manifest;
};

inline PrepareOutputs run_prepare(const fs::path& dataset_root, const ImageSize& image_size,
                                  double ratio, std::uint64_t seed, const fs::path& out_dir) {
  OutputDirLock lock(out_dir);
  DatasetManifest manifest = split(scan_dataset(dataset_root, image_size), ratio, seed);
  PrepareOutputs out{out_dir / "manifest.json", std::move(manifest)};
  save_manifest(out.manifest, out.manifest_path);
  return out;
}

// --- train --------------------------------------------------------------------

struct TrainOutputs {
  fs::path manifest_path, checkpoint_json, checkpoint_blob, history_csv, record_path;
  Model model;
};

namespace rundetail {

inline nlohmann::ordered_json file_entry(const fs::path& dir, const std::string& name) {
  return {{"path", name}, {"sha256", sha256_file(dir / name)}};
}

}  // namespace rundetail

/// Scan + split + train + persist: manifest, checkpoint (sidecar + blob),
/// history CSV, and a run record listing every artifact with its digest.
inline TrainOutputs run_train(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.output_dir.empty()) {
    fail(ErrorCode::config, "config field 'output_dir': must not be empty");
  }
  OutputDirLock lock(cfg.output_dir);

  // model construction needs no data, so config problems (for one, a
  // missing external adapter) surface before the dataset scan
  Model model = build_model(cfg.backbone, cfg.head, cfg.seed);

  DatasetManifest manifest =
      split(scan_dataset(cfg.dataset_root, cfg.image_size), cfg.split_ratio, cfg.seed);

  TrainOutputs out;
  out.manifest_path = cfg.output_dir / "manifest.json";
  save_manifest(manifest, out.manifest_path);
  model = cfg.train.regime == Regime::classifier ? train_classifier(cfg.train, manifest, std::move(model))
                                                 : train_triplet(cfg.train, manifest, std::move(model));

  out.checkpoint_json = cfg.output_dir / "checkpoint.json";
  out.checkpoint_blob = cfg.output_dir / "checkpoint.bin";
  save_checkpoint(model, out.checkpoint_json, out.checkpoint_blob);

  out.history_csv = cfg.output_dir / "history.csv";
  save_history_csv(model.history, out.history_csv);

  nlohmann::ordered_json record;
  record["run_id"] = cfg.run_id;
  record["created"] = iso_utc_now();
  record["config"] = run_config_to_json(cfg);
  record["manifest"] = "manifest.json";
  record["manifest_digest"] = sha256_file(out.manifest_path);
  record["training_history"] = history_to_json(model.history);
  record["checkpoint"] = "checkpoint.json";
  record["eval_report"] = nullptr;
  auto files = nlohmann::ordered_json::array();
  for (const char* name : {"manifest.json", "checkpoint.json", "checkpoint.bin", "history.csv"}) {
    files.push_back(rundetail::file_entry(cfg.output_dir, name));
  }
  record["files"] = files;

  out.record_path = cfg.output_dir / "run_record.json";
  std::ofstream rec(out.record_path);
  if (!rec) fail(ErrorCode::data, "cannot write run record");
  rec << record.dump(2) << "\n";

  out.model = std::move(model);
  return out;
}

// --- evaluate -----------------------------------------------------------------

struct EvaluateOutputs {
  fs::path report_json, report_csv, confusion_csv;
  fs::path embeddings_csv;  // triplet regime only
  EvalReport report;
};

namespace rundetail {

inline std::vector<int> argmax_rows(const Tensor& probs) {
  std::vector<int> out(probs.shape[0]);
  for (int b = 0; b < probs.shape[0]; ++b) {
    const float* row = probs.ptr() + static_cast<std::int64_t>(b) * probs.shape[1];
    int best = 0;
    for (int k = 1; k < probs.shape[1]; ++k) {
      if (row[k] > row[best]) best = k;
    }
    out[b] = best;
  }
  return out;
}

inline std::vector<int> split_labels(const DatasetManifest& manifest, SplitKind split) {
  std::vector<int> labels;
  for (int idx : manifest.split_indices(split)) labels.push_back(manifest.records[idx].label);
  return labels;
}

}  // namespace rundetail

/// Classifier checkpoints predict by softmax argmax; embedding checkpoints
/// embed the train split, fit an exact KNN, and predict the evaluated
/// split. Emits EvalReport JSON + CSV, the confusion CSV, and (triplet)
/// the evaluated split's embeddings CSV.
inline EvaluateOutputs run_evaluate(const fs::path& checkpoint_path,
                                    const fs::path& manifest_path, SplitKind eval_split, int k,
                                    const fs::path& out_dir) {
  OutputDirLock lock(out_dir);
  Model model = load_checkpoint(checkpoint_path);
  const DatasetManifest manifest = load_manifest(manifest_path);

  std::vector<std::string> class_names;
  for (const auto& c : manifest.classes) class_names.push_back(c.name);
  const std::vector<int> truth = rundetail::split_labels(manifest, eval_split);

  EvaluateOutputs out;
  std::vector<int> predicted;
  if (model.head.kind == HeadKind::classifier) {
    BatchIterator::Options opt;
    opt.batch_size = 32;
    opt.shuffle = false;
    BatchIterator it(manifest, eval_split, opt);
    while (auto batch = it.next()) {
      const auto preds = rundetail::argmax_rows(classifier_forward(model, batch->images));
      predicted.insert(predicted.end(), preds.begin(), preds.end());
    }
  } else {
    const EmbeddingSet reference = embed_dataset(model, manifest, SplitKind::train);
    const KnnIndex index = knn_fit(reference, k);
    const EmbeddingSet queries = embed_dataset(model, manifest, eval_split);
    predicted = knn_predict(index, queries.vectors);
    out.embeddings_csv = out_dir / "embeddings.csv";
    save_embeddings_csv(queries, out.embeddings_csv);
  }

  out.report = evaluate(truth, predicted, manifest.num_classes(), class_names);

  std::string model_name = checkpoint_path.stem().string();
  const fs::path record_path = out_dir / "run_record.json";
  nlohmann::ordered_json record;
  bool have_record = false;
  if (fs::exists(record_path)) {
    std::ifstream in(record_path);
    try {
      in >> record;
      have_record = true;
      model_name = record.at("run_id").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      have_record = false;
    }
  }

  out.report_json = out_dir / "eval_report.json";
  out.report_csv = out_dir / "eval_report.csv";
  out.confusion_csv = out_dir / "confusion.csv";
  save_eval_report_json(out.report, out.report_json);
  save_eval_report_csv(out.report, model_name, out.report_csv);
  save_confusion_csv(out.report.confusion, out.confusion_csv);

  if (have_record) {
    record["eval_report"] = "eval_report.json";
    record["evaluated"] = iso_utc_now();
    record["eval_split"] = split_name(eval_split);
    record["knn_k"] = k;
    auto files = record.at("files");
    files.push_back(rundetail::file_entry(out_dir, "eval_report.json"));
    files.push_back(rundetail::file_entry(out_dir, "eval_report.csv"));
    files.push_back(rundetail::file_entry(out_dir, "confusion.csv"));
    if (!out.embeddings_csv.empty()) {
      files.push_back(rundetail::file_entry(out_dir, "embeddings.csv"));
    }
    record["files"] = files;
    std::ofstream rec(record_path);
    rec << record.dump(2) << "\n";
  }
  return out;
}

// --- report -------------------------------------------------------------------

struct ReportOutputs {
  fs::path comparison_csv;
  std::vector<fs::path> artifacts;
};

/// Cross-run comparison table plus per-run loss curves, confusion heat
/// maps, and embedding scatters (PCA-projected when D > 2). Every file a
/// record references must exist with a matching digest.
inline ReportOutputs run_report(const std::vector<fs::path>& record_paths,
                                const fs::path& out_dir) {
  if (record_paths.empty()) fail(ErrorCode::config, "report needs at least one run record");
  OutputDirLock lock(out_dir);

  struct LoadedRun {
    std::string run_id;
    fs::path dir;
    nlohmann::json record;
    nlohmann::json eval;  // parsed eval_report.json
  };
  std::vector<LoadedRun> runs;
  std::vector<std::string> integrity_problems;

  for (const auto& record_path : record_paths) {
    std::ifstream in(record_path);
    if (!in) fail(ErrorCode::data, "cannot read run record '" + record_path.string() + "'");
    LoadedRun run;
    try {
      in >> run.record;
      run.run_id = run.record.at("run_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::validation,
           "malformed run record '" + record_path.string() + "': " + e.what());
    }
    run.dir = record_path.parent_path();

    for (const auto& entry : run.record.at("files")) {
      const fs::path artifact = run.dir / entry.at("path").get<std::string>();
      if (!fs::exists(artifact)) {
        integrity_problems.push_back("missing: " + artifact.string());
      } else if (sha256_file(artifact) != entry.at("sha256").get<std::string>()) {
        integrity_problems.push_back("digest mismatch: " + artifact.string());
      }
    }

    if (run.record.at("eval_report").is_null()) {
      fail(ErrorCode::validation,
           "run record '" + record_path.string() + "' has no eval report; run `evaluate` first");
    }
    const fs::path eval_path = run.dir / run.record.at("eval_report").get<std::string>();
    if (fs::exists(eval_path)) {
      std::ifstream ein(eval_path);
      try {
        ein >> run.eval;
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::validation, "malformed eval report '" + eval_path.string() + "'");
      }
    }
    runs.push_back(std::move(run));
  }

  if (!integrity_problems.empty()) {
    std::string msg = "run artifacts failed integrity checks:";
    for (const auto& p : integrity_problems) msg += "\n  " + p;
    fail(ErrorCode::integrity, msg);
  }

  ReportOutputs out;
  out.comparison_csv = out_dir / "comparison.csv";
  {
    std::ofstream cmp(out.comparison_csv);
    if (!cmp) fail(ErrorCode::data, "cannot write comparison table");
    cmp << "metric";
    for (const auto& run : runs) cmp << "," << run.run_id;
    cmp << "\n";
    const std::pair<const char*, const char*> rows[] = {{"accuracy", "accuracy"},
                                                        {"precision", "macro_precision"},
                                                        {"specificity", "macro_specificity"},
                                                        {"recall", "macro_recall"},
                                                        {"f1", "macro_f1"}};
    char cell[48];
    for (const auto& [label, key] : rows) {
      cmp << label;
      for (const auto& run : runs) {
        std::snprintf(cell, sizeof(cell), ",%.9g", run.eval.at(key).get<double>());
        cmp << cell;
      }
      cmp << "\n";
    }
  }

  for (const auto& run : runs) {
    // validation-loss curve: CSV first, rendered line on top
    std::vector<double> val_losses;
    for (const auto& rec : run.record.at("training_history")) {
      val_losses.push_back(rec.at("val_loss").get<double>());
    }
    const fs::path curve_csv = out_dir / (run.run_id + "_loss_curve.csv");
    {
      std::ofstream c(curve_csv);
      char line[64];
      c << "epoch,val_loss\n";
      for (std::size_t e = 0; e < val_losses.size(); ++e) {
        std::snprintf(line, sizeof(line), "%zu,%.9g\n", e + 1, val_losses[e]);
        c << line;
      }
    }
    const fs::path curve_png = out_dir / (run.run_id + "_loss_curve.png");
    render_line_chart({val_losses}, {run.run_id}, "validation loss", curve_png);
    out.artifacts.push_back(curve_csv);
    out.artifacts.push_back(curve_png);

    // confusion heat map from the eval report
    ConfusionMatrix cm;
    cm.class_names = run.eval.at("confusion").at("class_names").get<std::vector<std::string>>();
    cm.counts = run.eval.at("confusion").at("counts").get<std::vector<std::vector<long>>>();
    const fs::path heat_png = out_dir / (run.run_id + "_confusion.png");
    render_confusion_heatmap(cm, heat_png);
    out.artifacts.push_back(heat_png);

    // embedding scatter when the run exported embeddings
    const fs::path embeddings_csv = run.dir / "embeddings.csv";
    bool has_embeddings = false;
    for (const auto& entry : run.record.at("files")) {
      if (entry.at("path").get<std::string>() == "embeddings.csv") has_embeddings = true;
    }
    if (has_embeddings) {
      const EmbeddingSet set = load_embeddings_csv(embeddings_csv);
      Tensor coords;
      if (set.dim() == 2) {
        coords = set.vectors;  // already planar: plot raw embeddings
      } else {
        Projection proj = project_embeddings_2d(set.vectors);
        if (proj.degenerate) {
          std::fprintf(stderr, "warning: embeddings of run '%s' are degenerate; scatter is all zeros\n",
                       run.run_id.c_str());
        }
        coords = std::move(proj.coords);
      }
      const fs::path projected_csv = out_dir / (run.run_id + "_projected.csv");
      {
        std::ofstream p(projected_csv);
        char line[96];
        p << "label,x,y\n";
        for (int i = 0; i < set.count(); ++i) {
          std::snprintf(line, sizeof(line), "%d,%.9g,%.9g\n", set.labels[i],
                        static_cast<double>(coords.at(i, 0)), static_cast<double>(coords.at(i, 1)));
          p << line;
        }
      }
      const fs::path scatter_png = out_dir / (run.run_id + "_scatter.png");
      render_scatter(coords, set.labels, cm.class_names, scatter_png);
      out.artifacts.push_back(projected_csv);
      out.artifacts.push_back(scatter_png);
    }
  }
  return out;
}

}  // namespace tripletclass
