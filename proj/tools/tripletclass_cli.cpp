#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tripletclass/config.hpp"
#include "tripletclass/run.hpp"

namespace tlc = tripletclass;

namespace {

tlc::ImageSize parse_image_size(const std::string& text) {
  int h = 0, w = 0, c = 0;
  if (std::sscanf(text.c_str(), "%dx%dx%d", &h, &w, &c) != 3) {
    tlc::fail(tlc::ErrorCode::config,
              "image size must look like HxWxC (e.g. 64x64x3), got '" + text + "'");
  }
  tlc::ImageSize size{h, w, c};
  size.validate();
  return size;
}

int run(int argc, char** argv) {
  CLI::App app{"tri-category image classification: softmax and triplet-metric regimes"};
  app.require_subcommand(1);

  // prepare
  std::string prep_root, prep_size = "64x64x3", prep_out = ".";
  double prep_ratio = 0.8;
  std::uint64_t prep_seed = 0;
  auto* prepare = app.add_subcommand("prepare", "scan a dataset tree and write a split manifest");
  prepare->add_option("--root", prep_root, "dataset root (folder per class)")->required();
  prepare->add_option("--image-size", prep_size, "target HxWxC (default 64x64x3)");
  prepare->add_option("--ratio", prep_ratio, "train fraction (default 0.8)");
  prepare->add_option("--seed", prep_seed, "split seed");
  prepare->add_option("--out", prep_out, "output directory");

  // train
  std::string train_config, train_preset, train_root, train_out;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "train a model from a config file or preset");
  train->add_option("--config", train_config, "run-config JSON file");
  train->add_option("--preset", train_preset, "named preset (see --list-presets)");
  train->add_option("--root", train_root, "override dataset_root");
  train->add_option("--seed", train_seed, "override seed");
  train->add_option("--out", train_out, "override output_dir");
  bool list_presets = false;
  train->add_flag("--list-presets", list_presets, "print known presets and exit");

  // evaluate
  std::string eval_checkpoint, eval_manifest, eval_split = "validation", eval_out = ".";
  int eval_k = 1;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on one split");
  evaluate->add_option("--checkpoint", eval_checkpoint, "checkpoint sidecar JSON")->required();
  evaluate->add_option("--manifest", eval_manifest, "manifest JSON")->required();
  evaluate->add_option("--split", eval_split, "train | validation (default validation)");
  evaluate->add_option("--k", eval_k, "KNN neighbor count (triplet checkpoints)");
  evaluate->add_option("--out", eval_out, "output directory");

  // report
  std::string report_out = ".";
  std::vector<std::string> report_records;
  auto* report = app.add_subcommand("report", "comparison table and plots from run records");
  report->add_option("--out", report_out, "output directory");
  report->add_option("records", report_records, "run_record.json paths")->expected(-1);

  CLI11_PARSE(app, argc, argv);

  if (*prepare) {
    auto out = tlc::run_prepare(prep_root, parse_image_size(prep_size), prep_ratio, prep_seed,
                                prep_out);
    std::map<int, long> train_count, val_count;
    for (const auto& rec : out.manifest.records) {
      (rec.split == tlc::SplitKind::train ? train_count : val_count)[rec.label] += 1;
    }
    std::printf("manifest: %s\n", out.manifest_path.c_str());
    for (const auto& cls : out.manifest.classes) {
      std::printf("  %-20s train=%-6ld validation=%ld\n", cls.name.c_str(),
                  train_count[cls.index], val_count[cls.index]);
    }
    return 0;
  }

  if (*train) {
    if (list_presets) {
      for (const auto& name : tlc::preset_names()) std::printf("%s\n", name.c_str());
      return 0;
    }
    if (train_config.empty() == train_preset.empty()) {
      tlc::fail(tlc::ErrorCode::config, "train needs exactly one of --config or --preset");
    }
    tlc::RunConfig cfg = train_config.empty() ? tlc::preset_config(train_preset)
                                              : tlc::load_run_config(train_config);
    if (!train_root.empty()) cfg.dataset_root = train_root;
    if (train->count("--seed")) {
      cfg.seed = train_seed;
      cfg.train.seed = train_seed;
    }
    if (!train_out.empty()) cfg.output_dir = train_out;

    auto out = tlc::run_train(cfg);
    const auto& history = out.model.history;
    for (const auto& rec : history) {
      std::printf("epoch %d: train_loss=%.6g val_loss=%.6g\n", rec.epoch, rec.train_loss,
                  rec.val_loss);
    }
    std::printf("checkpoint: %s\n", out.checkpoint_json.c_str());
    std::printf("history:    %s\n", out.history_csv.c_str());
    std::printf("record:     %s\n", out.record_path.c_str());
    return 0;
  }

  if (*evaluate) {
    auto out = tlc::run_evaluate(eval_checkpoint, eval_manifest,
                                 tlc::split_from_name(eval_split), eval_k, eval_out);
    std::printf("accuracy:    %.6g\n", out.report.accuracy);
    std::printf("precision:   %.6g\n", out.report.macro_precision);
    std::printf("specificity: %.6g\n", out.report.macro_specificity);
    std::printf("recall:      %.6g\n", out.report.macro_recall);
    std::printf("f1:          %.6g\n", out.report.macro_f1);
    std::printf("report: %s\n", out.report_json.c_str());
    return 0;
  }

  if (*report) {
    if (report_records.empty()) {
      tlc::fail(tlc::ErrorCode::config, "report needs at least one run record path");
    }
    std::vector<tlc::fs::path> records(report_records.begin(), report_records.end());
    auto out = tlc::run_report(records, report_out);
    std::printf("comparison: %s\n", out.comparison_csv.c_str());
    for (const auto& artifact : out.artifacts) std::printf("  %s\n", artifact.c_str());
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const tlc::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.code_name(), e.what());
    return e.exit_status();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: INTERNAL: %s\n", e.what());
    return 1;
  }
}
