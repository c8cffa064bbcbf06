#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "s2s/autoencoder.hpp"
#include "s2s/body_model.hpp"
#include "s2s/krr.hpp"
#include "s2s/mesh_metrics.hpp"
#include "s2s/pca.hpp"
#include "s2s/silhouette.hpp"

namespace s2s {

struct SubjectRecord {
  std::string id;
  std::string beta_path, front_path, side_path;  // relative to the manifest root
  Measurements measurements;
  std::string split;  // train | val | test
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<SubjectRecord> subjects;
  int resolution = 64;
  double train_fraction = 0.8, val_fraction = 0.1, test_fraction = 0.1;
  std::uint64_t synth_seed = 0;
  std::uint64_t split_seed = 1;
  double shape_stddev = 1.0;

  std::vector<const SubjectRecord*> split_subjects(const std::string& split) const;
};

struct SynthesisConfig {
  int count = 300;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 1;
  int resolution = 64;
  double shape_stddev = 1.0;
  double margin_fraction = 0.05;
  double train_fraction = 0.8, val_fraction = 0.1, test_fraction = 0.1;
};

/// Samples shapes, deforms, measures ground truth, renders front (0 deg) and
/// side (90 deg) views, and writes images + beta files + the model bundle.
/// The manifest is written last as the completion marker. Deterministic:
/// fixed seeds give byte-identical outputs.
DatasetManifest synthesize_dataset(const BodyModel& model, const SynthesisConfig& config,
                                   const std::filesystem::path& out_dir);

/// `path` may be the manifest.csv or a directory containing it. Validates
/// that every referenced file exists.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct KrrHyperparams {
  KernelSpec kernel;
  double lambda = 0.1;
};

/// Everything needed for end-to-end prediction.
struct PipelineBundle {
  Autoencoder ae;
  PcaModel pca;
  KrrModel shape_head, measurement_head;          // autoencoder features
  KrrModel shape_head_pca, measurement_head_pca;  // PCA features, for the report
  BodyModel body;
  std::vector<double> loss_history;
};

/// Trains the autoencoder and PCA baseline on the train split, encodes the
/// split, fits the two regression heads per feature set, and persists all
/// artifacts plus a metadata file into out_dir.
PipelineBundle train_all(const DatasetManifest& manifest, const TrainConfig& train_cfg,
                         const KrrHyperparams& hyper, const std::filesystem::path& out_dir);

PipelineBundle load_bundle(const std::filesystem::path& dir);

struct SubjectPrediction {
  ShapeParams beta = ShapeParams::Zero();
  double bust_mm = 0.0, waist_mm = 0.0, hip_mm = 0.0;
  TriMesh mesh;  // deform(beta), same topology as the body-model template
};

/// Silhouettes -> embeddings -> regression heads -> reconstructed mesh.
/// Height and weight come from the caller (the deployment inputs).
SubjectPrediction predict_subject(const PipelineBundle& bundle, const Silhouette& front,
                                  const Silhouette& side, double height_mm, double weight_kg);

struct EvalReport {
  int sample_count = 0;
  double mae_bust_mm = 0, mae_waist_mm = 0, mae_hip_mm = 0;
  double mae_bust_pca_mm = 0, mae_waist_pca_mm = 0, mae_hip_pca_mm = 0;
  double mae_bust_baseline_mm = 0, mae_waist_baseline_mm = 0, mae_hip_baseline_mm = 0;
  double per_vertex_error_mm = 0;
  double per_vertex_error_baseline_mm = 0;
  double pixel_accuracy_front_ae = 0, pixel_accuracy_side_ae = 0;
  double pixel_accuracy_front_pca = 0, pixel_accuracy_side_pca = 0;
};

std::string to_csv(const EvalReport& report);
std::string to_summary(const EvalReport& report);

/// Test hook: replaces the regressed targets for a subject (oracle injection).
struct PredictedTargets {
  ShapeParams beta = ShapeParams::Zero();
  double bust_mm = 0.0, waist_mm = 0.0, hip_mm = 0.0;
};
using PredictorOverride =
    std::function<PredictedTargets(const SubjectRecord& record, const ShapeParams& true_beta)>;

/// MAE per measurement over the split, per-vertex mean error against the
/// ground-truth shapes, reconstruction pixel accuracy per view for both the
/// autoencoder and PCA, and mean-predictor baselines (train-split means).
/// Writes report.csv, report.txt and per-subject heatmaps when out_dir is
/// non-empty.
EvalReport evaluate(const PipelineBundle& bundle, const DatasetManifest& manifest,
                    const std::string& split, const std::filesystem::path& out_dir = {},
                    const PredictorOverride& override_fn = {});

/// CLI entry point (gen-data, measure, render, train, predict, eval).
/// Returns 0 on success, 1 on usage errors, 2 on data/model errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace s2s
