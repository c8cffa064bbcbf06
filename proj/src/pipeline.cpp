#include "s2s/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "s2s/io_util.hpp"
#include "s2s/rng.hpp"

namespace s2s {

namespace {

std::string subject_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%04d", index);
  return buf;
}

void write_beta(const ShapeParams& beta, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buf[48];
  for (int k = 0; k < kShapeDims; ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g\n", beta[k]);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ShapeParams read_beta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open beta file " + path.string());
  ShapeParams beta;
  for (int k = 0; k < kShapeDims; ++k) {
    if (!(in >> beta[k])) {
      throw std::runtime_error("beta file " + path.string() + " has fewer than 10 values");
    }
  }
  return beta;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

std::vector<const SubjectRecord*> DatasetManifest::split_subjects(const std::string& split) const {
  std::vector<const SubjectRecord*> out;
  for (const SubjectRecord& s : subjects) {
    if (s.split == split) out.push_back(&s);
  }
  return out;
}

DatasetManifest synthesize_dataset(const BodyModel& model, const SynthesisConfig& config,
                                   const std::filesystem::path& out_dir) {
  if (config.count < 1) throw std::invalid_argument("synthesize_dataset: count must be >= 1");
  if (config.resolution < 32 || config.resolution % 32 != 0) {
    throw std::invalid_argument("synthesize_dataset: resolution must be a multiple of 32");
  }
  const double frac_sum =
      config.train_fraction + config.val_fraction + config.test_fraction;
  if (std::abs(frac_sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  std::filesystem::create_directories(out_dir);
  save_model(model, out_dir / "model");

  // split assignment by shuffled subject order, recorded per row
  const int n = config.count;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(config.split_seed);
  split_rng.shuffle(order);
  const int n_test = static_cast<int>(std::floor(config.test_fraction * n));
  const int n_val = static_cast<int>(std::floor(config.val_fraction * n));
  const int n_train = n - n_val - n_test;
  if (n_train < 1) throw std::invalid_argument("split fractions leave an empty train split");
  std::vector<std::string> split_of(n);
  for (int i = 0; i < n; ++i) {
    split_of[order[i]] = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
  }

  const auto betas = sample_shapes(n, config.shape_stddev, config.seed);

  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.resolution = config.resolution;
  manifest.train_fraction = config.train_fraction;
  manifest.val_fraction = config.val_fraction;
  manifest.test_fraction = config.test_fraction;
  manifest.synth_seed = config.seed;
  manifest.split_seed = config.split_seed;
  manifest.shape_stddev = config.shape_stddev;

  const ViewSpec front_view{0.0, config.margin_fraction};
  const ViewSpec side_view{90.0, config.margin_fraction};
  for (int i = 0; i < n; ++i) {
    const std::string id = subject_name(i);
    try {
      const TriMesh mesh = deform(model, betas[i]);
      SubjectRecord record;
      record.id = id;
      record.beta_path = id + "_beta.txt";
      record.front_path = id + "_front.pgm";
      record.side_path = id + "_side.pgm";
      record.measurements = measure_all(mesh);
      record.split = split_of[i];
      write_beta(betas[i], out_dir / record.beta_path);
      save_silhouette(rasterize(mesh, front_view, config.resolution, config.resolution),
                      out_dir / record.front_path);
      save_silhouette(rasterize(mesh, side_view, config.resolution, config.resolution),
                      out_dir / record.side_path);
      manifest.subjects.push_back(std::move(record));
    } catch (const std::exception& e) {
      throw std::runtime_error("dataset synthesis failed at subject " + id + ": " + e.what());
    }
  }

  save_manifest(manifest, out_dir / "manifest.csv");  // completion marker
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# s2s dataset manifest\n";
  out << "# resolution=" << manifest.resolution << "\n";
  out << "# synth_seed=" << manifest.synth_seed << "\n";
  out << "# split_seed=" << manifest.split_seed << "\n";
  out << "# shape_stddev=" << fmt_fixed(manifest.shape_stddev, 6) << "\n";
  out << "# fractions=" << fmt_fixed(manifest.train_fraction, 6) << ","
      << fmt_fixed(manifest.val_fraction, 6) << "," << fmt_fixed(manifest.test_fraction, 6)
      << "\n";
  out << "id,beta_path,front_path,side_path,height_mm,weight_kg,bust_mm,waist_mm,hip_mm,split\n";
  for (const SubjectRecord& s : manifest.subjects) {
    out << s.id << ',' << s.beta_path << ',' << s.front_path << ',' << s.side_path << ','
        << fmt_fixed(s.measurements.height_mm, 3) << ',' << fmt_fixed(s.measurements.weight_kg, 3)
        << ',' << fmt_fixed(s.measurements.bust_mm, 3) << ','
        << fmt_fixed(s.measurements.waist_mm, 3) << ',' << fmt_fixed(s.measurements.hip_mm, 3)
        << ',' << s.split << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::filesystem::path file = path;
  if (std::filesystem::is_directory(file)) file /= "manifest.csv";
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open manifest " + file.string());

  DatasetManifest manifest;
  manifest.root = file.parent_path();
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "resolution") manifest.resolution = std::stoi(value);
      if (key == "synth_seed") manifest.synth_seed = std::stoull(value);
      if (key == "split_seed") manifest.split_seed = std::stoull(value);
      if (key == "shape_stddev") manifest.shape_stddev = std::stod(value);
      if (key == "fractions") {
        const auto f = split_csv_line(value);
        if (f.size() == 3) {
          manifest.train_fraction = std::stod(f[0]);
          manifest.val_fraction = std::stod(f[1]);
          manifest.test_fraction = std::stod(f[2]);
        }
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;  // column header row
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 10) {
      throw std::runtime_error("manifest " + file.string() + " line " + std::to_string(line_no) +
                               ": expected 10 fields, got " + std::to_string(fields.size()));
    }
    SubjectRecord s;
    s.id = fields[0];
    s.beta_path = fields[1];
    s.front_path = fields[2];
    s.side_path = fields[3];
    s.measurements.height_mm = std::stod(fields[4]);
    s.measurements.weight_kg = std::stod(fields[5]);
    s.measurements.bust_mm = std::stod(fields[6]);
    s.measurements.waist_mm = std::stod(fields[7]);
    s.measurements.hip_mm = std::stod(fields[8]);
    s.split = fields[9];
    if (s.split != "train" && s.split != "val" && s.split != "test") {
      throw std::runtime_error("manifest line " + std::to_string(line_no) + ": unknown split '" +
                               s.split + "'");
    }
    for (const std::string& rel : {s.beta_path, s.front_path, s.side_path}) {
      if (!std::filesystem::exists(manifest.root / rel)) {
        throw std::runtime_error("manifest references missing file " +
                                 (manifest.root / rel).string());
      }
    }
    manifest.subjects.push_back(std::move(s));
  }
  if (manifest.subjects.empty()) {
    throw std::runtime_error("manifest " + file.string() + " lists no subjects");
  }
  return manifest;
}

namespace {

struct SubjectFeatures {
  Eigen::MatrixXd ae;   // n x 514
  Eigen::MatrixXd pca;  // n x 514
  Eigen::MatrixXd beta; // n x 10
  Eigen::MatrixXd meas; // n x 3 (bust, waist, hip)
};

SubjectFeatures featurize(const std::vector<const SubjectRecord*>& subjects,
                          const DatasetManifest& manifest, const Autoencoder& ae,
                          const PcaModel& pca) {
  const auto n = static_cast<Eigen::Index>(subjects.size());
  SubjectFeatures f;
  f.ae.resize(n, kFeatureDims);
  f.pca.resize(n, kFeatureDims);
  f.beta.resize(n, kShapeDims);
  f.meas.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SubjectRecord& s = *subjects[i];
    const Silhouette front = load_silhouette(manifest.root / s.front_path);
    const Silhouette side = load_silhouette(manifest.root / s.side_path);
    const double h = s.measurements.height_mm, w = s.measurements.weight_kg;
    f.ae.row(i) = build_features(ae.encode(front), ae.encode(side), h, w).transpose();
    f.pca.row(i) = build_features(pca_encode(pca, front), pca_encode(pca, side), h, w).transpose();
    f.beta.row(i) = read_beta(manifest.root / s.beta_path).transpose();
    f.meas.row(i) << s.measurements.bust_mm, s.measurements.waist_mm, s.measurements.hip_mm;
  }
  return f;
}

}  // namespace

PipelineBundle train_all(const DatasetManifest& manifest, const TrainConfig& train_cfg,
                         const KrrHyperparams& hyper, const std::filesystem::path& out_dir) {
  const auto train_subjects = manifest.split_subjects("train");
  if (train_subjects.empty()) throw std::runtime_error("train split is empty");
  std::filesystem::create_directories(out_dir);

  // training silhouettes
  std::vector<SilhouettePair> pairs;
  std::vector<Silhouette> all_views;
  pairs.reserve(train_subjects.size());
  for (const SubjectRecord* s : train_subjects) {
    SilhouettePair pair;
    pair.front = load_silhouette(manifest.root / s->front_path);
    pair.side = load_silhouette(manifest.root / s->side_path);
    pair.subject_id = s->id;
    if (pair.front.width != manifest.resolution || pair.front.height != manifest.resolution) {
      throw std::runtime_error("silhouette resolution mismatch for subject " + s->id);
    }
    all_views.push_back(pair.front);
    all_views.push_back(pair.side);
    pairs.push_back(std::move(pair));
  }

  Autoencoder ae(AeConfig{manifest.resolution, 32}, train_cfg.seed);
  std::vector<double> history = ae.train(pairs, train_cfg);
  PcaModel pca = pca_fit(all_views);

  const SubjectFeatures f = featurize(train_subjects, manifest, ae, pca);
  PipelineBundle bundle{
      std::move(ae),
      std::move(pca),
      krr_fit(f.ae, f.beta, hyper.kernel, hyper.lambda),
      krr_fit(f.ae, f.meas, hyper.kernel, hyper.lambda),
      krr_fit(f.pca, f.beta, hyper.kernel, hyper.lambda),
      krr_fit(f.pca, f.meas, hyper.kernel, hyper.lambda),
      load_model(manifest.root / "model"),
      history,
  };

  // persist artifacts
  bundle.ae.save(out_dir / "ae.s2sae");
  save_pca(bundle.pca, out_dir / "pca.s2spca");
  save_krr(bundle.shape_head, out_dir / "krr_shape.s2skrr");
  save_krr(bundle.measurement_head, out_dir / "krr_meas.s2skrr");
  save_krr(bundle.shape_head_pca, out_dir / "krr_shape_pca.s2skrr");
  save_krr(bundle.measurement_head_pca, out_dir / "krr_meas_pca.s2skrr");
  save_model(bundle.body, out_dir / "model");

  std::ofstream meta(out_dir / "training_meta.txt");
  meta << "resolution=" << manifest.resolution << "\n"
       << "train_subjects=" << train_subjects.size() << "\n"
       << "seed=" << train_cfg.seed << "\n"
       << "epochs=" << train_cfg.epochs << "\n"
       << "batch_size=" << train_cfg.batch_size << "\n"
       << "learning_rate=" << fmt_fixed(train_cfg.learning_rate, 9) << "\n"
       << "adam_beta1=" << fmt_fixed(train_cfg.adam_beta1, 6) << "\n"
       << "adam_beta2=" << fmt_fixed(train_cfg.adam_beta2, 6) << "\n"
       << "kernel_degree=" << hyper.kernel.degree << "\n"
       << "kernel_scale=" << fmt_fixed(hyper.kernel.scale, 9) << "\n"
       << "kernel_offset=" << fmt_fixed(hyper.kernel.offset, 6) << "\n"
       << "lambda=" << fmt_fixed(hyper.lambda, 9) << "\n"
       << "dataset_synth_seed=" << manifest.synth_seed << "\n"
       << "dataset_split_seed=" << manifest.split_seed << "\n";
  meta.close();

  std::ofstream loss_csv(out_dir / "loss_history.csv");
  loss_csv << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    loss_csv << (e + 1) << ',' << fmt_fixed(history[e], 9) << "\n";
  }
  return bundle;
}

PipelineBundle load_bundle(const std::filesystem::path& dir) {
  PipelineBundle bundle{
      Autoencoder::load(dir / "ae.s2sae"),
      load_pca(dir / "pca.s2spca"),
      load_krr(dir / "krr_shape.s2skrr"),
      load_krr(dir / "krr_meas.s2skrr"),
      load_krr(dir / "krr_shape_pca.s2skrr"),
      load_krr(dir / "krr_meas_pca.s2skrr"),
      load_model(dir / "model"),
      {},
  };
  return bundle;
}

SubjectPrediction predict_subject(const PipelineBundle& bundle, const Silhouette& front,
                                  const Silhouette& side, double height_mm, double weight_kg) {
  if (front.empty_foreground() || side.empty_foreground()) {
    throw std::invalid_argument("predict_subject: silhouette has no foreground pixels");
  }
  const int res = bundle.ae.config().resolution;
  if (front.width != res || front.height != res || side.width != res || side.height != res) {
    throw std::invalid_argument("predict_subject: silhouettes do not match the bundle resolution " +
                                std::to_string(res));
  }
  const FeatureVector features =
      build_features(bundle.ae.encode(front), bundle.ae.encode(side), height_mm, weight_kg);
  SubjectPrediction pred;
  pred.beta = krr_predict(bundle.shape_head, features);
  const Eigen::VectorXd meas = krr_predict(bundle.measurement_head, features);
  pred.bust_mm = meas[0];
  pred.waist_mm = meas[1];
  pred.hip_mm = meas[2];
  pred.mesh = deform(bundle.body, pred.beta);
  return pred;
}

std::string to_csv(const EvalReport& r) {
  std::string out = "metric,value\n";
  auto row = [&out](const char* name, double v) {
    out += std::string(name) + "," + fmt_fixed(v, 6) + "\n";
  };
  out += "samples," + std::to_string(r.sample_count) + "\n";
  row("mae_bust_mm", r.mae_bust_mm);
  row("mae_waist_mm", r.mae_waist_mm);
  row("mae_hip_mm", r.mae_hip_mm);
  row("mae_bust_pca_mm", r.mae_bust_pca_mm);
  row("mae_waist_pca_mm", r.mae_waist_pca_mm);
  row("mae_hip_pca_mm", r.mae_hip_pca_mm);
  row("mae_bust_baseline_mm", r.mae_bust_baseline_mm);
  row("mae_waist_baseline_mm", r.mae_waist_baseline_mm);
  row("mae_hip_baseline_mm", r.mae_hip_baseline_mm);
  row("per_vertex_error_mm", r.per_vertex_error_mm);
  row("per_vertex_error_baseline_mm", r.per_vertex_error_baseline_mm);
  row("pixel_accuracy_front_ae", r.pixel_accuracy_front_ae);
  row("pixel_accuracy_side_ae", r.pixel_accuracy_side_ae);
  row("pixel_accuracy_front_pca", r.pixel_accuracy_front_pca);
  row("pixel_accuracy_side_pca", r.pixel_accuracy_side_pca);
  return out;
}

std::string to_summary(const EvalReport& r) {
  std::ostringstream out;
  out << "evaluated " << r.sample_count << " subjects\n"
      << "measurement MAE (mm):      bust " << fmt_fixed(r.mae_bust_mm, 2) << ", waist "
      << fmt_fixed(r.mae_waist_mm, 2) << ", hip " << fmt_fixed(r.mae_hip_mm, 2) << "\n"
      << "  with PCA features:       bust " << fmt_fixed(r.mae_bust_pca_mm, 2) << ", waist "
      << fmt_fixed(r.mae_waist_pca_mm, 2) << ", hip " << fmt_fixed(r.mae_hip_pca_mm, 2) << "\n"
      << "  mean-predictor baseline: bust " << fmt_fixed(r.mae_bust_baseline_mm, 2) << ", waist "
      << fmt_fixed(r.mae_waist_baseline_mm, 2) << ", hip " << fmt_fixed(r.mae_hip_baseline_mm, 2)
      << "\n"
      << "per-vertex mean error: " << fmt_fixed(r.per_vertex_error_mm, 3) << " mm (baseline "
      << fmt_fixed(r.per_vertex_error_baseline_mm, 3) << " mm)\n"
      << "reconstruction accuracy AE:  front " << fmt_fixed(r.pixel_accuracy_front_ae, 4)
      << ", side " << fmt_fixed(r.pixel_accuracy_side_ae, 4) << "\n"
      << "reconstruction accuracy PCA: front " << fmt_fixed(r.pixel_accuracy_front_pca, 4)
      << ", side " << fmt_fixed(r.pixel_accuracy_side_pca, 4) << "\n";
  return out.str();
}

EvalReport evaluate(const PipelineBundle& bundle, const DatasetManifest& manifest,
                    const std::string& split, const std::filesystem::path& out_dir,
                    const PredictorOverride& override_fn) {
  const auto subjects = manifest.split_subjects(split);
  if (subjects.empty()) throw std::invalid_argument("evaluate: split '" + split + "' is empty");
  const auto train_subjects = manifest.split_subjects("train");
  if (train_subjects.empty()) {
    throw std::invalid_argument("evaluate: train split is empty (needed for baselines)");
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  // mean-predictor baselines from the train split
  double mean_bust = 0, mean_waist = 0, mean_hip = 0;
  ShapeParams mean_beta = ShapeParams::Zero();
  for (const SubjectRecord* s : train_subjects) {
    mean_bust += s->measurements.bust_mm;
    mean_waist += s->measurements.waist_mm;
    mean_hip += s->measurements.hip_mm;
    mean_beta += read_beta(manifest.root / s->beta_path);
  }
  const double nt = static_cast<double>(train_subjects.size());
  mean_bust /= nt, mean_waist /= nt, mean_hip /= nt;
  mean_beta /= nt;
  const TriMesh baseline_mesh = deform(bundle.body, mean_beta);

  EvalReport r;
  r.sample_count = static_cast<int>(subjects.size());
  for (const SubjectRecord* sp : subjects) {
    const SubjectRecord& s = *sp;
    const Silhouette front = load_silhouette(manifest.root / s.front_path);
    const Silhouette side = load_silhouette(manifest.root / s.side_path);
    const ShapeParams true_beta = read_beta(manifest.root / s.beta_path);
    const double h = s.measurements.height_mm, w = s.measurements.weight_kg;

    PredictedTargets pred;
    if (override_fn) {
      pred = override_fn(s, true_beta);
    } else {
      const FeatureVector features =
          build_features(bundle.ae.encode(front), bundle.ae.encode(side), h, w);
      pred.beta = krr_predict(bundle.shape_head, features);
      const Eigen::VectorXd meas = krr_predict(bundle.measurement_head, features);
      pred.bust_mm = meas[0];
      pred.waist_mm = meas[1];
      pred.hip_mm = meas[2];
    }
    r.mae_bust_mm += std::abs(pred.bust_mm - s.measurements.bust_mm);
    r.mae_waist_mm += std::abs(pred.waist_mm - s.measurements.waist_mm);
    r.mae_hip_mm += std::abs(pred.hip_mm - s.measurements.hip_mm);
    r.mae_bust_baseline_mm += std::abs(mean_bust - s.measurements.bust_mm);
    r.mae_waist_baseline_mm += std::abs(mean_waist - s.measurements.waist_mm);
    r.mae_hip_baseline_mm += std::abs(mean_hip - s.measurements.hip_mm);

    // PCA-feature regressor (Table-style comparison)
    {
      const FeatureVector features =
          build_features(pca_encode(bundle.pca, front), pca_encode(bundle.pca, side), h, w);
      const Eigen::VectorXd meas = krr_predict(bundle.measurement_head_pca, features);
      r.mae_bust_pca_mm += std::abs(meas[0] - s.measurements.bust_mm);
      r.mae_waist_pca_mm += std::abs(meas[1] - s.measurements.waist_mm);
      r.mae_hip_pca_mm += std::abs(meas[2] - s.measurements.hip_mm);
    }

    const TriMesh truth_mesh = deform(bundle.body, true_beta);
    const VertexError err = per_vertex_error(deform(bundle.body, pred.beta), truth_mesh);
    r.per_vertex_error_mm += err.mean_mm;
    r.per_vertex_error_baseline_mm += per_vertex_error(baseline_mesh, truth_mesh).mean_mm;
    if (!out_dir.empty()) save_scalars(err.per_vertex_mm, out_dir / (s.id + "_heat.txt"));

    // reconstruction accuracy per view (AE vs PCA protocol)
    r.pixel_accuracy_front_ae += pixel_accuracy(bundle.ae.decode(bundle.ae.encode(front)), front);
    r.pixel_accuracy_side_ae += pixel_accuracy(bundle.ae.decode(bundle.ae.encode(side)), side);
    r.pixel_accuracy_front_pca +=
        pixel_accuracy(pca_decode(bundle.pca, pca_encode(bundle.pca, front)), front);
    r.pixel_accuracy_side_pca +=
        pixel_accuracy(pca_decode(bundle.pca, pca_encode(bundle.pca, side)), side);
  }

  const double n = static_cast<double>(subjects.size());
  for (double* v : {&r.mae_bust_mm, &r.mae_waist_mm, &r.mae_hip_mm, &r.mae_bust_pca_mm,
                    &r.mae_waist_pca_mm, &r.mae_hip_pca_mm, &r.mae_bust_baseline_mm,
                    &r.mae_waist_baseline_mm, &r.mae_hip_baseline_mm, &r.per_vertex_error_mm,
                    &r.per_vertex_error_baseline_mm, &r.pixel_accuracy_front_ae,
                    &r.pixel_accuracy_side_ae, &r.pixel_accuracy_front_pca,
                    &r.pixel_accuracy_side_pca}) {
    *v /= n;
  }

  if (!out_dir.empty()) {
    std::ofstream csv(out_dir / "report.csv");
    csv << to_csv(r);
    std::ofstream txt(out_dir / "report.txt");
    txt << to_summary(r);
  }
  return r;
}

}  // namespace s2s
