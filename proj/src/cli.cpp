#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "s2s/io_util.hpp"
#include "s2s/pipeline.hpp"

namespace s2s {

namespace {

void write_config_snapshot(CLI::App* sub, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "effective_config.txt");
  out << sub->config_to_str(/*default_also=*/true, /*write_description=*/false);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"s2s: 3D body shape and bust/waist/hip estimation from two-view silhouettes"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "synthesize a silhouette dataset with labels");
  SynthesisConfig syn;
  ProceduralBodyConfig body_cfg;
  std::string gen_out;
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--count", syn.count, "number of subjects")->capture_default_str();
  gen->add_option("--seed", syn.seed, "shape sampling seed")->capture_default_str();
  gen->add_option("--split-seed", syn.split_seed, "train/val/test shuffle seed")->capture_default_str();
  gen->add_option("--resolution", syn.resolution, "silhouette resolution (multiple of 32)")->capture_default_str();
  gen->add_option("--stddev", syn.shape_stddev, "shape coefficient stddev")->capture_default_str();
  gen->add_option("--margin", syn.margin_fraction, "frame margin fraction")->capture_default_str();
  gen->add_option("--train-frac", syn.train_fraction, "train split fraction")->capture_default_str();
  gen->add_option("--val-frac", syn.val_fraction, "validation split fraction")->capture_default_str();
  gen->add_option("--test-frac", syn.test_fraction, "test split fraction")->capture_default_str();
  gen->add_option("--body-height", body_cfg.height, "template body height in meters")->capture_default_str();
  gen->add_option("--girth-scale", body_cfg.girth_scale, "template girth multiplier")->capture_default_str();
  gen->add_option("--segments", body_cfg.radial_segments, "radial tessellation")->capture_default_str();
  gen->add_option("--rings", body_cfg.rings, "vertical tessellation")->capture_default_str();
  gen->set_config("--config", "", "flat key=value config file; flags override");

  // measure
  auto* measure = app.add_subcommand("measure", "measure a mesh: height, weight, bust/waist/hip");
  std::string measure_mesh, measure_csv_id;
  SliceSpec measure_spec;
  double measure_density = 0.985;
  measure->add_option("--mesh", measure_mesh, "mesh file (v/f text format)")->required();
  measure->add_option("--spacing", measure_spec.cut_spacing, "height cut spacing in meters")->capture_default_str();
  measure->add_option("--density", measure_density, "body density in kg/L")->capture_default_str();
  measure->add_option("--csv-id", measure_csv_id, "also print one CSV row with this id");
  measure->set_config("--config", "", "flat key=value config file; flags override");

  // render
  auto* render = app.add_subcommand("render", "rasterize a mesh to a binary silhouette");
  std::string render_mesh, render_out;
  ViewSpec render_view;
  int render_width = 64, render_height = 64;
  render->add_option("--mesh", render_mesh, "mesh file")->required();
  render->add_option("--out", render_out, "output PGM path")->required();
  render->add_option("--rotation", render_view.rotation_deg, "view rotation in degrees")->capture_default_str();
  render->add_option("--width", render_width, "image width")->capture_default_str();
  render->add_option("--height", render_height, "image height")->capture_default_str();
  render->add_option("--margin", render_view.margin_fraction, "frame margin fraction")->capture_default_str();
  render->set_config("--config", "", "flat key=value config file; flags override");

  // train
  auto* train = app.add_subcommand("train", "train the autoencoder, PCA, and regression heads");
  std::string train_data, train_out;
  TrainConfig tcfg;
  KrrHyperparams hyper;
  train->add_option("--data", train_data, "dataset directory or manifest.csv")->required();
  train->add_option("--out", train_out, "output bundle directory")->required();
  train->add_option("--epochs", tcfg.epochs, "training epochs")->capture_default_str();
  train->add_option("--batch", tcfg.batch_size, "batch size in pairs")->capture_default_str();
  train->add_option("--lr", tcfg.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--seed", tcfg.seed, "initialization/shuffle seed")->capture_default_str();
  train->add_option("--degree", hyper.kernel.degree, "polynomial kernel degree")->capture_default_str();
  train->add_option("--kernel-scale", hyper.kernel.scale, "kernel inner-product scale")->capture_default_str();
  train->add_option("--kernel-offset", hyper.kernel.offset, "kernel offset constant")->capture_default_str();
  train->add_option("--lambda", hyper.lambda, "ridge regularization constant")->capture_default_str();
  train->set_config("--config", "", "flat key=value config file; flags override");

  // predict
  auto* predict = app.add_subcommand("predict", "estimate shape and measurements for one subject");
  std::string pred_bundle, pred_front, pred_side, pred_out_mesh;
  double pred_height = 0.0, pred_weight = 0.0;
  predict->add_option("--bundle", pred_bundle, "trained bundle directory")->required();
  predict->add_option("--front", pred_front, "front-view silhouette (PGM)")->required();
  predict->add_option("--side", pred_side, "side-view silhouette (PGM)")->required();
  predict->add_option("--height", pred_height, "subject height in mm")->required();
  predict->add_option("--weight", pred_weight, "subject weight in kg")->required();
  predict->add_option("--out-mesh", pred_out_mesh, "write the reconstructed mesh here");
  predict->set_config("--config", "", "flat key=value config file; flags override");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a bundle on a dataset split");
  std::string eval_data, eval_bundle, eval_split = "val", eval_out;
  eval->add_option("--data", eval_data, "dataset directory or manifest.csv")->required();
  eval->add_option("--bundle", eval_bundle, "trained bundle directory")->required();
  eval->add_option("--split", eval_split, "split to evaluate: train|val|test")->capture_default_str();
  eval->add_option("--out", eval_out, "directory for report.csv/report.txt and heatmaps");
  eval->set_config("--config", "", "flat key=value config file; flags override");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("s2s");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the error message
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      const BodyModel model = make_procedural_model(body_cfg);
      synthesize_dataset(model, syn, gen_out);
      write_config_snapshot(gen, gen_out);
      std::cout << "wrote dataset with " << syn.count << " subjects to " << gen_out << "\n";
    } else if (measure->parsed()) {
      const TriMesh mesh = load_mesh(measure_mesh);
      const Measurements m = measure_all(mesh, measure_spec, measure_density);
      std::cout << to_key_value(m);
      if (!measure_csv_id.empty()) std::cout << to_csv_row(measure_csv_id, m) << "\n";
    } else if (render->parsed()) {
      const TriMesh mesh = load_mesh(render_mesh);
      save_silhouette(rasterize(mesh, render_view, render_width, render_height), render_out);
      std::cout << "wrote " << render_out << "\n";
    } else if (train->parsed()) {
      const DatasetManifest manifest = load_manifest(train_data);
      train_all(manifest, tcfg, hyper, train_out);
      write_config_snapshot(train, train_out);
      std::cout << "wrote bundle to " << train_out << "\n";
    } else if (predict->parsed()) {
      const PipelineBundle bundle = load_bundle(pred_bundle);
      const Silhouette front = load_silhouette(pred_front);
      const Silhouette side = load_silhouette(pred_side);
      const SubjectPrediction p = predict_subject(bundle, front, side, pred_height, pred_weight);
      std::cout << "bust_mm=" << fmt_fixed(p.bust_mm, 3) << "\n"
                << "waist_mm=" << fmt_fixed(p.waist_mm, 3) << "\n"
                << "hip_mm=" << fmt_fixed(p.hip_mm, 3) << "\n";
      std::cout << "beta=";
      for (int k = 0; k < kShapeDims; ++k) {
        std::cout << fmt_fixed(p.beta[k], 6) << (k + 1 < kShapeDims ? " " : "\n");
      }
      if (!pred_out_mesh.empty()) {
        save_mesh(p.mesh, pred_out_mesh);
        std::cout << "wrote " << pred_out_mesh << "\n";
      }
    } else if (eval->parsed()) {
      const DatasetManifest manifest = load_manifest(eval_data);
      const PipelineBundle bundle = load_bundle(eval_bundle);
      const EvalReport report = evaluate(bundle, manifest, eval_split, eval_out);
      if (!eval_out.empty()) write_config_snapshot(eval, eval_out);
      std::cout << to_summary(report);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace s2s
