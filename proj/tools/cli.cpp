#include "cli.hpp"

#include "usmesh/encoder.hpp"
#include "usmesh/error.hpp"
#include "usmesh/harness.hpp"
#include "usmesh/infer.hpp"
#include "usmesh/mesh.hpp"
#include "usmesh/metrics.hpp"
#include "usmesh/nets/net.hpp"
#include "usmesh/surface.hpp"
#include "usmesh/synth.hpp"
#include "usmesh/train.hpp"
#include "usmesh/volume.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

namespace usmesh::cli {
namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << "\n";
}

EncodingMode encoding_from(const std::string& name) {
  if (name == "binary") return EncodingMode::BinaryDilated;
  if (name == "soft") return EncodingMode::SoftEdged;
  if (name == "solid") return EncodingMode::Solid;
  throw ArgumentError("unknown encoding mode '" + name + "'");
}

OutputMapping mapping_from(const std::string& name) {
  if (name == "raw") return OutputMapping::Raw;
  if (name == "unit") return OutputMapping::TanhToUnit;
  throw ArgumentError("unknown output mapping '" + name + "'");
}

// Settings shared by `train` and `trial`: config file, then --set pairs, then
// dedicated flags.
struct RunFlags {
  std::string config;
  std::string data;
  std::vector<std::string> sets;
  std::optional<std::string> arch, loss;
  std::optional<int> nf, epochs, batch_size;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "flat key = value settings file");
    app->add_option("--data", data, "folder with vol<id>.mhd and ref<id>.ply");
    app->add_option("--set", sets, "extra key=value settings");
    app->add_option("--arch", arch);
    app->add_option("--loss", loss);
    app->add_option("--nf", nf);
    app->add_option("--epochs", epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--lr", lr);
    app->add_option("--seed", seed);
  }

  RunConfig resolve() {
    RunConfig cfg;
    if (!config.empty()) {
      for (const auto& [k, v] : parse_key_values(read_text(config))) {
        if (k == "data") {
          if (data.empty()) data = v;
        } else {
          apply_setting(cfg, k, v);
        }
      }
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + kv + "'");
      apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (arch) apply_setting(cfg, "arch", *arch);
    if (loss) apply_setting(cfg, "loss", *loss);
    if (nf) cfg.net.nf = *nf;
    if (epochs) cfg.max_epochs = *epochs;
    if (batch_size) cfg.batch_size = *batch_size;
    if (lr) cfg.lr0 = *lr;
    if (seed) cfg.seed = *seed;
    if (data.empty()) throw ArgumentError("no data folder given (--data or `data` in the config)");
    return cfg;
  }
};

int cmd_encode(const std::string& mesh_path, const std::string& volume_path, const std::string& mode, int radius,
               int ir, const std::string& out_path, std::ostream& out, std::ostream& err) {
  const Mesh mesh = read_ply_file(mesh_path);
  const Volume volume = preprocess(read_volume(volume_path), ir);
  const LabelVolume label = encode_mesh(mesh, volume, encoding_from(mode), radius);
  print_warnings(label.warnings, err);
  write_unit_volume(out_path, label.data, volume.spacing);
  out << "wrote " << out_path << "\n";
  return 0;
}

int cmd_train(RunFlags& flags, const std::string& out_path, const std::string& log_path, std::ostream& out,
              std::ostream& err) {
  const RunConfig cfg = flags.resolve();
  const TrialData data = load_dataset(flags.data);
  std::vector<std::string> warnings;
  const auto prepared = prepare_volumes(cfg, data, &warnings);
  const TrainingSet set = make_training_set(cfg, prepared, &warnings);
  print_warnings(warnings, err);

  nn::Net<float> net(net_spec_for(cfg, prepared), cfg.seed);
  TrainConfig tc = to_train_config(cfg);
  tc.checkpoint = out_path;
  tc.progress_log = log_path.empty() ? out_path + ".log" : log_path;
  std::filesystem::remove(tc.progress_log);
  const TrainReport report = fit(net, set.train, set.val, tc);
  out << "run " << tc.run_tag << "\n"
      << "stopped at epoch " << report.stopped_epoch << ", best epoch " << report.best_epoch
      << ", best val loss " << report.best_val_loss << "\n"
      << "wrote " << out_path << "\n";
  return 0;
}

struct PredictFlags {
  std::string ckpt, volume, agg = "mean", mapping = "raw", out, prob;
  std::optional<double> threshold, fraction;
  int ir = 1;
  int batch_size = 8;
  std::optional<std::string> arch;
  std::optional<int> nf;
  std::uint64_t seed = 0;
};

int cmd_predict(const PredictFlags& f, std::ostream& out, std::ostream& err) {
  if (f.threshold && f.fraction) throw ArgumentError("give either --threshold or --fraction");
  nn::NetSpec spec = nn::read_checkpoint_spec(f.ckpt);
  if (f.arch) spec.arch = nn::parse_arch(*f.arch);
  if (f.nf) spec.nf = *f.nf;
  nn::Net<float> net(spec, f.seed);
  nn::load_checkpoint(f.ckpt, net);

  const Volume volume = preprocess(read_volume(f.volume), f.ir);
  const Grid3<float> prob = predict_volume(net, volume, parse_aggregation(f.agg), f.batch_size, mapping_from(f.mapping));
  if (!f.prob.empty()) write_unit_volume(f.prob, prob, volume.spacing);

  const ThresholdRule rule = f.fraction ? ThresholdRule::fraction(*f.fraction)
                                        : ThresholdRule::absolute(f.threshold.value_or(0.5));
  const ResolvedThreshold t = resolve_threshold(prob, rule);
  print_warnings(t.warnings, err);
  const PointCloud cloud = decode_points(prob, t.t, volume.spacing);
  if (cloud.empty()) err << "warning: no voxel reaches threshold " << t.t << "\n";
  write_ply_file(f.out, to_mesh(cloud));
  out << "threshold " << t.t << ", " << cloud.size() << " points\n"
      << "wrote " << f.out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& pred, const std::string& ref, int v, std::uint64_t seed, int volume_id,
                 std::optional<double> threshold, std::ostream& out) {
  const PointCloud s = to_cloud(read_ply_file(pred));
  const PointCloud t = to_cloud(read_ply_file(ref));
  const double cd = v > 0 ? chamfer_sampled(s, t, v, seed).value : chamfer_exact(s, t);
  out << "volume_id,threshold,cd\n" << volume_id << ",";
  if (threshold) out << *threshold;
  else out << "-";
  out << "," << std::fixed << std::setprecision(6) << cd << "\n";
  return 0;
}

int cmd_mesh(const std::string& prob_path, double iso, const std::string& out_path, bool ascii,
             const std::string& screenshot, std::ostream& out, std::ostream& err) {
  const Volume prob = read_unit_volume(prob_path);
  const Mesh mesh = marching_cubes(prob.data, iso, prob.spacing);
  if (mesh.face_count() == 0) err << "warning: iso " << iso << " gives an empty surface\n";
  write_ply_file(out_path, mesh, ascii);
  out << mesh.vertex_count() << " vertices, " << mesh.face_count() << " faces\n"
      << "wrote " << out_path << "\n";
  if (!screenshot.empty()) {
    std::vector<std::string> warnings;
    if (render_screenshot(mesh, screenshot, {}, &warnings)) out << "wrote " << screenshot << "\n";
    print_warnings(warnings, err);
  }
  return 0;
}

int cmd_trial(RunFlags& flags, const std::string& grid, const std::string& work, const std::string& report_prefix,
              std::ostream& out, std::ostream& err) {
  const RunConfig base = flags.resolve();
  const GridAxes axes = grid.empty() ? GridAxes{} : parse_grid(read_text(grid));
  const auto configs = expand_grid(base, axes);
  const TrialData data = load_dataset(flags.data);
  TrialOptions options;
  options.work_dir = work;
  options.log = &err;
  std::vector<TrialRecord> records;
  for (const auto& cfg : configs) {
    records.push_back(run_trial(cfg, data, options));
    print_warnings(records.back().warnings, err);
  }
  const Report r = report(records);
  out << r.text;
  if (!report_prefix.empty()) {
    std::ofstream(report_prefix + ".txt") << r.text;
    std::ofstream(report_prefix + ".csv") << r.csv;
  }
  return 0;
}

int cmd_synth(const std::string& kind, const std::string& dir, int count, const PipeOptions& options,
              std::ostream& out) {
  if (kind != "pipe") throw ArgumentError("unknown synthetic kind '" + kind + "'");
  write_pipe_dataset(dir, count, options);
  out << "wrote " << count << " volumes to " << dir << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ultrasound volume to mesh pipeline", "usmesh"};
  app.require_subcommand(1);

  auto* encode = app.add_subcommand("encode", "encode a mesh into a label volume");
  std::string mesh_path, volume_path, mode = "soft", encode_out;
  int radius = 2, ir = 1;
  encode->add_option("--mesh", mesh_path)->required();
  encode->add_option("--volume", volume_path)->required();
  encode->add_option("--mode", mode)->check(CLI::IsMember({"binary", "soft", "solid"}));
  encode->add_option("--radius", radius);
  encode->add_option("--ir", ir, "in-plane down-sampling factor");
  encode->add_option("--out", encode_out)->required();

  auto* train = app.add_subcommand("train", "train a network");
  RunFlags train_flags;
  std::string train_out, train_log;
  train_flags.attach(train);
  train->add_option("--out", train_out, "checkpoint path")->required();
  train->add_option("--log", train_log, "progress log (default <out>.log)");

  auto* predict = app.add_subcommand("predict", "predict a point cloud for a volume");
  PredictFlags pf;
  predict->add_option("--ckpt", pf.ckpt)->required();
  predict->add_option("--volume", pf.volume)->required();
  predict->add_option("--agg", pf.agg)->check(CLI::IsMember({"mean", "max", "single"}));
  predict->add_option("--threshold", pf.threshold);
  predict->add_option("--fraction", pf.fraction);
  predict->add_option("--mapping", pf.mapping)->check(CLI::IsMember({"raw", "unit"}));
  predict->add_option("--ir", pf.ir);
  predict->add_option("--batch-size", pf.batch_size);
  predict->add_option("--arch", pf.arch, "expected architecture");
  predict->add_option("--nf", pf.nf, "expected base filter count");
  predict->add_option("--prob", pf.prob, "also write the probability volume");
  predict->add_option("--seed", pf.seed);
  predict->add_option("--out", pf.out)->required();

  auto* evaluate = app.add_subcommand("evaluate", "Chamfer distance between two clouds");
  std::string pred_path, ref_path;
  int v = 10000, volume_id = 0;
  std::uint64_t eval_seed = 0;
  std::optional<double> eval_threshold;
  evaluate->add_option("--pred", pred_path)->required();
  evaluate->add_option("--ref", ref_path)->required();
  evaluate->add_option("--v", v, "points per cloud; 0 uses every point");
  evaluate->add_option("--seed", eval_seed);
  evaluate->add_option("--volume-id", volume_id);
  evaluate->add_option("--threshold", eval_threshold, "threshold label for the output row");

  auto* mesh = app.add_subcommand("mesh", "extract an isosurface from a probability volume");
  std::string prob_path, mesh_out, screenshot;
  double iso = 0.5;
  bool ascii = false;
  mesh->add_option("--prob", prob_path)->required();
  mesh->add_option("--iso", iso);
  mesh->add_option("--out", mesh_out)->required();
  mesh->add_flag("--ascii", ascii);
  mesh->add_option("--screenshot", screenshot, "PNG preview");
  std::uint64_t mesh_seed = 0;
  mesh->add_option("--seed", mesh_seed);

  auto* trial = app.add_subcommand("trial", "run an ablation grid");
  RunFlags trial_flags;
  std::string grid, work, report_prefix;
  trial_flags.attach(trial);
  trial->add_option("--grid", grid, "axes file: key = v1, v2, ...");
  trial->add_option("--work", work, "checkpoint folder");
  trial->add_option("--report", report_prefix, "write <prefix>.txt and <prefix>.csv");

  auto* synth = app.add_subcommand("synth", "generate a synthetic data set");
  std::string kind = "pipe", synth_out;
  int count = 3;
  PipeOptions pipe;
  synth->add_option("--kind", kind);
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--count", count);
  synth->add_option("--seed", pipe.seed);
  synth->add_option("--noise", pipe.noise);
  synth->add_option("--wall", pipe.wall);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  try {
    if (*encode) return cmd_encode(mesh_path, volume_path, mode, radius, ir, encode_out, out, err);
    if (*train) return cmd_train(train_flags, train_out, train_log, out, err);
    if (*predict) return cmd_predict(pf, out, err);
    if (*evaluate) return cmd_evaluate(pred_path, ref_path, v, eval_seed, volume_id, eval_threshold, out);
    if (*mesh) return cmd_mesh(prob_path, iso, mesh_out, ascii, screenshot, out, err);
    if (*trial) return cmd_trial(trial_flags, grid, work, report_prefix, out, err);
    if (*synth) return cmd_synth(kind, synth_out, count, pipe, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace usmesh::cli
