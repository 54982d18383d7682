#include "usmesh/harness.hpp"

#include "usmesh/error.hpp"
#include "usmesh/meta_header.hpp"
#include "usmesh/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

namespace usmesh {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
    throw ParseError("bad number for '" + key + "': '" + s + "'");
  return v;
}

template <typename T>
T to_integer(const std::string& key, const std::string& s) {
  T v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
    throw ParseError("bad integer for '" + key + "': '" + s + "'");
  return v;
}

int to_int(const std::string& key, const std::string& s) { return to_integer<int>(key, s); }

std::uint64_t to_u64(const std::string& key, const std::string& s) { return to_integer<std::uint64_t>(key, s); }

bool to_bool(const std::string& key, const std::string& s) {
  const std::string v = lower(s);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ParseError("bad boolean for '" + key + "': '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '+' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& f, const char* sep = "+") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + f(items[i]);
  return out;
}

// Tag spellings drop underscores so tokens stay `_`-separable.
std::string tag_word(const std::string& s) {
  std::string out;
  for (char c : s)
    if (c != '_') out += c;
  return out;
}

nn::Arch tag_arch(const std::string& v) {
  for (nn::Arch a : {nn::Arch::UNet, nn::Arch::AttUNet, nn::Arch::R2UNet, nn::Arch::SEUNet, nn::Arch::UNetPP,
                     nn::Arch::WNet})
    if (tag_word(nn::to_string(a)) == v || nn::to_string(a) == v) return a;
  throw ArgumentError("unknown architecture '" + v + "'");
}

nn::Activation tag_activation(const std::string& v) {
  for (nn::Activation a : {nn::Activation::Sigmoid, nn::Activation::HardSigmoid, nn::Activation::Tanh,
                           nn::Activation::Linear})
    if (tag_word(nn::to_string(a)) == v || nn::to_string(a) == v) return a;
  throw ArgumentError("unknown output activation '" + v + "'");
}

EncodingMode parse_encoding(const std::string& v) {
  const std::string s = lower(v);
  if (s == "0" || s == "binary" || s == "binary_dilated") return EncodingMode::BinaryDilated;
  if (s == "1" || s == "soft" || s == "soft_edged" || s == "saturated") return EncodingMode::SoftEdged;
  if (s == "2" || s == "solid") return EncodingMode::Solid;
  throw ArgumentError("unknown encoding mode '" + v + "'");
}

SelectionScheme parse_selection(const std::string& v) {
  const std::string s = lower(v);
  if (s == "1" || s == "se1") return SelectionScheme::SE1;
  if (s == "2" || s == "se2") return SelectionScheme::SE2;
  throw ArgumentError("unknown selection scheme '" + v + "'");
}

std::vector<int> to_ids(const std::string& key, const std::string& v) {
  std::vector<int> ids;
  for (const auto& item : split_list(v)) ids.push_back(to_int(key, item));
  return ids;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

}  // namespace

std::string run_tag(const RunConfig& c) {
  std::vector<std::string> t;
  auto add = [&t](const char* key, const std::string& value) { t.push_back(key + value); };
  add("AR", tag_word(nn::to_string(c.net.arch)));
  add("NF", std::to_string(c.net.nf));
  add("AC", tag_word(nn::to_string(c.net.ac)));
  add("NR", std::to_string(c.net.nr));
  add("NC", std::to_string(c.net.nc));
  add("DP", std::to_string(c.net.depth));
  add("DS", c.net.deep_supervision ? "1" : "0");
  add("LS", to_string(c.loss));
  add("LR", fmt(c.lr0));
  add("SC", to_string(c.schedule));
  add("BS", std::to_string(c.batch_size));
  add("EP", std::to_string(c.max_epochs));
  add("PA", std::to_string(c.patience));
  add("SD", std::to_string(c.seed));
  add("AU", c.augment.enabled ? "1" : "0");
  add("TX", std::to_string(c.augment.max_translation));
  add("RO", fmt(c.augment.max_rotation));
  add("MX", c.augment.mirror_x ? "1" : "0");
  add("MY", c.augment.mirror_y ? "1" : "0");
  add("CM", c.augment.combine == CombineMode::Exclusive ? "x" : "s");
  add("RT", std::to_string(c.augment.reorientation_start_epoch));
  add("TI", c.augment.target_interpolation == Interpolation::Bilinear ? "b" : "n");
  add("SE", c.selection == SelectionScheme::SE1 ? "1" : "2");
  add("IR", std::to_string(c.ir));
  add("EN", std::to_string(static_cast<int>(c.en)));
  add("ER", std::to_string(c.radius));
  add("AG", std::to_string(static_cast<int>(c.agg)));
  add("TK", c.threshold_kind == ThresholdRule::Kind::Absolute ? "a" : "f");
  add("TS", join(c.thresholds, fmt));
  add("OM", c.mapping == OutputMapping::Raw ? "raw" : "unit");
  add("CV", std::to_string(c.chamfer_v));
  add("TR", join(c.train_ids, [](int i) { return std::to_string(i); }));
  add("VA", std::to_string(c.val_id));
  add("TE", std::to_string(c.test_id));
  for (const auto& e : c.extra) t.push_back(e);
  return join(t, [](const std::string& s) { return s; }, "_");
}

RunConfig parse_run_tag(const std::string& tag) {
  RunConfig c;
  c.extra.clear();
  std::istringstream in(tag);
  std::string token;
  while (std::getline(in, token, '_')) {
    if (token.empty()) continue;
    std::size_t k = 0;
    while (k < token.size() && std::isupper(static_cast<unsigned char>(token[k]))) ++k;
    const std::string key = token.substr(0, k), v = token.substr(k);
    if (key == "AR") c.net.arch = tag_arch(v);
    else if (key == "NF") c.net.nf = to_int(key, v);
    else if (key == "AC") c.net.ac = tag_activation(v);
    else if (key == "NR") c.net.nr = to_int(key, v);
    else if (key == "NC") c.net.nc = to_int(key, v);
    else if (key == "DP") c.net.depth = to_int(key, v);
    else if (key == "DS") c.net.deep_supervision = to_bool(key, v);
    else if (key == "LS") c.loss = parse_loss(v);
    else if (key == "LR") c.lr0 = to_double(key, v);
    else if (key == "SC") c.schedule = parse_schedule(v);
    else if (key == "BS") c.batch_size = to_int(key, v);
    else if (key == "EP") c.max_epochs = to_int(key, v);
    else if (key == "PA") c.patience = to_int(key, v);
    else if (key == "SD") c.seed = to_u64(key, v);
    else if (key == "AU") c.augment.enabled = to_bool(key, v);
    else if (key == "TX") c.augment.max_translation = to_int(key, v);
    else if (key == "RO") c.augment.max_rotation = to_double(key, v);
    else if (key == "MX") c.augment.mirror_x = to_bool(key, v);
    else if (key == "MY") c.augment.mirror_y = to_bool(key, v);
    else if (key == "CM") c.augment.combine = v == "s" ? CombineMode::Simultaneous : CombineMode::Exclusive;
    else if (key == "RT") c.augment.reorientation_start_epoch = to_int(key, v);
    else if (key == "TI") c.augment.target_interpolation = v == "n" ? Interpolation::Nearest : Interpolation::Bilinear;
    else if (key == "SE") c.selection = parse_selection(v);
    else if (key == "IR") c.ir = to_int(key, v);
    else if (key == "EN") c.en = parse_encoding(v);
    else if (key == "ER") c.radius = to_int(key, v);
    else if (key == "AG") c.agg = parse_aggregation(v);
    else if (key == "TK") c.threshold_kind = v == "f" ? ThresholdRule::Kind::FractionOfMax : ThresholdRule::Kind::Absolute;
    else if (key == "TS") c.thresholds = to_doubles(key, v);
    else if (key == "OM") c.mapping = v == "unit" ? OutputMapping::TanhToUnit : OutputMapping::Raw;
    else if (key == "CV") c.chamfer_v = to_int(key, v);
    else if (key == "TR") c.train_ids = to_ids(key, v);
    else if (key == "VA") c.val_id = to_int(key, v);
    else if (key == "TE") c.test_id = to_int(key, v);
    else c.extra.push_back(token);
  }
  return c;
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = lower(trim(raw_key));
  const std::string v = trim(raw_value);
  if (key == "arch") c.net.arch = tag_arch(lower(v));
  else if (key == "nf") c.net.nf = to_int(key, v);
  else if (key == "ac") c.net.ac = tag_activation(lower(v));
  else if (key == "nr") c.net.nr = to_int(key, v);
  else if (key == "nc") c.net.nc = to_int(key, v);
  else if (key == "depth") c.net.depth = to_int(key, v);
  else if (key == "deep_supervision") c.net.deep_supervision = to_bool(key, v);
  else if (key == "loss") c.loss = parse_loss(lower(v));
  else if (key == "lr0") c.lr0 = to_double(key, v);
  else if (key == "schedule") c.schedule = parse_schedule(lower(v));
  else if (key == "batch_size") c.batch_size = to_int(key, v);
  else if (key == "max_epochs") c.max_epochs = to_int(key, v);
  else if (key == "patience") c.patience = to_int(key, v);
  else if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "augment") c.augment.enabled = to_bool(key, v);
  else if (key == "max_translation") c.augment.max_translation = to_int(key, v);
  else if (key == "max_rotation") c.augment.max_rotation = to_double(key, v);
  else if (key == "mirror_x") c.augment.mirror_x = to_bool(key, v);
  else if (key == "mirror_y") c.augment.mirror_y = to_bool(key, v);
  else if (key == "combine") {
    const std::string m = lower(v);
    if (m == "exclusive") c.augment.combine = CombineMode::Exclusive;
    else if (m == "simultaneous") c.augment.combine = CombineMode::Simultaneous;
    else throw ArgumentError("unknown combine mode '" + v + "'");
  } else if (key == "rt" || key == "reorientation_start_epoch") {
    c.augment.reorientation_start_epoch = to_int(key, v);
  } else if (key == "target_interpolation") {
    const std::string m = lower(v);
    if (m == "bilinear") c.augment.target_interpolation = Interpolation::Bilinear;
    else if (m == "nearest") c.augment.target_interpolation = Interpolation::Nearest;
    else throw ArgumentError("unknown interpolation '" + v + "'");
  } else if (key == "selection" || key == "se") {
    c.selection = parse_selection(v);
  } else if (key == "ir") {
    c.ir = to_int(key, v);
  } else if (key == "en") {
    c.en = parse_encoding(v);
  } else if (key == "radius") {
    c.radius = to_int(key, v);
  } else if (key == "agg" || key == "ag") {
    c.agg = parse_aggregation(lower(v));
  } else if (key == "threshold_kind") {
    const std::string m = lower(v);
    if (m == "absolute") c.threshold_kind = ThresholdRule::Kind::Absolute;
    else if (m == "fraction") c.threshold_kind = ThresholdRule::Kind::FractionOfMax;
    else throw ArgumentError("unknown threshold kind '" + v + "'");
  } else if (key == "thresholds") {
    c.thresholds = to_doubles(key, v);
  } else if (key == "mapping") {
    const std::string m = lower(v);
    if (m == "raw") c.mapping = OutputMapping::Raw;
    else if (m == "unit") c.mapping = OutputMapping::TanhToUnit;
    else throw ArgumentError("unknown output mapping '" + v + "'");
  } else if (key == "chamfer_v") {
    c.chamfer_v = to_int(key, v);
  } else if (key == "train_ids") {
    c.train_ids = to_ids(key, v);
  } else if (key == "val_id") {
    c.val_id = to_int(key, v);
  } else if (key == "test_id") {
    c.test_id = to_int(key, v);
  } else {
    throw ArgumentError("unknown setting '" + raw_key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  for (const auto& [k, v] : parse_key_values(text)) apply_setting(base, k, v);
  return base;
}

GridAxes parse_grid(const std::string& text) {
  GridAxes axes;
  for (const auto& [k, v] : parse_key_values(text)) {
    std::vector<std::string> values;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) values.push_back(item);
    }
    axes.emplace_back(k, std::move(values));
  }
  return axes;
}

std::vector<RunConfig> expand_grid(const RunConfig& base, const GridAxes& axes) {
  for (const auto& [key, values] : axes)
    if (values.empty()) throw ArgumentError("grid axis '" + key + "' has no values");
  std::vector<RunConfig> out{base};
  for (const auto& [key, values] : axes) {
    std::vector<RunConfig> next;
    next.reserve(out.size() * values.size());
    for (const auto& cfg : out) {
      for (const auto& v : values) {
        RunConfig c = cfg;
        apply_setting(c, key, v);
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

TrainConfig to_train_config(const RunConfig& c) {
  TrainConfig t;
  t.loss = c.loss;
  t.lr0 = c.lr0;
  t.schedule = c.schedule;
  t.batch_size = c.batch_size;
  t.max_epochs = c.max_epochs;
  t.patience = c.patience;
  t.seed = c.seed;
  t.augment = c.augment;
  t.run_tag = run_tag(c);
  return t;
}

TrialData load_dataset(const std::filesystem::path& dir) {
  TrialData data;
  const std::regex pattern(R"(vol(\d+)\.mhd)");
  if (!std::filesystem::is_directory(dir)) throw ArgumentError(dir.string() + " is not a directory");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    const auto ref = dir / ("ref" + m[1].str() + ".ply");
    if (!std::filesystem::exists(ref)) continue;
    data[std::stoi(m[1].str())] = LabeledVolume{read_volume(entry.path()), read_ply_file(ref)};
  }
  if (data.empty()) throw ArgumentError("no vol<id>.mhd / ref<id>.ply pairs in " + dir.string());
  return data;
}

Volume preprocess(const Volume& raw, int ir) { return normalize(downsample(raw, ir, DownsampleMethod::Stride)); }

std::optional<double> select_threshold(const std::vector<ThresholdScore>& scores, int val_id) {
  std::optional<double> best_t;
  double best_cd = std::numeric_limits<double>::infinity();
  for (const auto& s : scores) {
    const auto it = s.chamfer.find(val_id);
    if (it == s.chamfer.end() || std::isnan(it->second)) continue;
    const double cd = it->second;
    if (!best_t || cd < best_cd || (cd == best_cd && s.value < *best_t)) {
      best_t = s.value;
      best_cd = cd;
    }
  }
  return best_t;
}

std::map<int, PreparedVolume> prepare_volumes(const RunConfig& cfg, const TrialData& data,
                                              std::vector<std::string>* warnings) {
  std::vector<int> ids = cfg.train_ids;
  ids.push_back(cfg.val_id);
  ids.push_back(cfg.test_id);
  split_volumes(ids, cfg.val_id, cfg.test_id);
  for (int id : ids)
    if (!data.count(id)) throw ArgumentError("volume " + std::to_string(id) + " missing from the data set");

  std::map<int, PreparedVolume> prepared;
  for (int id : ids) {
    const auto& lv = data.at(id);
    PreparedVolume p{preprocess(lv.volume, cfg.ir), {}};
    p.label = encode_mesh(lv.reference, p.volume, cfg.en, cfg.radius);
    if (warnings)
      for (const auto& w : p.label.warnings) warnings->push_back("volume " + std::to_string(id) + ": " + w);
    prepared.emplace(id, std::move(p));
  }
  const Extent plane = prepared.begin()->second.volume.extent();
  for (const auto& [id, p] : prepared)
    if (p.volume.extent().nx != plane.nx || p.volume.extent().ny != plane.ny)
      throw ShapeError("volume " + std::to_string(id) + " has a different in-plane size");
  return prepared;
}

nn::NetSpec net_spec_for(const RunConfig& cfg, const std::map<int, PreparedVolume>& prepared) {
  if (prepared.empty()) throw ArgumentError("no volumes");
  nn::NetSpec spec = cfg.net;
  spec.height = prepared.begin()->second.volume.extent().ny;
  spec.width = prepared.begin()->second.volume.extent().nx;
  return spec;
}

TrainingSet make_training_set(const RunConfig& cfg, const std::map<int, PreparedVolume>& prepared,
                              std::vector<std::string>* warnings) {
  TrainingSet set;
  for (int id : cfg.train_ids) {
    const auto& p = prepared.at(id);
    auto s = make_samples(p.volume, p.label, cfg.selection, id, warnings);
    std::move(s.begin(), s.end(), std::back_inserter(set.train));
  }
  const auto& v = prepared.at(cfg.val_id);
  set.val = make_samples(v.volume, v.label, cfg.selection, cfg.val_id, warnings);
  return set;
}

TrialRecord run_trial(const RunConfig& cfg, const TrialData& data, const TrialOptions& options) {
  TrialRecord rec;
  rec.run_tag = run_tag(cfg);
  rec.val_id = cfg.val_id;
  rec.test_id = cfg.test_id;
  if (cfg.thresholds.empty()) throw ArgumentError("no thresholds to sweep");

  const auto prepared = prepare_volumes(cfg, data, &rec.warnings);
  const nn::NetSpec spec = net_spec_for(cfg, prepared);
  rec.spec = spec;
  const TrainingSet set = make_training_set(cfg, prepared, &rec.warnings);

  nn::Net<float> net(spec, cfg.seed);
  TrainConfig tc = to_train_config(cfg);
  if (!options.work_dir.empty()) {
    const auto dir = options.work_dir / rec.run_tag;
    std::filesystem::create_directories(dir);
    tc.checkpoint = dir / "model.ckpt";
    tc.progress_log = dir / "progress.log";
  }

  if (!tc.checkpoint.empty() && std::filesystem::exists(tc.checkpoint)) {
    nn::load_checkpoint(tc.checkpoint, net);
    rec.training.checkpoint = tc.checkpoint;
    rec.training.run_tag = rec.run_tag;
    rec.warnings.push_back("resumed from " + tc.checkpoint.string());
    if (options.log) *options.log << rec.run_tag << ": resumed from checkpoint\n";
  } else {
    if (!tc.progress_log.empty()) std::filesystem::remove(tc.progress_log);
    try {
      rec.training = fit(net, set.train, set.val, tc);
    } catch (const DivergenceError& e) {
      rec.status = TrialStatus::Diverged;
      rec.message = e.what();
      rec.training = e.report;
      if (options.log) *options.log << rec.run_tag << ": " << e.what() << "\n";
      return rec;
    }
    if (options.log)
      *options.log << rec.run_tag << ": stopped at epoch " << rec.training.stopped_epoch << ", best val loss "
                   << rec.training.best_val_loss << " (epoch " << rec.training.best_epoch << ")\n";
  }

  rec.scores.resize(cfg.thresholds.size());
  for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) rec.scores[i].value = cfg.thresholds[i];
  for (int id : {cfg.val_id, cfg.test_id}) {
    const auto& p = prepared.at(id);
    const Grid3<float> prob = predict_volume(net, p.volume, cfg.agg, cfg.batch_size, cfg.mapping);
    const PointCloud ref = to_cloud(data.at(id).reference);
    for (auto& score : rec.scores) {
      const ThresholdRule rule{cfg.threshold_kind, score.value};
      const auto t = resolve_threshold(prob, rule);
      for (const auto& w : t.warnings) rec.warnings.push_back("volume " + std::to_string(id) + ": " + w);
      score.resolved[id] = t.t;
      const PointCloud cloud = decode_points(prob, t.t, p.volume.spacing);
      score.chamfer[id] = cloud.empty() ? std::numeric_limits<double>::infinity()
                                        : chamfer_sampled(cloud, ref, cfg.chamfer_v, cfg.seed).value;
    }
  }
  rec.chosen = select_threshold(rec.scores, cfg.val_id);
  return rec;
}

Report report(const std::vector<TrialRecord>& records) {
  const std::vector<std::string> header{"model", "setting", "t", "val_volume", "val_cd", "test_volume", "test_cd",
                                        "selected", "status"};
  std::vector<std::vector<std::string>> rows;
  auto cd_text = [](const std::map<int, double>& m, int id) {
    const auto it = m.find(id);
    if (it == m.end()) return std::string("-");
    if (!std::isfinite(it->second)) return std::string("inf");
    std::ostringstream o;
    o << std::fixed << std::setprecision(3) << it->second;
    return o.str();
  };
  for (const auto& r : records) {
    const std::string model = nn::to_string(r.spec.arch) + "/" + std::to_string(r.spec.nf);
    const std::string val = std::to_string(r.val_id) + " (val)";
    const std::string tst = std::to_string(r.test_id) + " (tst)";
    if (r.status == TrialStatus::Diverged) {
      rows.push_back({model, r.run_tag, "-", val, "-", tst, "-", "", "DIVERGED"});
      continue;
    }
    for (const auto& s : r.scores) {
      const bool selected = r.chosen && *r.chosen == s.value;
      rows.push_back({model, r.run_tag, fmt(s.value), val, cd_text(s.chamfer, r.val_id), tst,
                      cd_text(s.chamfer, r.test_id), selected ? "*" : "", "ok"});
    }
  }

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  Report out;
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line, csv;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c] + std::string(width[c] - row[c].size() + (c + 1 < row.size() ? 2 : 0), ' ');
      csv += (c ? "," : "") + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out.text += line + "\n";
    out.csv += csv + "\n";
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out;
}

}  // namespace usmesh
