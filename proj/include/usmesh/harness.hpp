#pragma once

#include "usmesh/dataset.hpp"
#include "usmesh/encoder.hpp"
#include "usmesh/infer.hpp"
#include "usmesh/mesh.hpp"
#include "usmesh/nets/net.hpp"
#include "usmesh/train.hpp"
#include "usmesh/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace usmesh {

/// One point of the ablation grid. The net's input plane is taken from the
/// data, so `net.height` and `net.width` stay 0 here.
struct RunConfig {
  nn::NetSpec net{nn::Arch::UNet, 16, nn::Activation::Sigmoid, 0, 0};
  LossKind loss = LossKind::Bce;
  double lr0 = 1e-3;
  Schedule schedule = Schedule::Cosine;
  int batch_size = 8;
  int max_epochs = 300;
  int patience = 20;
  std::uint64_t seed = 0;
  AugmentPolicy augment;
  SelectionScheme selection = SelectionScheme::SE2;
  int ir = 3;  // in-plane down-sampling factor
  EncodingMode en = EncodingMode::SoftEdged;
  int radius = 2;
  Aggregation agg = Aggregation::Mean;
  ThresholdRule::Kind threshold_kind = ThresholdRule::Kind::Absolute;
  std::vector<double> thresholds{0.3, 0.4, 0.5};
  OutputMapping mapping = OutputMapping::Raw;
  int chamfer_v = 10000;
  std::vector<int> train_ids{1, 2, 3};
  int val_id = 4;
  int test_id = 5;
  /// Tag tokens this build does not model, kept verbatim.
  std::vector<std::string> extra;

  bool operator==(const RunConfig&) const = default;
};

/// `_`-joined tokens such as `ARunet_NF16_ACsigmoid_...`; the inverse of
/// parse_run_tag.
std::string run_tag(const RunConfig& cfg);
RunConfig parse_run_tag(const std::string& tag);

/// Sets one field by its config-file name; throws ArgumentError for an
/// unknown key and ParseError for a bad value. Lists take `+` or spaces.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat `key = value` lines; `#` starts a comment.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);
RunConfig parse_config(const std::string& text, RunConfig base = {});

using GridAxes = std::vector<std::pair<std::string, std::vector<std::string>>>;

/// `key = v1, v2, ...` lines.
GridAxes parse_grid(const std::string& text);

/// Cartesian product over the axes, the last axis varying fastest. Throws
/// ArgumentError for an axis without values.
std::vector<RunConfig> expand_grid(const RunConfig& base, const GridAxes& axes);

TrainConfig to_train_config(const RunConfig& cfg);

struct LabeledVolume {
  Volume volume;  // raw intensities at full resolution
  Mesh reference;
};

/// Volumes keyed by id.
using TrialData = std::map<int, LabeledVolume>;

/// `vol<id>.mhd` with `ref<id>.ply` pairs in a folder.
TrialData load_dataset(const std::filesystem::path& dir);

struct ThresholdScore {
  double value = 0;                       // swept t or f
  std::map<int, double> resolved;         // absolute threshold per volume
  std::map<int, double> chamfer;          // per volume; +inf for an empty cloud
};

enum class TrialStatus { Converged, Diverged };

struct TrialRecord {
  std::string run_tag;
  nn::NetSpec spec;
  TrialStatus status = TrialStatus::Converged;
  std::string message;
  std::vector<ThresholdScore> scores;
  std::optional<double> chosen;  // swept value with the lowest validation CD
  int val_id = 0;
  int test_id = 0;
  TrainReport training;
  std::vector<std::string> warnings;
};

struct PreparedVolume {
  Volume volume;  // preprocessed
  LabelVolume label;
};

/// Preprocesses and encodes the train, validation and test volumes of `cfg`.
/// Throws ArgumentError for overlapping splits or missing ids and ShapeError
/// when the volumes disagree in plane size.
std::map<int, PreparedVolume> prepare_volumes(const RunConfig& cfg, const TrialData& data,
                                              std::vector<std::string>* warnings = nullptr);

/// `cfg.net` with the input plane of the prepared volumes.
nn::NetSpec net_spec_for(const RunConfig& cfg, const std::map<int, PreparedVolume>& prepared);

struct TrainingSet {
  std::vector<Sample> train;
  std::vector<Sample> val;
};

TrainingSet make_training_set(const RunConfig& cfg, const std::map<int, PreparedVolume>& prepared,
                              std::vector<std::string>* warnings = nullptr);

/// Lowest validation CD wins; ties go to the smaller threshold. Test scores
/// are never read.
std::optional<double> select_threshold(const std::vector<ThresholdScore>& scores, int val_id);

struct TrialOptions {
  /// Checkpoints and progress logs go to `work_dir / run_tag`; an existing
  /// checkpoint there is reused instead of training again.
  std::filesystem::path work_dir;
  std::ostream* log = nullptr;
};

/// Down-samples, normalizes and encodes every volume, trains on the train
/// split, and scores each swept threshold on the validation and test volumes.
/// Divergence is recorded in the result rather than thrown.
TrialRecord run_trial(const RunConfig& cfg, const TrialData& data, const TrialOptions& options = {});

struct Report {
  std::string text;
  std::string csv;
};

/// One row per (model, setting, threshold) with per-volume CDs marked (val)
/// or (tst); divergent trials get a single flagged row.
Report report(const std::vector<TrialRecord>& records);

/// Preprocessing shared by training and evaluation: stride down-sampling by
/// `ir`, then rescaling to [0, 1].
Volume preprocess(const Volume& raw, int ir);

}  // namespace usmesh
