#pragma once

#include "usmesh/dataset.hpp"
#include "usmesh/error.hpp"
#include "usmesh/nets/net.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace usmesh {

enum class LossKind { Bce, Bfce, Dice, Mse, Mae };
enum class Schedule { Cyclical, Cosine, Polynomial };

std::string to_string(LossKind kind);
LossKind parse_loss(const std::string& name);
std::string to_string(Schedule schedule);
Schedule parse_schedule(const std::string& name);

struct LossOptions {
  double eps = 1e-7;          // probability clamp for the cross-entropy kinds
  double gamma = 2.0;         // focal exponent
  std::optional<double> alpha;  // focal class balance; off unless set
  double dice_smooth = 1.0;
};

template <typename Scalar>
struct LossValue {
  Scalar value = 0;
  nn::Tensor<Scalar> grad;  // d value / d pred
};

/// Mean over all elements for bce, bfce, mse and mae; dice is computed over
/// the whole batch. Throws ShapeError when shapes differ.
template <typename Scalar>
LossValue<Scalar> loss(const nn::Tensor<Scalar>& pred, const nn::Tensor<Scalar>& target, LossKind kind,
                       const LossOptions& options = {});

extern template LossValue<float> loss(const nn::Tensor<float>&, const nn::Tensor<float>&, LossKind,
                                      const LossOptions&);
extern template LossValue<double> loss(const nn::Tensor<double>&, const nn::Tensor<double>&, LossKind,
                                       const LossOptions&);

struct ScheduleOptions {
  double poly_power = 2.0;
  int cycle_length = 20;
  double cycle_decay = 0.5;
};

/// Learning rate at 0-based `epoch`.
double lr_at(Schedule schedule, double lr0, int epoch, int max_epochs, const ScheduleOptions& options = {});

/// ADAM with decoupled state per parameter.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-7)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<nn::NamedVar<float>>& params, double lr);

 private:
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Eigen::ArrayXf> m_, v_;
};

/// Counts epochs without improvement of the monitored loss.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  /// Returns true when `loss` is a new best.
  bool update(double loss) {
    if (loss < best_) {
      best_ = loss;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }
  bool should_stop() const { return stale_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  int stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct TrainConfig {
  LossKind loss = LossKind::Bce;
  LossOptions loss_options;
  double lr0 = 1e-3;
  Schedule schedule = Schedule::Cosine;
  ScheduleOptions schedule_options;
  int batch_size = 8;
  int max_epochs = 300;
  int patience = 20;
  std::uint64_t seed = 0;
  AugmentPolicy augment;
  std::filesystem::path checkpoint;  // best weights are written here when set
  std::filesystem::path progress_log;  // `epoch, lr, train_loss, val_loss` lines
  std::string run_tag;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0;
  double train_loss = 0;
  double val_loss = 0;
};

struct TrainReport {
  std::vector<EpochRecord> curve;
  int stopped_epoch = 0;
  int best_epoch = 0;
  double best_val_loss = 0;
  std::filesystem::path checkpoint;
  std::string run_tag;
};

/// Non-finite loss during training; carries the curve up to that point.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, TrainReport report) : Error(what), report(std::move(report)) {}
  TrainReport report;
};

/// Mean loss of `net` in inference mode.
double evaluate_loss(nn::Net<float>& net, const std::vector<Sample>& samples, const TrainConfig& cfg);

/// Trains with ADAM, reshuffling under `cfg.seed` every epoch, and stops when
/// the validation loss has not improved for `cfg.patience` epochs. The net is
/// left holding the best-validation weights.
TrainReport fit(nn::Net<float>& net, const std::vector<Sample>& train, const std::vector<Sample>& val,
                const TrainConfig& cfg);

/// Stacks samples [begin, end) of `order` into (n, 3, H, W) batches.
nn::Tensor<float> stack_inputs(const std::vector<Sample>& samples, const std::vector<std::size_t>& order,
                               std::size_t begin, std::size_t end);
nn::Tensor<float> stack_targets(const std::vector<Sample>& samples, const std::vector<std::size_t>& order,
                                std::size_t begin, std::size_t end);

}  // namespace usmesh
