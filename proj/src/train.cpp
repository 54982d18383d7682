#include "usmesh/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

namespace usmesh {
namespace {

using nn::Tensor;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix(mix(mix(seed) ^ a) ^ b);
}

const std::map<LossKind, std::string>& loss_names() {
  static const std::map<LossKind, std::string> names{{LossKind::Bce, "bce"},
                                                     {LossKind::Bfce, "bfce"},
                                                     {LossKind::Dice, "dice"},
                                                     {LossKind::Mse, "mse"},
                                                     {LossKind::Mae, "mae"}};
  return names;
}

const std::map<Schedule, std::string>& schedule_names() {
  static const std::map<Schedule, std::string> names{
      {Schedule::Cyclical, "cyclical"}, {Schedule::Cosine, "cosine"}, {Schedule::Polynomial, "polynomial"}};
  return names;
}

nn::Tensor<float> stack(const std::vector<Sample>& samples, const std::vector<std::size_t>& order,
                        std::size_t begin, std::size_t end, bool targets) {
  const auto& first = targets ? samples[order[begin]].target : samples[order[begin]].input;
  const nn::Shape s = first.shape();
  Tensor<float> out(nn::Shape{static_cast<int>(end - begin), s.c, s.h, s.w});
  for (std::size_t i = begin; i < end; ++i) {
    const auto& t = targets ? samples[order[i]].target : samples[order[i]].input;
    if (t.shape() != s) throw ShapeError("samples in a batch differ in shape");
    out.image(static_cast<int>(i - begin)) = t.image(0);
  }
  return out;
}

}  // namespace

std::string to_string(LossKind kind) { return loss_names().at(kind); }

LossKind parse_loss(const std::string& name) {
  for (const auto& [k, n] : loss_names())
    if (n == name) return k;
  throw ArgumentError("unknown loss '" + name + "'");
}

std::string to_string(Schedule schedule) { return schedule_names().at(schedule); }

Schedule parse_schedule(const std::string& name) {
  for (const auto& [k, n] : schedule_names())
    if (n == name) return k;
  throw ArgumentError("unknown schedule '" + name + "'");
}

template <typename Scalar>
LossValue<Scalar> loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& target, LossKind kind,
                       const LossOptions& o) {
  if (pred.shape() != target.shape())
    throw ShapeError("loss: prediction " + pred.shape().str() + " vs target " + target.shape().str());
  using Array = typename Tensor<Scalar>::Array;
  const auto& p = pred.array();
  const auto& t = target.array();
  const Scalar n = static_cast<Scalar>(p.size());
  LossValue<Scalar> out;
  out.grad = Tensor<Scalar>(pred.shape());
  auto& g = out.grad.array();

  const Scalar eps = static_cast<Scalar>(o.eps);
  switch (kind) {
    case LossKind::Bce:
    case LossKind::Bfce: {
      const Array pc = p.max(eps).min(Scalar(1) - eps);
      const Array inside = ((p >= eps) && (p <= Scalar(1) - eps)).template cast<Scalar>();
      const Array bce = -(t * pc.log() + (Scalar(1) - t) * (Scalar(1) - pc).log());
      const Array dbce = (pc - t) / (pc * (Scalar(1) - pc));
      if (kind == LossKind::Bce) {
        out.value = bce.sum() / n;
        g = inside * dbce / n;
        break;
      }
      const Scalar gamma = static_cast<Scalar>(o.gamma);
      const Array pt = t * pc + (Scalar(1) - t) * (Scalar(1) - pc);
      const Array q = (Scalar(1) - pt).max(Scalar(0));
      const Array focal = q.pow(gamma);
      // d focal / d p = -gamma q^(gamma-1) (2t - 1)
      const Array dfocal = -gamma * q.pow(gamma - Scalar(1)) * (Scalar(2) * t - Scalar(1));
      Array weight = Array::Ones(p.size());
      if (o.alpha) {
        const Scalar a = static_cast<Scalar>(*o.alpha);
        weight = t * a + (Scalar(1) - t) * (Scalar(1) - a);
      }
      out.value = (weight * focal * bce).sum() / n;
      g = inside * weight * (dfocal * bce + focal * dbce) / n;
      break;
    }
    case LossKind::Dice: {
      const Scalar s = static_cast<Scalar>(o.dice_smooth);
      const Scalar inter = (p * t).sum();
      const Scalar denom = p.sum() + t.sum() + s;
      out.value = Scalar(1) - (Scalar(2) * inter + s) / denom;
      g = -(Scalar(2) * t * denom - (Scalar(2) * inter + s)) / (denom * denom);
      break;
    }
    case LossKind::Mse:
      out.value = (p - t).square().sum() / n;
      g = Scalar(2) * (p - t) / n;
      break;
    case LossKind::Mae:
      out.value = (p - t).abs().sum() / n;
      g = (p - t).sign() / n;
      break;
  }
  return out;
}

template LossValue<float> loss(const Tensor<float>&, const Tensor<float>&, LossKind, const LossOptions&);
template LossValue<double> loss(const Tensor<double>&, const Tensor<double>&, LossKind, const LossOptions&);

double lr_at(Schedule schedule, double lr0, int epoch, int max_epochs, const ScheduleOptions& o) {
  const double frac = static_cast<double>(epoch) / static_cast<double>(max_epochs);
  switch (schedule) {
    case Schedule::Cosine: return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    case Schedule::Polynomial: return lr0 * std::pow(1.0 - frac, o.poly_power);
    case Schedule::Cyclical: {
      const int cycle = epoch / o.cycle_length;
      const double x = static_cast<double>(epoch % o.cycle_length) / o.cycle_length;
      const double floor = lr0 / 10.0;
      return floor + (lr0 - floor) * std::pow(o.cycle_decay, cycle) * std::abs(1.0 - 2.0 * x);
    }
  }
  return lr0;
}

void Adam::step(const std::vector<nn::NamedVar<float>>& params, double lr) {
  if (m_.size() != params.size()) {
    m_.assign(params.size(), Eigen::ArrayXf());
    v_.assign(params.size(), Eigen::ArrayXf());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = Eigen::ArrayXf::Zero(params[i].var->value.size());
      v_[i] = Eigen::ArrayXf::Zero(params[i].var->value.size());
    }
  }
  ++t_;
  const double lr_t = lr * std::sqrt(1.0 - std::pow(beta2_, static_cast<double>(t_))) /
                      (1.0 - std::pow(beta1_, static_cast<double>(t_)));
  const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& node = *params[i].var;
    if (!node.has_grad()) continue;
    const auto& g = node.grad.array();
    m_[i] = b1 * m_[i] + (1.0f - b1) * g;
    v_[i] = b2 * v_[i] + (1.0f - b2) * g.square();
    node.value.array() -= static_cast<float>(lr_t) * m_[i] / (v_[i].sqrt() + static_cast<float>(eps_));
  }
}

Tensor<float> stack_inputs(const std::vector<Sample>& samples, const std::vector<std::size_t>& order,
                           std::size_t begin, std::size_t end) {
  return stack(samples, order, begin, end, false);
}

Tensor<float> stack_targets(const std::vector<Sample>& samples, const std::vector<std::size_t>& order,
                            std::size_t begin, std::size_t end) {
  return stack(samples, order, begin, end, true);
}

double evaluate_loss(nn::Net<float>& net, const std::vector<Sample>& samples, const TrainConfig& cfg) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  double total = 0;
  for (std::size_t b = 0; b < order.size(); b += bs) {
    const std::size_t e = std::min(order.size(), b + bs);
    const auto pred = net.predict(stack_inputs(samples, order, b, e));
    total += static_cast<double>(loss(pred, stack_targets(samples, order, b, e), cfg.loss, cfg.loss_options).value) *
             static_cast<double>(e - b);
  }
  return total / static_cast<double>(samples.size());
}

TrainReport fit(nn::Net<float>& net, const std::vector<Sample>& train, const std::vector<Sample>& val,
                const TrainConfig& cfg) {
  if (train.empty() || val.empty()) throw ArgumentError("fit needs nonempty training and validation samples");
  if (cfg.lr0 <= 0 || cfg.patience < 1 || cfg.max_epochs < 1 || cfg.batch_size < 1)
    throw ArgumentError("invalid training configuration");

  TrainReport report;
  report.run_tag = cfg.run_tag;
  std::ofstream log;
  if (!cfg.progress_log.empty()) {
    log.open(cfg.progress_log, std::ios::app);
    if (!log) throw Error("cannot open progress log " + cfg.progress_log.string());
  }

  Adam adam;
  EarlyStopper stopper(cfg.patience);
  auto best_state = net.snapshot();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr = lr_at(cfg.schedule, cfg.lr0, epoch - 1, cfg.max_epochs, cfg.schedule_options);
    std::mt19937_64 rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double train_total = 0;
    for (std::size_t b = 0; b < order.size(); b += bs) {
      const std::size_t e = std::min(order.size(), b + bs);
      Tensor<float> x, y;
      if (cfg.augment.enabled) {
        std::vector<Sample> batch;
        std::vector<std::size_t> idx;
        for (std::size_t i = b; i < e; ++i) {
          batch.push_back(augment(train[order[i]], cfg.augment, epoch - 1,
                                  stream_seed(cfg.seed, static_cast<std::uint64_t>(epoch), order[i] + 1)));
          idx.push_back(idx.size());
        }
        x = stack_inputs(batch, idx, 0, batch.size());
        y = stack_targets(batch, idx, 0, batch.size());
      } else {
        x = stack_inputs(train, order, b, e);
        y = stack_targets(train, order, b, e);
      }
      net.zero_grad();
      auto out = net.forward(nn::constant(std::move(x)), true);
      auto l = loss(out->value, y, cfg.loss, cfg.loss_options);
      train_total += static_cast<double>(l.value) * static_cast<double>(e - b);
      if (!std::isfinite(l.value)) break;
      nn::backward(out, l.grad);
      adam.step(net.parameters(), lr);
    }
    const double train_loss = train_total / static_cast<double>(train.size());
    const double val_loss = std::isfinite(train_loss) ? evaluate_loss(net, val, cfg) : train_loss;
    report.curve.push_back({epoch, lr, train_loss, val_loss});
    report.stopped_epoch = epoch;
    if (log) log << epoch << ", " << lr << ", " << train_loss << ", " << val_loss << std::endl;

    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      report.best_val_loss = stopper.best();
      net.restore(best_state);
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch), std::move(report));
    }
    if (stopper.update(val_loss)) {
      best_state = net.snapshot();
      report.best_epoch = epoch;
      report.best_val_loss = val_loss;
    }
    if (stopper.should_stop()) break;
  }

  net.restore(best_state);
  if (!cfg.checkpoint.empty()) {
    nn::save_checkpoint(cfg.checkpoint, net);
    report.checkpoint = cfg.checkpoint;
  }
  return report;
}

}  // namespace usmesh
