#include "usmesh/error.hpp"
#include "usmesh/nets/net.hpp"
#include "usmesh/train.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

using namespace usmesh;
using usmesh::nn::Tensor;

namespace {

Tensor<double> filled(double v, int n = 1, int c = 3, int h = 4, int w = 4) {
  Tensor<double> t({n, c, h, w});
  t.array().setConstant(v);
  return t;
}

Tensor<double> random_tensor(std::mt19937_64& rng, double lo, double hi, bool binary = false) {
  Tensor<double> t({2, 3, 4, 5});
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.array()) v = binary ? (u(rng) < 0.5 * (lo + hi) ? 0.0 : 1.0) : u(rng);
  return t;
}

// disc of radius r in every channel
Sample disc_sample(int h, int w, double r) {
  Sample s;
  s.input = Tensor<float>({1, 3, h, w});
  s.target = Tensor<float>({1, 3, h, w});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d = std::hypot(y - h / 2.0, x - w / 2.0);
        const bool in = d < r;
        s.input(0, c, y, x) = in ? 0.8f : 0.2f;
        s.target(0, c, y, x) = std::abs(d - r) < 1.5 ? 1.0f : 0.0f;
      }
  return s;
}

std::vector<Sample> copies(const Sample& s, int n) { return std::vector<Sample>(static_cast<std::size_t>(n), s); }

nn::NetSpec tiny_spec() { return {nn::Arch::UNet, 2, nn::Activation::Sigmoid, 16, 16}; }

TrainConfig quiet_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.augment.enabled = false;
  return cfg;
}

}  // namespace

TEST_CASE("bce of a perfect binary prediction is zero") {
  Tensor<double> p({1, 1, 2, 2});
  p.array() << 0, 1, 1, 0;
  CHECK(loss(p, p, LossKind::Bce).value < 1e-6);
}

TEST_CASE("bce at one half is ln 2 per pixel") {
  std::mt19937_64 rng(1);
  const auto t = random_tensor(rng, 0, 1, true);
  Tensor<double> p(t.shape());
  p.array().setConstant(0.5);
  CHECK(loss(p, t, LossKind::Bce).value == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
}

TEST_CASE("focal loss matches the hand formula") {
  const double oracle = (1 - 0.9) * (1 - 0.9) * -std::log(0.9);
  CHECK(oracle == doctest::Approx(0.001054).epsilon(1e-3));
  CHECK(loss(filled(0.9), filled(1.0), LossKind::Bfce).value == doctest::Approx(oracle).epsilon(1e-12));
  // negative class: p_t = 1 - p
  CHECK(loss(filled(0.1), filled(0.0), LossKind::Bfce).value == doctest::Approx(oracle).epsilon(1e-12));
  LossOptions o;
  o.alpha = 0.25;
  CHECK(loss(filled(0.9), filled(1.0), LossKind::Bfce, o).value == doctest::Approx(0.25 * oracle).epsilon(1e-12));
  CHECK(loss(filled(0.1), filled(0.0), LossKind::Bfce, o).value == doctest::Approx(0.75 * oracle).epsilon(1e-12));
}

TEST_CASE("dice, mse and mae hand values") {
  Tensor<double> p({1, 1, 1, 4}), t({1, 1, 1, 4});
  p.array() << 1, 1, 0, 0;
  t.array() << 1, 0, 1, 0;
  // 1 - (2*1 + 1) / (2 + 2 + 1)
  CHECK(loss(p, t, LossKind::Dice).value == doctest::Approx(0.4));
  CHECK(loss(p, t, LossKind::Mse).value == doctest::Approx(0.5));
  CHECK(loss(p, t, LossKind::Mae).value == doctest::Approx(0.5));
  CHECK(loss(t, t, LossKind::Dice).value == doctest::Approx(0));
}

TEST_CASE("dice is symmetric and bounded") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_tensor(rng, 0, 1);
    const auto t = random_tensor(rng, 0, 1, i % 2 == 0);
    const double a = loss(p, t, LossKind::Dice).value, b = loss(t, p, LossKind::Dice).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(a >= 0);
    CHECK(a <= 1);
  }
}

TEST_CASE("losses are nonnegative") {
  std::mt19937_64 rng(5);
  for (LossKind k : {LossKind::Bce, LossKind::Bfce, LossKind::Mse, LossKind::Mae}) {
    for (int i = 0; i < 20; ++i) CHECK(loss(random_tensor(rng, 0, 1), random_tensor(rng, 0, 1), k).value >= 0);
  }
}

TEST_CASE("loss gradients match finite differences") {
  std::mt19937_64 rng(6);
  LossOptions with_alpha;
  with_alpha.alpha = 0.25;
  for (LossKind k : {LossKind::Bce, LossKind::Bfce, LossKind::Dice, LossKind::Mse, LossKind::Mae}) {
    for (const LossOptions& o : {LossOptions{}, with_alpha}) {
      CAPTURE(to_string(k));
      auto p = random_tensor(rng, 0.05, 0.95);
      const auto t = random_tensor(rng, 0, 1, k != LossKind::Mae);
      const auto g = loss(p, t, k, o).grad;
      for (Eigen::Index i = 0; i < p.array().size(); i += 7) {
        const double h = 1e-6, v = p.array()[i];
        p.array()[i] = v + h;
        const double up = loss(p, t, k, o).value;
        p.array()[i] = v - h;
        const double down = loss(p, t, k, o).value;
        p.array()[i] = v;
        CHECK(g.array()[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("loss shape mismatch") {
  CHECK_THROWS_AS(loss(filled(0.5, 1, 3, 4, 4), filled(0.5, 1, 3, 4, 5), LossKind::Bce), ShapeError);
}

TEST_CASE("loss and schedule names round trip") {
  for (LossKind k : {LossKind::Bce, LossKind::Bfce, LossKind::Dice, LossKind::Mse, LossKind::Mae})
    CHECK(parse_loss(to_string(k)) == k);
  for (Schedule s : {Schedule::Cyclical, Schedule::Cosine, Schedule::Polynomial})
    CHECK(parse_schedule(to_string(s)) == s);
  CHECK_THROWS_AS(parse_loss("hinge"), ArgumentError);
}

TEST_CASE("schedule examples") {
  const double lr0 = 0.008;
  CHECK(lr_at(Schedule::Cosine, lr0, 0, 300) == doctest::Approx(lr0));
  CHECK(lr_at(Schedule::Cosine, lr0, 150, 300) == doctest::Approx(lr0 / 2));
  CHECK(lr_at(Schedule::Polynomial, lr0, 0, 300) == doctest::Approx(lr0));
  CHECK(lr_at(Schedule::Polynomial, lr0, 299, 300) == doctest::Approx(lr0 / (300.0 * 300.0)).epsilon(1e-9));
  CHECK(lr_at(Schedule::Cyclical, lr0, 0, 300) == doctest::Approx(lr0));
  CHECK(lr_at(Schedule::Cyclical, lr0, 10, 300) == doctest::Approx(lr0 / 10));
  // second cycle peaks at half amplitude above the floor
  CHECK(lr_at(Schedule::Cyclical, lr0, 20, 300) == doctest::Approx(lr0 / 10 + 0.5 * 0.9 * lr0));
}

TEST_CASE("schedules are positive, continuous and bounded") {
  const double lr0 = 0.001;
  const int max = 300;
  for (Schedule s : {Schedule::Cosine, Schedule::Polynomial, Schedule::Cyclical}) {
    for (int e = 0; e < max; ++e) {
      const double lr = lr_at(s, lr0, e, max);
      CHECK(lr > 0);
      CHECK(lr <= lr0 * (1 + 1e-12));
      if (s == Schedule::Cyclical) CHECK(lr >= lr0 / 10 * (1 - 1e-12));
      if (s != Schedule::Cyclical && e > 0) {
        const double prev = lr_at(s, lr0, e - 1, max);
        CHECK(prev >= lr);
        CHECK(prev - lr <= 3.0 * lr0 / max);
      }
    }
  }
}

TEST_CASE("early stopper with patience one") {
  EarlyStopper s(1);
  CHECK(s.update(1.0));
  CHECK_FALSE(s.should_stop());
  CHECK_FALSE(s.update(1.5));
  CHECK(s.should_stop());
  CHECK(s.best() == 1.0);

  EarlyStopper t(3);
  for (double v : {5.0, 4.0, 4.5, 4.2, 3.9, 4.0, 4.0}) t.update(v);
  CHECK_FALSE(t.should_stop());
  t.update(4.0);
  CHECK(t.should_stop());
  CHECK(t.best() == 3.9);
}

TEST_CASE("fit overfits a single repeated sample") {
  nn::Net<float> net({nn::Arch::UNet, 4, nn::Activation::Sigmoid, 16, 16}, 7);
  const auto data = copies(disc_sample(16, 16, 4.5), 8);
  TrainConfig cfg = quiet_config();
  cfg.batch_size = 8;
  cfg.lr0 = 0.01;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  cfg.seed = 3;
  const auto report = fit(net, data, data, cfg);
  REQUIRE(report.curve.size() == 200);
  const double initial = report.curve.front().train_loss;
  double lowest = initial;
  for (const auto& e : report.curve) lowest = std::min(lowest, e.train_loss);
  MESSAGE("initial " << initial << " lowest " << lowest);
  CHECK(lowest < 0.1 * initial);
  // decreasing on average: each quarter of the curve is below the previous one
  const std::size_t q = report.curve.size() / 4;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < 4; ++k) {
    double sum = 0;
    for (std::size_t i = k * q; i < (k + 1) * q; ++i) sum += report.curve[i].train_loss;
    CHECK(sum < prev);
    prev = sum;
  }
}

TEST_CASE("fit is deterministic under a fixed seed") {
  const auto data = copies(disc_sample(16, 16, 4.5), 4);
  TrainConfig cfg = quiet_config();
  cfg.augment.enabled = true;
  cfg.augment.max_rotation = 30;
  cfg.augment.reorientation_start_epoch = 0;
  cfg.max_epochs = 4;
  cfg.seed = 11;
  nn::Net<float> a(tiny_spec(), 1), b(tiny_spec(), 1);
  const auto ra = fit(a, data, data, cfg);
  const auto rb = fit(b, data, data, cfg);
  REQUIRE(ra.curve.size() == rb.curve.size());
  for (std::size_t i = 0; i < ra.curve.size(); ++i) {
    CHECK(ra.curve[i].train_loss == rb.curve[i].train_loss);
    CHECK(ra.curve[i].val_loss == rb.curve[i].val_loss);
    CHECK(ra.curve[i].lr == rb.curve[i].lr);
  }
}

TEST_CASE("fit report invariants and progress log") {
  const auto dir = std::filesystem::temp_directory_path() / "usmesh_test_train_log";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto data = copies(disc_sample(16, 16, 4.5), 4);
  TrainConfig cfg = quiet_config();
  cfg.max_epochs = 6;
  cfg.patience = 2;
  cfg.progress_log = dir / "progress.log";
  nn::Net<float> net(tiny_spec(), 2);
  const auto r = fit(net, data, data, cfg);
  CHECK(r.stopped_epoch <= cfg.max_epochs);
  CHECK(r.stopped_epoch == static_cast<int>(r.curve.size()));
  double min_val = r.curve.front().val_loss;
  for (const auto& e : r.curve) min_val = std::min(min_val, e.val_loss);
  CHECK(r.best_val_loss == min_val);

  std::ifstream in(cfg.progress_log);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    int epoch = 0;
    double lr = 0, tl = 0, vl = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream row(line);
    row >> epoch >> c1 >> lr >> c2 >> tl >> c3 >> vl;
    CHECK_FALSE(row.fail());
    CHECK(c1 == ',');
    ++lines;
    CHECK(epoch == lines);
  }
  CHECK(lines == r.stopped_epoch);
  std::filesystem::remove_all(dir);
}

TEST_CASE("fit restores the best-epoch weights bitwise") {
  const auto dir = std::filesystem::temp_directory_path() / "usmesh_test_train_ckpt";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto train = copies(disc_sample(16, 16, 4.5), 8);
  const auto val = copies(disc_sample(16, 16, 5.5), 2);
  // a schedule that does not depend on max_epochs lets a shorter run replay the prefix
  TrainConfig cfg = quiet_config();
  cfg.schedule = Schedule::Cyclical;
  cfg.batch_size = 8;
  cfg.lr0 = 0.05;
  cfg.max_epochs = 150;
  cfg.patience = 8;
  cfg.seed = 5;
  cfg.checkpoint = dir / "best.ckpt";
  nn::Net<float> net(tiny_spec(), 7);
  const auto r = fit(net, train, val, cfg);
  REQUIRE(r.best_epoch >= 1);
  CHECK(r.best_epoch + cfg.patience == r.stopped_epoch);
  MESSAGE("best epoch " << r.best_epoch << " of " << r.stopped_epoch);

  TrainConfig replay = cfg;
  replay.max_epochs = r.best_epoch;
  replay.patience = r.best_epoch + 1;
  replay.checkpoint.clear();
  nn::Net<float> ref(tiny_spec(), 7);
  const auto rr = fit(ref, train, val, replay);
  CHECK(rr.best_epoch == r.best_epoch);

  const auto x = stack_inputs(val, {0, 1}, 0, 2);
  const auto a = net.predict(x), b = ref.predict(x);
  CHECK((a.array() == b.array()).all());

  nn::Net<float> loaded = nn::load_checkpoint(cfg.checkpoint);
  CHECK((loaded.predict(x).array() == a.array()).all());
  CHECK(evaluate_loss(net, val, cfg) == r.best_val_loss);
  std::filesystem::remove_all(dir);
}

TEST_CASE("non-finite loss raises a divergence error with the curve") {
  auto data = copies(disc_sample(16, 16, 4.5), 4);
  data[1].input(0, 0, 3, 3) = std::numeric_limits<float>::quiet_NaN();
  TrainConfig cfg = quiet_config();
  cfg.max_epochs = 5;
  nn::Net<float> net(tiny_spec(), 4);
  const auto before = net.snapshot();
  try {
    fit(net, data, data, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.report.curve.size() == 1);
    CHECK(e.report.stopped_epoch == 1);
    CHECK_FALSE(std::isfinite(e.report.curve.back().train_loss));
  }
  // no finite epoch, so the initial weights are kept
  const auto after = net.snapshot();
  for (std::size_t i = 0; i < before.size(); ++i) CHECK((before[i].array() == after[i].array()).all());
}

TEST_CASE("invalid training configuration") {
  const auto data = copies(disc_sample(16, 16, 4.5), 2);
  nn::Net<float> net(tiny_spec(), 1);
  TrainConfig cfg = quiet_config();
  CHECK_THROWS_AS(fit(net, {}, data, cfg), ArgumentError);
  CHECK_THROWS_AS(fit(net, data, {}, cfg), ArgumentError);
  cfg.lr0 = 0;
  CHECK_THROWS_AS(fit(net, data, data, cfg), ArgumentError);
  cfg.lr0 = 1e-3;
  cfg.patience = 0;
  CHECK_THROWS_AS(fit(net, data, data, cfg), ArgumentError);
}
