#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "snn/train.hpp"
#include "toy_net.hpp"

using namespace snn;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "snn_train_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<char> bytes_of(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(b.data(), std::streamsize(b.size()));
}

ArchSpec tiny_arch(int classes) {
  ArchSpec s = scale_width(ArchSpec{}, 0.125);
  s.num_classes = classes;
  s.time_steps = 2;
  return s;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.batch_size = 4;
  c.max_epochs = 3;
  c.time_steps = 2;
  c.lr = 0.01f;
  return c;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("cross-entropy over time") {
  Tape tape;
  std::vector<Tensor> uniform{Tensor(Shape{2, 10}, 0.3f)};
  const std::vector<int> labels{3, 7};
  CHECK(ce_loss_over_time(tape, uniform, labels).item() ==
        doctest::Approx(std::log(10.0)).epsilon(1e-6));

  std::vector<Tensor> confident{Tensor(Shape{1, 3}, std::vector<float>{60.0f, 0.0f, 0.0f})};
  const std::vector<int> zero{0};
  CHECK(ce_loss_over_time(tape, confident, zero).item() < 1e-20f);

  Rng rng(13);
  const Tensor l = oracle::random_tensor({4, 5}, rng, -3.0f, 3.0f);
  const std::vector<int> y{0, 4, 2, 2};
  std::vector<Tensor> one{l}, two{l, l};
  for (auto mode : {CeAveraging::logits, CeAveraging::probabilities}) {
    CHECK(ce_loss_over_time(tape, one, y, mode).item() ==
          ce_loss_over_time(tape, two, y, mode).item());
  }
  // softmax of the time-averaged logits, by hand
  const Tensor a(Shape{1, 2}, std::vector<float>{1.0f, 0.0f});
  const Tensor b(Shape{1, 2}, std::vector<float>{3.0f, 0.0f});
  std::vector<Tensor> ab{a, b};
  const std::vector<int> first{0};
  CHECK(ce_loss_over_time(tape, ab, first).item() ==
        doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-6));
  const double pa = 1.0 / (1.0 + std::exp(-1.0)), pb = 1.0 / (1.0 + std::exp(-3.0));
  CHECK(ce_loss_over_time(tape, ab, first, CeAveraging::probabilities).item() ==
        doctest::Approx(-std::log((pa + pb) / 2.0)).epsilon(1e-6));

  const std::vector<int> bad{0, 10};
  CHECK(error_of([&] { ce_loss_over_time(tape, uniform, bad); }).find("out of range") !=
        std::string::npos);
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  Rng rng(14);
  const std::vector<int> y{1, 3, 0};
  for (auto mode : {CeAveraging::logits, CeAveraging::probabilities}) {
    std::vector<Tensor> steps;
    for (int t = 0; t < 3; ++t) {
      steps.push_back(oracle::random_tensor({3, 4}, rng, -2.0f, 2.0f));
      steps.back().set_requires_grad(true);
    }
    Tape tape;
    Tensor loss = ce_loss_over_time(tape, steps, y, mode);
    backward(tape, loss);
    // double-precision loss for the differences
    auto f = [&](std::size_t t, std::size_t k, double d) {
      double total = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        std::vector<double> z(4, 0.0), mean_p(4, 0.0);
        for (std::size_t s = 0; s < 3; ++s) {
          std::vector<double> zs(4);
          for (std::size_t c = 0; c < 4; ++c)
            zs[c] = steps[s][i * 4 + c] + (s == t && i * 4 + c == k ? d : 0.0);
          double sum = 0.0;
          for (std::size_t c = 0; c < 4; ++c) sum += std::exp(zs[c]);
          for (std::size_t c = 0; c < 4; ++c) {
            z[c] += zs[c] / 3.0;
            mean_p[c] += std::exp(zs[c]) / sum / 3.0;
          }
        }
        if (mode == CeAveraging::logits) {
          double sum = 0.0;
          for (double v : z) sum += std::exp(v);
          total -= z[std::size_t(y[i])] - std::log(sum);
        } else {
          total -= std::log(mean_p[std::size_t(y[i])]);
        }
      }
      return total / 3.0;
    };
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t k = 0; k < 12; ++k) {
        const double fd = (f(t, k, 1e-5) - f(t, k, -1e-5)) / 2e-5;
        CHECK(steps[t].grad()[k] == doctest::Approx(fd).epsilon(1e-4).scale(1e-3));
      }
  }
}

TEST_CASE("gradient-aware loss") {
  const std::vector<float> zeros(8, 0.0f);
  CHECK(ga_loss(zeros, 0.1f, 1e-8f) == doctest::Approx(0.8f));
  const std::vector<float> at_eps(4, 1e-3f);
  CHECK(ga_loss(at_eps, 1.0f, 1e-3f) == doctest::Approx(2.0f));
  const std::vector<float> one{1.0f};
  CHECK(ga_loss(one, 1.0f, 1e-8f) == doctest::Approx(1e-8f).epsilon(1e-3));
  CHECK(total_loss(2.3026f, 0.8f) == doctest::Approx(3.1026f));
  Rng rng(15);
  for (int i = 0; i < 200; ++i) {
    std::vector<float> g(1 + rng.next() % 26);
    for (auto& v : g) v = rng.uniform() < 0.2f ? 0.0f : std::pow(10.0f, rng.uniform(-9.0f, 2.0f));
    const float lambda = rng.uniform(0.01f, 1.0f);
    const float ga = ga_loss(g, lambda, 1e-8f);
    CHECK(ga > 0.0f);
    CHECK(ga <= lambda * float(g.size()) * (1.0f + 1e-6f));
    const float ce = rng.uniform(0.0f, 5.0f);
    CHECK(total_loss(ce, ga) >= ce);
  }
  CHECK(ga_loss(one, 0.0f, 1e-8f) == 0.0f);
}

TEST_CASE("Adam") {
  for (float g : {0.5f, -3.0f, 1e-3f}) {
    Tensor w(Shape{1}, 1.0f, true);
    w.grad()[0] = g;
    std::vector<Tensor> ps{w};
    AdamState st;
    adam_step(ps, st, 1e-3f);
    CHECK(w[0] == doctest::Approx(1.0f - 1e-3f * (g > 0 ? 1.0f : -1.0f)).epsilon(1e-6));
  }
  {
    Tensor w(Shape{3}, std::vector<float>{1.0f, 2.0f, 3.0f}, true);
    w.grad();
    std::vector<Tensor> ps{w};
    AdamState st;
    adam_step(ps, st, 1e-2f);
    CHECK(w[0] == 1.0f);
    CHECK(w[1] == 2.0f);
    CHECK(w[2] == 3.0f);
  }
  {
    // two scalars jointly or alone follow the same trajectory
    Tensor a(Shape{1}, 0.0f, true), b(Shape{1}, 0.0f, true), c(Shape{1}, 0.0f, true);
    std::vector<Tensor> both{a, b}, alone{c};
    AdamState s1, s2;
    for (int i = 0; i < 5; ++i) {
      a.grad()[0] = float(i) - 2.0f;
      b.grad()[0] = 7.0f;
      c.grad()[0] = float(i) - 2.0f;
      adam_step(both, s1, 1e-2f);
      adam_step(alone, s2, 1e-2f);
    }
    CHECK(a[0] == c[0]);
  }
  {
    Tensor w(Shape{2}, 0.0f, true);
    w.set_name("fire3.expand3.weight");
    w.grad()[1] = std::nanf("");
    std::vector<Tensor> ps{w};
    AdamState st;
    CHECK(error_of([&] { adam_step(ps, st, 1e-3f); }).find("fire3.expand3.weight") !=
          std::string::npos);
  }
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  CHECK(lr_at_epoch(0, c) == doctest::Approx(1e-3f));
  CHECK(lr_at_epoch(49, c) == doctest::Approx(1e-3f));
  CHECK(lr_at_epoch(50, c) == doctest::Approx(1e-4f));
  CHECK(lr_at_epoch(99, c) == doctest::Approx(1e-4f));
  CHECK(lr_at_epoch(100, c) == doctest::Approx(1e-5f));
  CHECK(lr_at_epoch(119, c) == doctest::Approx(1e-5f));
}

TEST_CASE("early stopping") {
  std::vector<double> rising;
  for (int i = 0; i < 100; ++i) {
    rising.push_back(i * 0.01);
    CHECK_FALSE(early_stop_check(rising, 10));
  }
  std::vector<double> h{0.1, 0.5, 0.9};
  for (int i = 1; i <= 10; ++i) {
    h.push_back(0.5);
    CHECK(early_stop_check(h, 10) == (i == 10));
  }
  // plateau at the best value does not reset the counter
  std::vector<double> flat{0.2, 0.7};
  for (int i = 1; i <= 10; ++i) {
    flat.push_back(0.7);
    CHECK(early_stop_check(flat, 10) == (i == 10));
  }
  CHECK_FALSE(early_stop_check({}, 1));
}

TEST_CASE("gradient norms") {
  Network net = Network::build(tiny_arch(4), 1);
  CHECK_THROWS_AS(log_grad_norms(net), std::logic_error);
  net.zero_grad();
  for (const auto& g : log_grad_norms(net)) CHECK(g.norm == 0.0f);

  Rng rng(16);
  for (auto& l : net.layers())
    for (auto& v : l.weight.grad()) v = rng.uniform(-1.0f, 1.0f);
  const auto norms = log_grad_norms(net);
  REQUIRE(norms.size() == net.layers().size());
  for (std::size_t i = 0; i < norms.size(); ++i) {
    double s = 0.0;
    for (float v : net.layers()[i].weight.grad()) s += double(v) * v;
    CHECK(norms[i].layer == net.layers()[i].name);
    CHECK(norms[i].norm == doctest::Approx(std::sqrt(s)).epsilon(1e-6));
  }
}

TEST_CASE("monitor mode leaves the CE gradient untouched") {
  toy::Net n = toy::make(21);
  auto params = n.params();
  std::vector<Tensor> ps, ws{n.w1, n.w2};
  for (auto* p : params) ps.push_back(*p);
  const std::vector<std::string> names{"w1", "w2"};
  auto fn = [&](Tape& t) { return toy::loss(t, n, SpikeMode::soft); };

  TrainConfig cfg;
  cfg.lambda = 1.0f;
  cfg.epsilon = 1.0f;
  const auto br = compute_gradients(fn, ps, ws, names, cfg);
  std::vector<std::vector<float>> monitor;
  for (auto& p : ps) monitor.emplace_back(p.grad().begin(), p.grad().end());

  for (auto& p : ps) p.zero_grad();
  Tape tape;
  Tensor l = fn(tape);
  backward(tape, l);
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t k = 0; k < monitor[i].size(); ++k) CHECK(monitor[i][k] == ps[i].grad()[k]);
  CHECK(br.ce == l.item());
  CHECK(br.total == br.ce + br.ga);
  CHECK(br.per_layer_grad_norms.size() == 2);
  CHECK(br.per_layer_grad_norms[0].layer == "w1");
}

TEST_CASE("exact mode matches finite differences of the full objective") {
  // J = f + lambda * sum_l (1 - g_l / (g_l + eps)), g_l = |df/dW_l|. f comes from
  // the double forward; g_l at shifted points from fresh tape gradients.
  toy::Net n = toy::make(22);
  auto raw = n.params();
  std::vector<Tensor> ps, ws{n.w1, n.w2};
  for (auto* p : raw) ps.push_back(*p);
  const std::vector<std::string> names{"w1", "w2"};
  auto fn = [&](Tape& t) { return toy::loss(t, n, SpikeMode::soft); };

  TrainConfig cfg;
  cfg.ga_mode = GaMode::exact;
  cfg.lambda = 1.0f;
  cfg.epsilon = 0.5f;

  auto norms_at = [&]() {
    for (auto& p : ps) p.zero_grad();
    Tape tape;
    Tensor l = fn(tape);
    backward(tape, l);
    std::vector<double> g;
    for (auto& w : ws) {
      double s = 0.0;
      for (float v : w.grad()) s += double(v) * v;
      g.push_back(std::sqrt(s));
    }
    return g;
  };
  auto objective = [&]() {
    double j = toy::loss_double(n, toy::widen(n));
    for (double g : norms_at()) j += cfg.lambda * (1.0 - g / (g + cfg.epsilon));
    return j;
  };

  for (auto& p : ps) p.zero_grad();
  compute_gradients(fn, ps, ws, names, cfg);
  std::vector<std::vector<float>> analytic;
  for (auto& p : ps) analytic.emplace_back(p.grad().begin(), p.grad().end());

  const double h = 1e-3;
  double diff2 = 0.0, ref2 = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t k = 0; k < ps[i].numel(); ++k) {
      const float keep = ps[i][k];
      ps[i][k] = float(keep + h);
      const double up = objective();
      ps[i][k] = float(keep - h);
      const double down = objective();
      ps[i][k] = keep;
      const double fd = (up - down) / (2 * h);
      diff2 += (fd - analytic[i][k]) * (fd - analytic[i][k]);
      ref2 += fd * fd;
    }
  }
  const double rel = std::sqrt(diff2 / ref2);
  CAPTURE(rel);
  CHECK(rel < 5e-3);

  // and the GA term really moved the gradient away from the CE one
  norms_at();
  double moved = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t k = 0; k < ps[i].numel(); ++k)
      moved = std::max(moved, std::abs(double(ps[i].grad()[k]) - analytic[i][k]));
  CHECK(moved > 1e-3);
}

TEST_CASE("training is deterministic") {
  const Dataset data = synth_blobs(3, 4, 6, 16);
  auto run = [&] {
    Network net = Network::build(tiny_arch(4), 42);
    Trainer tr(net, tiny_config());
    auto res = tr.fit(data, data);
    return std::make_pair(res, net.parameters());
  };
  const auto [a, pa] = run();
  const auto [b, pb] = run();
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.history[e].ga == b.history[e].ga);
    CHECK(a.history[e].val_acc == b.history[e].val_acc);
  }
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t k = 0; k < pa[i].numel(); ++k) CHECK(pa[i][k] == pb[i][k]);
}

TEST_CASE("loss decreases on a small synthetic set") {
  const Dataset data = synth_blobs(5, 4, 4, 16);
  Network net = Network::build(tiny_arch(4), 42);
  TrainConfig c = tiny_config();
  c.max_epochs = 50;
  c.patience = 1000;
  Trainer tr(net, c);
  const auto res = tr.fit(data, data);
  REQUIRE(res.history.size() == 50);
  CHECK(res.stop_reason == "max-epochs");
  CHECK(res.history.back().train_loss < res.history.front().train_loss);
  for (const auto& e : res.history) {
    CHECK(e.firing_rate >= 0.0);
    CHECK(e.firing_rate <= 1.0);
    CHECK(e.ga >= 0.0);
    CHECK(e.grad_norms.size() == net.layers().size());
  }
}

TEST_CASE("early stop ends training") {
  const Dataset data = synth_blobs(6, 2, 4, 16);
  Network net = Network::build(tiny_arch(2), 1);
  TrainConfig c = tiny_config();
  c.max_epochs = 200;
  c.patience = 2;
  c.lr = 1e-9f;  // nothing changes, so validation accuracy never improves
  Trainer tr(net, c);
  const auto res = tr.fit(data, data);
  CHECK(res.stop_reason == "early-stop");
  CHECK(res.history.size() == 3);
}

TEST_CASE("checkpoint round trip") {
  ArchSpec s = with_schedule(tiny_arch(10), "Alt-1");
  const Network net = Network::build(s, 9);
  const auto path = temp_file("round.snnw");
  save_checkpoint(net, path.string());
  const Network back = load_checkpoint(path.string());
  CHECK(back.spec() == net.spec());
  CHECK(to_text(back.spec()) == to_text(net.spec()));
  CHECK(back.parameter_count() == count_params(s));
  const auto a = net.parameters(), b = back.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].shape() == b[i].shape());
    CHECK(std::memcmp(a[i].data().data(), b[i].data().data(), a[i].numel() * 4) == 0);
  }
  // saving the loaded copy reproduces the same bytes
  const auto again = temp_file("again.snnw");
  save_checkpoint(back, again.string());
  CHECK(bytes_of(path) == bytes_of(again));
}

TEST_CASE("damaged checkpoints are rejected with a reason") {
  const Network net = Network::build(tiny_arch(3), 2);
  const auto path = temp_file("good.snnw");
  save_checkpoint(net, path.string());
  const auto good = bytes_of(path);
  const auto bad = temp_file("bad.snnw");

  auto magic = good;
  magic[0] = 'X';
  write_bytes(bad, magic);
  CHECK(error_of([&] { load_checkpoint(bad.string()); }).find("magic") != std::string::npos);

  auto version = good;
  version[4] = char(kCheckpointVersion + 1);
  write_bytes(bad, version);
  CHECK(error_of([&] { load_checkpoint(bad.string()); }).find("version") != std::string::npos);

  for (std::size_t cut : {std::size_t(2), std::size_t(10), good.size() / 2, good.size() - 1}) {
    write_bytes(bad, std::vector<char>(good.begin(), good.begin() + long(cut)));
    CAPTURE(cut);
    CHECK(error_of([&] { load_checkpoint(bad.string()); }).find("truncated") !=
          std::string::npos);
  }
  CHECK_FALSE(error_of([&] { load_checkpoint(temp_file("absent.snnw").string()); }).empty());
}

}  // TEST_SUITE
