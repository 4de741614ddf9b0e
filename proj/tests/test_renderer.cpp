#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"

#include "bat/error.hpp"
#include "bat/renderer.hpp"
#include "bat/toy_model.hpp"
#include "bat/training.hpp"

using namespace bat;

namespace {

Spectrogram random_spec(int channels, int frames, const StftParams& p, unsigned seed) {
  Spectrogram X(channels, frames, p);
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  for (auto& v : X.data()) v = {d(rng), d(rng)};
  return X;
}

Eigen::VectorXd random_vec(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

// Under 500 parameters: 32-point frames, 4 bands, 4 directions, 4 DF bins.
ToyConfig tiny_config() {
  ToyConfig c;
  c.stft.frame_len = 32;
  c.stft.hop = 8;
  c.stft.fft_size = 32;
  c.erb_bands = 4;
  c.directions = 4;
  c.df_bins = 4;
  c.df_order = 1;
  c.lookahead = 0;
  c.hidden = 4;
  c.film_hidden = 2;
  return c;
}

ToyInput random_input(const ToyConfig& cfg, int frames, unsigned seed) {
  ToyInput in;
  in.features = Eigen::MatrixXd(cfg.input_dim(), frames);
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  for (Eigen::Index i = 0; i < in.features.size(); ++i) in.features.data()[i] = d(rng);
  in.reference = random_spec(1, frames, cfg.stft, seed + 1);
  return in;
}

Spectrogram duplicate(const Spectrogram& y1) {
  Spectrogram out(2, y1.frames(), y1.params(), y1.num_samples());
  for (int ch = 0; ch < 2; ++ch)
    for (int l = 0; l < y1.frames(); ++l)
      for (int f = 0; f < y1.bins(); ++f) out(ch, l, f) = y1(0, l, f);
  return out;
}

// All weights zero, masks saturated at 1, deep filter a delta at tap q.
ToyModel identity_model(const ToyConfig& cfg) {
  ToyModel m(cfg);
  m.layer("erb.b").setConstant(40.0);
  auto b = m.layer("df.b");
  for (int ear = 0; ear < 2; ++ear)
    for (int f = 0; f < cfg.df_bins; ++f) b(((ear * (cfg.df_order + 1) + cfg.lookahead) * cfg.df_bins + f) * 2, 0) = 1.0;
  return m;
}

}  // namespace

TEST_SUITE("renderer") {

TEST_CASE("FiLM: identity, zero scale and affinity") {
  const int E = 6;
  const auto e1 = random_vec(E, 1);
  const auto e2 = random_vec(E, 2);
  const auto id = FilmGenerator::constant(Eigen::VectorXd::Ones(E), Eigen::VectorXd::Zero(E));
  CHECK((film(e1, 0.3, id) - e1).norm() == 0.0);
  const auto delta = random_vec(E, 3);
  const auto zero = FilmGenerator::constant(Eigen::VectorXd::Zero(E), delta);
  CHECK((film(e1, 0.7, zero) - delta).norm() == 0.0);

  FilmGenerator g;
  g.w_in = random_vec(3, 4);
  g.b_in = random_vec(3, 5);
  g.w_beta = Eigen::MatrixXd::Random(E, 3);
  g.b_beta = random_vec(E, 6);
  g.w_delta = Eigen::MatrixXd::Random(E, 3);
  g.b_delta = random_vec(E, 7);
  for (double a : {0.0, 0.5, 1.0}) {
    const Eigen::VectorXd lhs = film(e1 + e2, a, g) - film(e2, a, g);
    const Eigen::VectorXd rhs = film(e1, a, g) - film(Eigen::VectorXd::Zero(E), a, g);
    CHECK((lhs - rhs).norm() < 1e-12);
  }
  CHECK_THROWS_AS(film(e1, 1.5, g), std::invalid_argument);
  CHECK_THROWS_AS(film(random_vec(E + 1, 8), 0.5, g), DimensionError);
}

TEST_CASE("ERB masks: ones, zeros and a single half band") {
  const StftParams p;
  const auto fb = build_erb_filterbank(32, p);
  const auto y1 = random_spec(1, 5, p, 9);
  ErbMaskPair m{5, 32, std::vector<double>(160, 1.0), std::vector<double>(160, 1.0)};
  const auto ones = apply_erb_masks(y1, m, fb);
  CHECK(ones.channels() == 2);
  for (int ch = 0; ch < 2; ++ch)
    for (int l = 0; l < 5; ++l)
      for (int f = 0; f < 257; ++f) CHECK(ones(ch, l, f) == y1(0, l, f));
  std::fill(m.left.begin(), m.left.end(), 0.0);
  std::fill(m.right.begin(), m.right.end(), 0.0);
  const auto zeros = apply_erb_masks(y1, m, fb);
  for (const auto& v : zeros.data()) CHECK(v == cplx{});

  std::fill(m.left.begin(), m.left.end(), 1.0);
  std::fill(m.right.begin(), m.right.end(), 1.0);
  m.left[2 * 32 + 20] = 0.5;
  const auto half = apply_erb_masks(y1, m, fb);
  for (int l = 0; l < 5; ++l)
    for (int f = 0; f < 257; ++f) {
      const bool hit = l == 2 && f >= fb.band_begin(20) && f < fb.band_end(20);
      CHECK(half(0, l, f) == (hit ? 0.5 * y1(0, l, f) : y1(0, l, f)));
      CHECK(half(1, l, f) == y1(0, l, f));
    }
  m.bands = 31;
  CHECK_THROWS_AS(apply_erb_masks(y1, m, fb), DimensionError);
}

TEST_CASE("deep filter: delta is the identity, zero silences the low bins") {
  const StftParams p;
  const auto yg = random_spec(2, 7, p, 10);
  for (int q : {0, 2}) {
    DeepFilterCoeffs C(2, 7, 5, q, 160);
    for (int ch = 0; ch < 2; ++ch)
      for (int l = 0; l < 7; ++l)
        for (int f = 0; f < 160; ++f) C(ch, l, q, f) = 1.0;
    const auto out = apply_deep_filter(yg, C);
    CHECK(out.data() == yg.data());
  }
  const DeepFilterCoeffs Z(2, 7, 5, 0, 160);
  const auto out = apply_deep_filter(yg, Z);
  for (int ch = 0; ch < 2; ++ch)
    for (int l = 0; l < 7; ++l)
      for (int f = 0; f < 257; ++f) CHECK(out(ch, l, f) == (f < 160 ? cplx{} : yg(ch, l, f)));
  CHECK_THROWS_AS(DeepFilterCoeffs(2, 7, 1, 2, 160), std::invalid_argument);
}

TEST_CASE("deep filter matches a direct summation on a 3-frame signal") {
  StftParams p;
  p.frame_len = p.fft_size = 32;
  p.hop = 8;
  const auto yg = random_spec(2, 3, p, 11);
  DeepFilterCoeffs C(2, 3, 2, 1, 10);
  std::mt19937 rng(12);
  std::normal_distribution<double> d;
  for (auto& v : C.data) v = {d(rng), d(rng)};
  const auto out = apply_deep_filter(yg, C);
  for (int ch = 0; ch < 2; ++ch)
    for (int l = 0; l < 3; ++l)
      for (int f = 0; f < 17; ++f) {
        cplx expect = yg(ch, l, f);
        if (f < 10) {
          expect = {};
          for (int i = 0; i <= 2; ++i) {
            const int src = l - i + 1;
            if (src >= 0 && src < 3) expect += C(ch, l, i, f) * yg(ch, src, f);
          }
        }
        CHECK(std::abs(out(ch, l, f) - expect) < 1e-13);
      }
}

TEST_CASE("compressed loss: zero at equality, hand example 0.8, nonnegative") {
  StftParams p;
  p.frame_len = p.fft_size = 32;
  p.hop = 8;
  const auto Y = random_spec(2, 4, p, 13);
  CHECK(compressed_loss(Y, Y) == 0.0);
  Spectrogram a(1, 1, p), b(1, 1, p);
  a(0, 0, 0) = 1.0;
  b(0, 0, 0) = std::polar(1.0, std::numbers::pi);
  CHECK(compressed_loss(a, b, 0.3, 0.2) == doctest::Approx(0.8).epsilon(1e-14));
  for (unsigned s = 0; s < 10; ++s) {
    const auto Yh = random_spec(2, 4, p, 100 + s);
    CHECK(compressed_loss(Y, Yh) > 0.0);
  }
  CHECK_THROWS_AS(compressed_loss(Y, a), DimensionError);
  CHECK_THROWS_AS(compressed_loss(Y, Y, 0.0, 0.2), std::invalid_argument);
}

TEST_CASE("single-bin loss gradient matches central differences") {
  StftParams p;
  p.frame_len = p.fft_size = 32;
  p.hop = 8;
  std::mt19937 rng(14);
  std::normal_distribution<double> d;
  for (int t = 0; t < 20; ++t) {
    const cplx y(d(rng), d(rng));
    const cplx u(d(rng), d(rng));
    auto loss = [&](cplx v) {
      Spectrogram A(1, 1, p), B(1, 1, p);
      A(0, 0, 0) = y;
      B(0, 0, 0) = v;
      return compressed_loss(A, B);
    };
    const double h = 1e-6;
    const double gr = (loss(u + h) - loss(u - h)) / (2 * h);
    const double gi = (loss(u + cplx(0, h)) - loss(u - cplx(0, h))) / (2 * h);
    const cplx g = compressed_loss_grad(y, u);
    CHECK(g.real() == doctest::Approx(gr).epsilon(1e-6));
    CHECK(g.imag() == doctest::Approx(gi).epsilon(1e-6));
  }
  CHECK(compressed_loss_grad(cplx(1, 1), cplx(0, 0)) == cplx{});
}

TEST_CASE("toy model: deterministic, (2, L, F) output, identity parameters duplicate Y1") {
  const auto cfg = tiny_config();
  const auto in = random_input(cfg, 6, 15);
  const auto model = ToyModel::initialized(cfg, 3);
  const auto a = model.forward(in, 0.3);
  const auto b = model.forward(in, 0.3);
  CHECK(a.data() == b.data());
  CHECK(a.channels() == 2);
  CHECK(a.frames() == 6);
  CHECK(a.bins() == 17);
  CHECK(model.forward(in, 0.0).data() != model.forward(in, 1.0).data());

  const auto id = identity_model(cfg);
  const auto out = id.forward(in, 0.5);
  CHECK(out.data() == duplicate(in.reference).data());
  CHECK_THROWS_AS(model.forward(in, -0.1), std::invalid_argument);
}

TEST_CASE("toy gradient matches central differences on every coordinate") {
  const auto cfg = tiny_config();
  auto model = ToyModel::initialized(cfg, 5);
  REQUIRE(model.parameter_count() <= 500);
  const auto in = random_input(cfg, 5, 16);
  const auto target = random_spec(2, 5, cfg.stft, 17);
  for (double alpha : {0.0, 0.7}) {
    std::vector<double> grad;
    model.loss_and_gradient(in, target, alpha, &grad);
    REQUIRE(grad.size() == model.parameter_count());
    const double h = 1e-5;
    int bad = 0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double keep = model.params()[i];
      model.params()[i] = keep + h;
      const double up = model.loss_and_gradient(in, target, alpha, nullptr);
      model.params()[i] = keep - h;
      const double down = model.loss_and_gradient(in, target, alpha, nullptr);
      model.params()[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double scale = std::max(std::abs(fd), std::abs(grad[i]));
      if (std::abs(fd - grad[i]) > 1e-4 * scale + 1e-9) {
        ++bad;
        MESSAGE("coordinate " << i << ": analytic " << grad[i] << " numeric " << fd);
      }
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("a coordinate with no effect on the output has zero gradient") {
  const auto cfg = tiny_config();
  auto model = ToyModel::initialized(cfg, 6);
  // Embedding unit 0 is multiplied by a zero scale and shifted by zero, so
  // the encoder row feeding it cannot influence the loss.
  model.layer("film.w_beta").row(0).setZero();
  model.layer("film.b_beta")(0, 0) = 0.0;
  model.layer("film.w_delta").row(0).setZero();
  model.layer("film.b_delta")(0, 0) = 0.0;
  const auto in = random_input(cfg, 5, 18);
  const auto target = random_spec(2, 5, cfg.stft, 19);
  std::vector<double> grad;
  model.loss_and_gradient(in, target, 0.5, &grad);
  const auto& enc2 = model.manifest()[2];
  REQUIRE(enc2.name == "enc2.w");
  for (int c = 0; c < enc2.cols; ++c) CHECK(grad[enc2.offset + static_cast<std::size_t>(c) * enc2.rows] == 0.0);
  const auto& enc2b = model.manifest()[3];
  CHECK(grad[enc2b.offset] == 0.0);
}

TEST_CASE("gradient vanishes at a perfect-reconstruction point") {
  const auto cfg = tiny_config();
  const auto model = identity_model(cfg);
  const auto in = random_input(cfg, 5, 20);
  std::vector<double> grad;
  const double loss = model.loss_and_gradient(in, duplicate(in.reference), 0.5, &grad);
  CHECK(loss == 0.0);
  double norm = 0.0;
  for (double g : grad) norm += g * g;
  CHECK(std::sqrt(norm) < 1e-8);
}

TEST_CASE("training with lr = 0 leaves the parameters unchanged") {
  const auto cfg = tiny_config();
  auto model = ToyModel::initialized(cfg, 7);
  const auto before = model.params();
  ToyExample clip;
  clip.id = "c";
  clip.input = random_input(cfg, 5, 21);
  clip.alphas = kAlphaSet;
  for (std::size_t k = 0; k < kAlphaSet.size(); ++k) clip.targets.push_back(random_spec(2, 5, cfg.stft, 30 + k));
  TrainOptions opts;
  opts.steps = 20;
  opts.lr = 0.0;
  opts.eval_every = 5;
  const auto r = train_toy(model, {clip}, opts);
  CHECK(model.params() == before);
  CHECK(r.trace.size() == 20);
  CHECK(r.final_loss == r.initial_loss);
  for (const auto& t : r.trace) CHECK(t.loss == cross_alpha_loss(model, clip, t.alpha, t.alpha));
}

TEST_CASE("training reduces the loss on a tiny problem and is reproducible") {
  const auto cfg = tiny_config();
  ToyExample clip;
  clip.id = "c";
  clip.input = random_input(cfg, 6, 22);
  clip.alphas = kAlphaSet;
  for (double a : kAlphaSet) {
    auto t = duplicate(clip.input.reference);
    for (auto& v : t.data()) v *= 0.5 + 0.4 * a;
    clip.targets.push_back(t);
  }
  TrainOptions opts;
  opts.steps = 200;
  opts.lr = 1e-2;
  opts.seed = 3;
  auto m1 = ToyModel::initialized(cfg, 8);
  auto m2 = ToyModel::initialized(cfg, 8);
  const auto r1 = train_toy(m1, {clip}, opts);
  const auto r2 = train_toy(m2, {clip}, opts);
  CHECK(r1.final_loss < r1.initial_loss);
  CHECK(trace_csv(r1.trace) == trace_csv(r2.trace));
  CHECK(m1.params() == m2.params());
  CHECK(trace_csv(r1.trace).rfind("step,alpha,loss\n", 0) == 0);
}

TEST_CASE("checkpoint roundtrip and manifest mismatch") {
  namespace fs = std::filesystem;
  const auto cfg = tiny_config();
  const auto model = ToyModel::initialized(cfg, 9);
  const auto dir = fs::temp_directory_path() / "bat_ckpt_test";
  fs::create_directories(dir);
  const auto bin = (dir / "m.bin").string();
  const auto js = (dir / "m.json").string();
  save_checkpoint(model, bin, js);
  const auto back = load_checkpoint(bin, js);
  CHECK(back.params() == model.params());
  CHECK(to_json(back.config()) == to_json(cfg));

  auto other = cfg;
  other.hidden = 5;
  save_checkpoint(ToyModel(other), bin, (dir / "other.json").string());
  CHECK_THROWS_AS(load_checkpoint(bin, js), DataError);
  fs::remove_all(dir);
}

TEST_CASE("toy config JSON is strict") {
  const auto j = to_json(ToyConfig{});
  CHECK(to_json(toy_config_from_json(j)) == j);
  auto bad = j;
  bad["depth"] = 3;
  CHECK_THROWS_AS(toy_config_from_json(bad), ConfigError);
  bad = j;
  bad["lookahead"] = 9;
  CHECK_THROWS_AS(toy_config_from_json(bad), ConfigError);
  CHECK(ToyConfig{}.df_outputs() == 2 * 6 * 160 * 2);
}

}  // TEST_SUITE
