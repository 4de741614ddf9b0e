#include "bat/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include "bat/error.hpp"
#include "bat/io.hpp"
#include "bat/score.hpp"
#include "bat/sources.hpp"

namespace bat {
namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

cplx compress(cplx v, double c) {
  const double r = std::abs(v);
  return r > 0.0 ? v * std::pow(r, c - 1.0) : cplx{};
}

Mat sigmoid(const Mat& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

}  // namespace

void ToyConfig::validate() const {
  stft.validate();
  if (erb_bands < 1 || erb_bands > stft.num_bins()) throw ConfigError("toy: erb_bands out of range");
  if (directions < 1) throw ConfigError("toy: directions must be positive");
  if (df_bins < 0 || df_bins > stft.num_bins()) throw ConfigError("toy: df_bins out of range");
  if (df_order < 0 || lookahead < 0 || lookahead > df_order)
    throw ConfigError("toy: need 0 <= lookahead <= df_order");
  if (hidden < 1 || film_hidden < 1) throw ConfigError("toy: layer widths must be positive");
}

nlohmann::json to_json(const ToyConfig& c) {
  return {{"sample_rate", c.stft.sample_rate},
          {"frame_len", c.stft.frame_len},
          {"hop", c.stft.hop},
          {"fft_size", c.stft.fft_size},
          {"erb_bands", c.erb_bands},
          {"directions", c.directions},
          {"df_bins", c.df_bins},
          {"df_order", c.df_order},
          {"lookahead", c.lookahead},
          {"hidden", c.hidden},
          {"film_hidden", c.film_hidden}};
}

ToyConfig toy_config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> keys{"sample_rate", "frame_len", "hop",       "fft_size",
                                             "erb_bands",   "directions", "df_bins",  "df_order",
                                             "lookahead",   "hidden",     "film_hidden"};
  if (!j.is_object()) throw ConfigError("toy config: expected an object");
  for (const auto& [k, _] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("toy config: unknown field '" + k + "'");
  ToyConfig c;
  try {
    c.stft.sample_rate = j.value("sample_rate", c.stft.sample_rate);
    c.stft.frame_len = j.value("frame_len", c.stft.frame_len);
    c.stft.hop = j.value("hop", c.stft.hop);
    c.stft.fft_size = j.value("fft_size", c.stft.fft_size);
    c.erb_bands = j.value("erb_bands", c.erb_bands);
    c.directions = j.value("directions", c.directions);
    c.df_bins = j.value("df_bins", c.df_bins);
    c.df_order = j.value("df_order", c.df_order);
    c.lookahead = j.value("lookahead", c.lookahead);
    c.hidden = j.value("hidden", c.hidden);
    c.film_hidden = j.value("film_hidden", c.film_hidden);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("toy config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("toy config: ") + e.what());
  }
  return c;
}

ToyInput make_toy_input(const Spectrogram& X, const ArrayGeometry& geom, const ToyConfig& cfg) {
  cfg.validate();
  if (!(X.params() == cfg.stft)) throw_dimension("make_toy_input: STFT parameters differ from the model's");
  if (X.channels() != geom.size()) throw_dimension("make_toy_input: channel count does not match the geometry");
  const int L = X.frames();
  const int B = cfg.erb_bands;
  const int J = cfg.directions;
  const auto fb = build_erb_filterbank(B, cfg.stft);
  const int ref = geom.reference_index;

  ToyInput in;
  in.reference = X.select_channels(std::vector<int>{ref});
  in.features = Mat::Zero(cfg.input_dim(), L);

  const DirectionGrid grid(J);
  const auto es = erb_score(score_tensor(X, geom, grid), fb);
  for (int l = 0; l < L; ++l) {
    auto col = in.features.col(l);
    for (int b = 0; b < B; ++b) {
      double p = 0.0;
      for (int f = fb.band_begin(b); f < fb.band_end(b); ++f) p += std::norm(X(ref, l, f));
      col(b) = std::log10(p / fb.normalizer(b) + 1e-10);
      for (int j = 0; j < J; ++j) col(B + b * J + j) = es.at(l, b, j);
    }
    for (int f = 0; f < cfg.df_bins; ++f) {
      const cplx v = compress(X(ref, l, f), kLossCompression);
      col(B + J * B + 2 * f) = v.real();
      col(B + J * B + 2 * f + 1) = v.imag();
    }
  }
  return in;
}

ToyModel::ToyModel(const ToyConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int D = cfg_.input_dim();
  const int H = cfg_.hidden;
  const int Hf = cfg_.film_hidden;
  const int B2 = 2 * cfg_.erb_bands;
  const int P = cfg_.df_outputs();
  const std::vector<std::tuple<const char*, int, int>> shapes{
      {"enc1.w", H, D},         {"enc1.b", H, 1},       {"enc2.w", H, H},          {"enc2.b", H, 1},
      {"film.w_in", Hf, 1},     {"film.b_in", Hf, 1},   {"film.w_beta", H, Hf},    {"film.b_beta", H, 1},
      {"film.w_delta", H, Hf},  {"film.b_delta", H, 1}, {"erb.w", B2, H},          {"erb.b", B2, 1},
      {"df.w", P, H},           {"df.b", P, 1}};
  std::size_t offset = 0;
  for (const auto& [name, r, c] : shapes) {
    layers_.push_back({name, r, c, offset});
    offset += static_cast<std::size_t>(r) * c;
  }
  params_.assign(offset, 0.0);
}

Eigen::Map<Eigen::MatrixXd> ToyModel::layer(const std::string& name) {
  for (const auto& s : layers_)
    if (s.name == name) return {params_.data() + s.offset, s.rows, s.cols};
  throw std::invalid_argument("ToyModel: no layer " + name);
}

Eigen::Map<const Eigen::MatrixXd> ToyModel::layer(const std::string& name) const {
  for (const auto& s : layers_)
    if (s.name == name) return {params_.data() + s.offset, s.rows, s.cols};
  throw std::invalid_argument("ToyModel: no layer " + name);
}

ToyModel ToyModel::initialized(const ToyConfig& cfg, std::uint64_t seed) {
  ToyModel m(cfg);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](const std::string& name, double stddev) {
    auto w = m.layer(name);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = stddev * normal(rng);
  };
  const double H = cfg.hidden;
  fill("enc1.w", 1.0 / std::sqrt(static_cast<double>(cfg.input_dim())));
  fill("enc2.w", 1.0 / std::sqrt(H));
  fill("film.w_in", 1.0);
  fill("film.b_in", 0.5);
  fill("film.w_beta", 0.1 / std::sqrt(static_cast<double>(cfg.film_hidden)));
  fill("film.w_delta", 0.1 / std::sqrt(static_cast<double>(cfg.film_hidden)));
  m.layer("film.b_beta").setOnes();
  fill("erb.w", 0.1 / std::sqrt(H));
  m.layer("erb.b").setConstant(2.0);
  fill("df.w", 0.01 / std::sqrt(H));
  auto df_b = m.layer("df.b");
  for (int ear = 0; ear < 2; ++ear)
    for (int f = 0; f < cfg.df_bins; ++f)
      df_b(((ear * (cfg.df_order + 1) + cfg.lookahead) * cfg.df_bins + f) * 2, 0) = 1.0;
  return m;
}

FilmGenerator ToyModel::film_generator() const {
  FilmGenerator g;
  g.w_in = layer("film.w_in");
  g.b_in = layer("film.b_in");
  g.w_beta = layer("film.w_beta");
  g.b_beta = layer("film.b_beta");
  g.w_delta = layer("film.w_delta");
  g.b_delta = layer("film.b_delta");
  return g;
}

struct ToyModel::Cache {
  Mat h1, e, z, mask, df;
  Vec g, beta, delta;
  Outputs out;
};

void ToyModel::run(const ToyInput& in, double alpha, Cache& k) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("toy_forward: alpha must lie in [0, 1]");
  if (in.features.rows() != cfg_.input_dim()) throw_dimension("toy_forward: feature size does not match the model");
  if (in.reference.channels() != 1 || in.reference.frames() != in.features.cols() ||
      !(in.reference.params() == cfg_.stft))
    throw_dimension("toy_forward: reference spectrum does not match the features");
  const int L = static_cast<int>(in.features.cols());
  const int B = cfg_.erb_bands;
  const int N = cfg_.df_order;
  const int Fd = cfg_.df_bins;

  k.h1 = ((layer("enc1.w") * in.features).colwise() + Vec(layer("enc1.b"))).array().tanh().matrix();
  k.e = ((layer("enc2.w") * k.h1).colwise() + Vec(layer("enc2.b"))).array().tanh().matrix();
  k.g = (Vec(layer("film.w_in")) * alpha + Vec(layer("film.b_in"))).array().tanh().matrix();
  k.beta = layer("film.w_beta") * k.g + Vec(layer("film.b_beta"));
  k.delta = layer("film.w_delta") * k.g + Vec(layer("film.b_delta"));
  k.z = (k.e.array().colwise() * k.beta.array()).matrix();
  k.z.colwise() += k.delta;
  k.mask = sigmoid((layer("erb.w") * k.z).colwise() + Vec(layer("erb.b")));
  k.df = (layer("df.w") * k.z).colwise() + Vec(layer("df.b"));

  auto& o = k.out;
  o.masks.frames = L;
  o.masks.bands = B;
  o.masks.left.resize(static_cast<std::size_t>(L) * B);
  o.masks.right.resize(static_cast<std::size_t>(L) * B);
  for (int l = 0; l < L; ++l)
    for (int b = 0; b < B; ++b) {
      o.masks.left[static_cast<std::size_t>(l) * B + b] = k.mask(b, l);
      o.masks.right[static_cast<std::size_t>(l) * B + b] = k.mask(B + b, l);
    }
  o.coeffs = DeepFilterCoeffs(2, L, N, cfg_.lookahead, Fd);
  for (int ear = 0; ear < 2; ++ear)
    for (int l = 0; l < L; ++l)
      for (int i = 0; i <= N; ++i)
        for (int f = 0; f < Fd; ++f) {
          const int r = ((ear * (N + 1) + i) * Fd + f) * 2;
          o.coeffs(ear, l, i, f) = cplx(k.df(r, l), k.df(r + 1, l));
        }
  const auto fb = build_erb_filterbank(B, cfg_.stft);
  o.masked = apply_erb_masks(in.reference, o.masks, fb);
  o.output = apply_deep_filter(o.masked, o.coeffs);
}

ToyModel::Outputs ToyModel::forward_all(const ToyInput& in, double alpha) const {
  Cache k;
  run(in, alpha, k);
  return std::move(k.out);
}

Spectrogram ToyModel::forward(const ToyInput& in, double alpha) const { return forward_all(in, alpha).output; }

double ToyModel::loss_and_gradient(const ToyInput& in, const Spectrogram& target, double alpha,
                                   std::vector<double>* grad) const {
  Cache k;
  run(in, alpha, k);
  const auto& out = k.out.output;
  if (!target.same_shape(out)) throw_dimension("loss_gradient: target shape does not match the model output");
  const double loss = compressed_loss(target, out);
  if (!std::isfinite(loss)) throw_numerical("loss_gradient: non-finite loss");
  if (!grad) return loss;

  const int L = out.frames();
  const int F = out.bins();
  const int B = cfg_.erb_bands;
  const int N = cfg_.df_order;
  const int q = cfg_.lookahead;
  const int Fd = cfg_.df_bins;
  const auto fb = build_erb_filterbank(B, cfg_.stft);
  const auto& masked = k.out.masked;
  const auto& C = k.out.coeffs;

  // Complex gradients (d/dRe + i d/dIm) flowing back through the deep filter.
  Spectrogram g_masked(2, L, cfg_.stft, out.num_samples());
  Mat d_df = Mat::Zero(k.df.rows(), L);
  for (int ear = 0; ear < 2; ++ear) {
    for (int l = 0; l < L; ++l) {
      for (int f = 0; f < F; ++f) {
        const cplx g = compressed_loss_grad(target(ear, l, f), out(ear, l, f));
        if (f >= Fd) {
          g_masked(ear, l, f) += g;
          continue;
        }
        for (int i = 0; i <= N; ++i) {
          const int src = l - i + q;
          if (src < 0 || src >= L) continue;
          const cplx gc = g * std::conj(masked(ear, src, f));
          const int r = ((ear * (N + 1) + i) * Fd + f) * 2;
          d_df(r, l) += gc.real();
          d_df(r + 1, l) += gc.imag();
          g_masked(ear, src, f) += g * std::conj(C(ear, l, i, f));
        }
      }
    }
  }
  Mat d_mask = Mat::Zero(2 * B, L);
  for (int ear = 0; ear < 2; ++ear)
    for (int l = 0; l < L; ++l)
      for (int f = 0; f < F; ++f)
        d_mask(ear * B + fb.band_of_bin(f), l) += std::real(std::conj(g_masked(ear, l, f)) * in.reference(0, l, f));
  const Mat d_mask_logit = (d_mask.array() * k.mask.array() * (1.0 - k.mask.array())).matrix();

  grad->assign(params_.size(), 0.0);
  auto gl = [&](const std::string& name) -> Eigen::Map<Mat> {
    for (const auto& s : layers_)
      if (s.name == name) return {grad->data() + s.offset, s.rows, s.cols};
    throw std::logic_error(name);
  };
  gl("erb.w") = d_mask_logit * k.z.transpose();
  gl("erb.b") = d_mask_logit.rowwise().sum();
  gl("df.w") = d_df * k.z.transpose();
  gl("df.b") = d_df.rowwise().sum();
  const Mat d_z = layer("erb.w").transpose() * d_mask_logit + layer("df.w").transpose() * d_df;

  const Vec d_beta = (d_z.array() * k.e.array()).rowwise().sum().matrix();
  const Vec d_delta = d_z.rowwise().sum();
  const Mat d_e = (d_z.array().colwise() * k.beta.array()).matrix();
  gl("film.w_beta") = d_beta * k.g.transpose();
  gl("film.b_beta") = d_beta;
  gl("film.w_delta") = d_delta * k.g.transpose();
  gl("film.b_delta") = d_delta;
  const Vec d_g = layer("film.w_beta").transpose() * d_beta + layer("film.w_delta").transpose() * d_delta;
  const Vec d_g_pre = (d_g.array() * (1.0 - k.g.array().square())).matrix();
  gl("film.w_in") = d_g_pre * alpha;
  gl("film.b_in") = d_g_pre;

  const Mat d_a2 = (d_e.array() * (1.0 - k.e.array().square())).matrix();
  gl("enc2.w") = d_a2 * k.h1.transpose();
  gl("enc2.b") = d_a2.rowwise().sum();
  const Mat d_h1 = layer("enc2.w").transpose() * d_a2;
  const Mat d_a1 = (d_h1.array() * (1.0 - k.h1.array().square())).matrix();
  gl("enc1.w") = d_a1 * in.features.transpose();
  gl("enc1.b") = d_a1.rowwise().sum();
  return loss;
}

void save_checkpoint(const ToyModel& model, const std::string& bin_path, const std::string& manifest_path) {
  io::Tensor t;
  t.dtype = io::DType::Float64;
  t.tag = "toy_params";
  t.shape = {static_cast<std::uint64_t>(model.parameter_count())};
  t.real = model.params();
  io::write_tensor(bin_path, t);
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& s : model.manifest())
    layers.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}, {"offset", s.offset}});
  nlohmann::json j{{"config", to_json(model.config())},
                   {"parameter_count", model.parameter_count()},
                   {"layers", layers}};
  io::write_file_atomic(manifest_path, j.dump(2) + "\n");
}

ToyModel load_checkpoint(const std::string& bin_path, const std::string& manifest_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path + ": " + e.what());
  }
  if (!j.contains("config")) throw DataError(manifest_path + ": missing config");
  ToyModel model(toy_config_from_json(j.at("config")));
  const auto t = io::read_tensor(bin_path);
  if (t.dtype != io::DType::Float64 || t.real.size() != model.parameter_count())
    throw DataError(bin_path + ": parameter count does not match the manifest");
  if (j.value("parameter_count", std::size_t{0}) != model.parameter_count())
    throw DataError(manifest_path + ": parameter count does not match the layer layout");
  model.params() = t.real;
  return model;
}

}  // namespace bat
