#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"

#include "bat/baselines.hpp"
#include "bat/error.hpp"
#include "bat/scene.hpp"
#include "bat/sources.hpp"
#include "oracles.hpp"

using namespace bat;

namespace {

Eigen::MatrixXcd random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  Eigen::MatrixXcd A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = {d(rng), d(rng)};
  return A;
}

double objective(const Eigen::MatrixXcd& W, const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& T, double reg) {
  return (W * H - T).squaredNorm() + reg * W.squaredNorm();
}

MultiSignal noisy_plane_wave(const ArrayGeometry& g, double az, double snr_db, std::uint64_t seed) {
  const auto s = white_noise(16000, seed);
  auto x = synth_plane_wave(g, az, s);
  const double gain = std::pow(10.0, -snr_db / 20.0);
  for (std::size_t m = 0; m < x.size(); ++m) {
    const auto n = white_noise(x[m].size(), split_seed(seed, 100 + m));
    for (std::size_t i = 0; i < x[m].size(); ++i) x[m][i] += gain * n[i];
  }
  return x;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("MPDR with identity covariance is a / |a|^2") {
  const auto g = builtin_geometry("G1");
  const auto a = steering_vector_full(g, look_vector(35.0), 2000.0);
  const auto w = mpdr_weights(Eigen::MatrixXcd::Identity(5, 5), a);
  CHECK((w - a / a.squaredNorm()).norm() < 1e-14);
  CHECK(std::abs(w.dot(a) - 1.0) < 1e-14);
}

TEST_CASE("MPDR constraint holds for random loaded covariances") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const auto B = random_matrix(5, 5, seed);
    Eigen::MatrixXcd R = B * B.adjoint();
    R += 1e-3 * R.trace().real() / 5.0 * Eigen::MatrixXcd::Identity(5, 5);
    const auto a = random_matrix(5, 1, seed + 100).col(0);
    CHECK(std::abs(mpdr_weights(R, a).dot(a) - 1.0) < 1e-10);
  }
}

TEST_CASE("MPDR nulls a strong rank-1 interferer (closed-form inverse)") {
  const auto g = builtin_geometry("G1");
  const auto a = steering_vector_full(g, look_vector(0.0), 3000.0);
  const auto b = steering_vector_full(g, look_vector(120.0), 3000.0);
  const double power = 100.0, eps = 1e-2;
  const Eigen::MatrixXcd R = power * b * b.adjoint() + eps * Eigen::MatrixXcd::Identity(5, 5);
  const auto w = mpdr_weights(R, a);
  // Sherman-Morrison: R^-1 = (I - p b b^H / (eps + p |b|^2)) / eps.
  const Eigen::MatrixXcd Ri =
      (Eigen::MatrixXcd::Identity(5, 5) - power * b * b.adjoint() / (eps + power * b.squaredNorm())) / eps;
  const Eigen::VectorXcd wo = Ri * a / (a.dot(Ri * a));
  CHECK((w - wo).norm() < 1e-10 * wo.norm());
  CHECK(std::abs(w.dot(b)) < 1e-2 * std::abs(w.dot(a)));
}

TEST_CASE("MPDR errors") {
  CHECK_THROWS_AS(mpdr_weights(Eigen::MatrixXcd::Zero(3, 3), Eigen::VectorXcd::Ones(3)), NumericalError);
  CHECK_THROWS_AS(mpdr_weights(Eigen::MatrixXcd::Identity(3, 3), Eigen::VectorXcd::Ones(2)), DimensionError);
}

TEST_CASE("covariance is the loaded frame mean of outer products") {
  const auto x = noisy_plane_wave(builtin_geometry("G4"), 80.0, 10.0, 3);
  const auto X = stft(x, StftParams{});
  const auto R = covariance(X);
  REQUIRE(R.size() == 257);
  for (int f : {0, 33, 200}) {
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(3, 3);
    for (int l = 0; l < X.frames(); ++l) {
      Eigen::VectorXcd v(3);
      for (int m = 0; m < 3; ++m) v(m) = X(m, l, f);
      S += v * v.adjoint();
    }
    S /= X.frames();
    S += kCovarianceLoading * S.trace().real() / 3.0 * Eigen::MatrixXcd::Identity(3, 3);
    CHECK((R[f] - S).norm() < 1e-10 * S.norm());
  }
  Spectrogram Z(2, 4, StftParams{});
  CHECK((covariance(Z)[5] - Eigen::MatrixXcd::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("SRP-PHAT localizes a noisy on-grid source and ignores positive scaling") {
  const auto g = builtin_geometry("G1");
  const DirectionGrid grid;
  const auto X = stft(noisy_plane_wave(g, 90.0, 20.0, 5), StftParams{});
  const auto r = srp_phat(X, g, grid);
  CHECK(r.power.size() == 72);
  CHECK(std::abs(r.index - 18) <= 1);
  auto Y = X;
  for (auto& v : Y.data()) v *= 37.5;
  const auto s = srp_phat(Y, g, grid);
  CHECK(s.index == r.index);
  for (int j = 0; j < 72; ++j) CHECK(s.power[j] == doctest::Approx(r.power[j]).epsilon(1e-9));
}

TEST_CASE("SRP-PHAT front-back ambiguity of a two-mic pair resolves to the smaller azimuth") {
  ArrayGeometry pair{"pair", {{0, 0, 0}, {0.05, 0, 0}}, 0};
  const DirectionGrid grid;
  const auto s = white_noise(8000, 6);
  const auto front = srp_phat(stft(synth_plane_wave(pair, 60.0, s), StftParams{}), pair, grid);
  const auto back = srp_phat(stft(synth_plane_wave(pair, 300.0, s), StftParams{}), pair, grid);
  CHECK(front.index == 12);
  CHECK(back.index == 12);
  CHECK(back.azimuth_deg == 60.0);
}

TEST_CASE("SRP-PHAT errors") {
  const auto g = builtin_geometry("G1");
  Spectrogram Z(5, 10, StftParams{});
  CHECK_THROWS_AS(srp_phat(Z, g, DirectionGrid{}), DataError);
  Spectrogram W(3, 10, StftParams{});
  CHECK_THROWS_AS(srp_phat(W, g, DirectionGrid{}), DimensionError);
}

TEST_CASE("LBH: silence in, silence out; IPD follows the estimated HRTF pair") {
  const auto g = builtin_geometry("G1");
  const DirectionGrid grid;
  const auto hrtf = spherical_head_hrtf(grid);
  const StftParams p;
  Spectrogram Z(5, 20, p);
  const auto zero = lbh_render(Z, g, grid, hrtf);
  CHECK(zero.channels() == 2);
  for (const auto& v : zero.data()) CHECK(v == cplx{});

  const auto X = stft(synth_plane_wave(g, 45.0, white_noise(16000, 8)), p);
  const auto Y = lbh_render(X, g, grid, hrtf);
  const auto est = srp_phat(X, g, grid);
  CHECK(est.index == 9);
  const auto hl = hrir_response(hrtf.left[est.index], p);
  const auto hr = hrir_response(hrtf.right[est.index], p);
  for (int l = 10; l < Y.frames() - 10; l += 9)
    for (int f = 1; p.bin_hz(f) <= 1500.0; ++f) {
      const double ipd = std::arg(Y(0, l, f) * std::conj(Y(1, l, f)));
      const double ref = std::arg(hl[f] * std::conj(hr[f]));
      CHECK(std::abs(std::remainder(ipd - ref, 2.0 * std::numbers::pi)) < 0.1);
    }
}

TEST_CASE("MIF: identity H with reg 0 returns T") {
  const auto T = random_matrix(2, 2, 9);
  CHECK((mif_design_bin(Eigen::MatrixXcd::Identity(2, 2), T, 0.0) - T).norm() < 1e-14);
  CHECK_THROWS_AS(mif_design_bin(Eigen::MatrixXcd::Identity(2, 2), T, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(mif_design_bin(Eigen::MatrixXcd::Identity(2, 2), random_matrix(2, 3, 1), 0.1), DimensionError);
  CHECK_THROWS_AS(mif_design_bin(Eigen::MatrixXcd::Zero(3, 4), random_matrix(2, 4, 1), 0.0), NumericalError);
}

TEST_CASE("MIF: residual shrinks as reg decreases; design is a stationary minimum") {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const auto H = random_matrix(5, 72, seed);
    const auto T = random_matrix(2, 72, seed + 50);
    double prev = std::numeric_limits<double>::infinity();
    for (double reg : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
      const double r = (mif_design_bin(H, T, reg) * H - T).norm();
      CHECK(r <= prev * (1.0 + 1e-12));
      prev = r;
    }
    const auto W = mif_design_bin(H, T, 1e-4);
    const double base = objective(W, H, T, 1e-4);
    for (int i = 0; i < 2; ++i)
      for (int m = 0; m < 5; ++m)
        for (cplx d : {cplx(1e-4, 0), cplx(-1e-4, 0), cplx(0, 1e-4), cplx(0, -1e-4)}) {
          auto P = W;
          P(i, m) += d;
          CHECK(objective(P, H, T, 1e-4) >= base);
        }
  }
}

TEST_CASE("mif_apply: selection, zero and linearity") {
  const StftParams p;
  const auto X = stft(noisy_plane_wave(builtin_geometry("G1"), 10.0, 0.0, 11), p);
  MifFilterBank sel;
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(2, 5);
  S(0, 3) = 1.0;
  S(1, 1) = 1.0;
  sel.W.assign(257, S);
  const auto Y = mif_apply(sel, X);
  for (int l = 0; l < X.frames(); l += 5)
    for (int f = 0; f < 257; f += 3) {
      CHECK(Y(0, l, f) == X(3, l, f));
      CHECK(Y(1, l, f) == X(1, l, f));
    }

  MifFilterBank bank;
  for (int f = 0; f < 257; ++f) bank.W.push_back(random_matrix(2, 5, 1000 + f));
  Spectrogram Z(5, X.frames(), p, X.num_samples());
  for (const auto& v : mif_apply(bank, Z).data()) CHECK(v == cplx{});

  const auto X2 = stft(noisy_plane_wave(builtin_geometry("G1"), 200.0, 0.0, 12), p);
  auto mix = X;
  for (std::size_t i = 0; i < mix.data().size(); ++i) mix.data()[i] = 2.0 * X.data()[i] - 0.5 * X2.data()[i];
  const auto a = mif_apply(bank, X);
  const auto b = mif_apply(bank, X2);
  const auto c = mif_apply(bank, mix);
  for (std::size_t i = 0; i < c.data().size(); i += 11)
    CHECK(std::abs(c.data()[i] - (2.0 * a.data()[i] - 0.5 * b.data()[i])) < 1e-10);

  MifFilterBank narrow;
  narrow.W.assign(257, Eigen::MatrixXcd::Zero(2, 3));
  CHECK_THROWS_AS(mif_apply(narrow, X), DimensionError);
}

TEST_CASE("MIF model targets are HRTF times the reference ATF") {
  SceneSpec spec;
  spec.room.max_order = 1;
  spec.room.length_s = 0.05;
  spec.ambient_directions = 8;
  spec.trajectory = {{90.0, 1.2, 0.5}};
  const auto ac = simulate_scene_acoustics(spec, builtin_geometry("G1"));
  const auto hrtf = spherical_head_hrtf(DirectionGrid{});
  const StftParams p;
  const auto model = mif_model(ac, hrtf, p);
  REQUIRE(model.H.size() == 257);
  CHECK(model.H[10].rows() == 5);
  CHECK(model.H[10].cols() == 8);
  const int j = 3;
  const int idx = hrtf.index_of(ac.ambient_azimuths_deg[j]);
  const auto hl = hrir_response(hrtf.left[idx], p);
  Signal trunc(ac.ambient_rirs[j][0].begin(), ac.ambient_rirs[j][0].begin() + 512);
  const auto atf = oracle::dft(trunc, 512);
  for (int f = 0; f < 257; f += 16) {
    CHECK(std::abs(model.H[f](0, j) - atf[f]) < 1e-10);
    CHECK(std::abs(model.T[f](0, j) - hl[f] * atf[f]) < 1e-10);
  }
}

TEST_CASE("MIF filter bank file roundtrip") {
  MifFilterBank bank;
  bank.reg = 1e-4;
  bank.geometry = "G3";
  for (int f = 0; f < 257; ++f) bank.W.push_back(random_matrix(2, 5, f));
  const auto path = (std::filesystem::temp_directory_path() / "bat_mif_test.tensor").string();
  save_mif(bank, path);
  const auto back = load_mif(path);
  CHECK(back.reg == bank.reg);
  CHECK(back.geometry == "G3");
  REQUIRE(back.bins() == 257);
  for (int f = 0; f < 257; ++f) CHECK((back.W[f] - bank.W[f]).norm() == 0.0);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

}  // TEST_SUITE
