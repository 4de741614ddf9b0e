#include "bat/baselines.hpp"

#include <cmath>
#include <numbers>

#include "json.hpp"

#include "bat/dsp.hpp"
#include "bat/error.hpp"
#include "bat/io.hpp"

namespace bat {

SrpResult srp_phat(const Spectrogram& X, const ArrayGeometry& geom, const DirectionGrid& grid, double c) {
  geom.validate();
  const int M = geom.size();
  if (X.channels() != M) throw_dimension("srp_phat: channel count does not match the geometry");
  const int L = X.frames();
  const int F = X.bins();

  // Frame-summed PHAT cross-spectra per pair and bin.
  std::vector<std::pair<int, int>> pairs;
  for (int m = 0; m < M; ++m)
    for (int n = m + 1; n < M; ++n) pairs.emplace_back(m, n);
  std::vector<cplx> psi(pairs.size() * static_cast<std::size_t>(F), cplx{});
  bool any = false;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (int l = 0; l < L; ++l) {
      const auto xm = X.frame(pairs[p].first, l);
      const auto xn = X.frame(pairs[p].second, l);
      for (int f = 1; f < F; ++f) {
        const cplx cross = xm[f] * std::conj(xn[f]);
        const double mag = std::abs(cross);
        if (mag > 0.0) {
          psi[p * F + f] += cross / mag;
          any = true;
        }
      }
    }
  }
  if (!any) throw DataError("srp_phat: all-zero input");

  SrpResult out;
  out.power.assign(static_cast<std::size_t>(grid.size()), 0.0);
  for (int f = 1; f < F; ++f) {
    const double hz = X.params().bin_hz(f);
    for (int j = 0; j < grid.size(); ++j) {
      const auto a = steering_vector_full(geom, grid.look(j), hz, c);
      double acc = 0.0;
      for (std::size_t p = 0; p < pairs.size(); ++p)
        acc += std::real(psi[p * F + f] * std::conj(a(pairs[p].first)) * a(pairs[p].second));
      out.power[j] += acc;
    }
  }
  double best = out.power[0];
  for (double v : out.power) best = std::max(best, v);
  const double tol = 1e-9 * std::max(std::abs(best), 1e-300);
  for (int j = 0; j < grid.size(); ++j) {
    if (out.power[j] >= best - tol) {
      out.index = j;
      break;
    }
  }
  out.azimuth_deg = grid.azimuth_deg(out.index);
  return out;
}

std::vector<Eigen::MatrixXcd> covariance(const Spectrogram& X, double loading) {
  const int M = X.channels();
  std::vector<Eigen::MatrixXcd> R(static_cast<std::size_t>(X.bins()), Eigen::MatrixXcd::Zero(M, M));
  Eigen::VectorXcd x(M);
  for (int f = 0; f < X.bins(); ++f) {
    for (int l = 0; l < X.frames(); ++l) {
      for (int m = 0; m < M; ++m) x(m) = X(m, l, f);
      R[f].noalias() += x * x.adjoint();
    }
    if (X.frames() > 0) R[f] /= static_cast<double>(X.frames());
    R[f] = (R[f] + R[f].adjoint()).eval() * 0.5;
    const double tr = R[f].trace().real();
    if (tr > 0.0) {
      R[f].diagonal().array() += loading * tr / M;
    } else {
      R[f].setIdentity();
    }
  }
  return R;
}

Eigen::VectorXcd mpdr_weights(const Eigen::MatrixXcd& R, const Eigen::VectorXcd& a) {
  if (R.rows() != R.cols() || R.rows() != a.size()) throw_dimension("mpdr_weights: shape mismatch");
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(R);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) throw_numerical("mpdr_weights: singular covariance");
  const Eigen::VectorXcd ri_a = ldlt.solve(a);
  const cplx denom = a.dot(ri_a);  // a^H R^-1 a
  if (!(std::abs(denom) > 0.0)) throw_numerical("mpdr_weights: degenerate steering vector");
  return ri_a / denom;
}

Spectrogram lbh_render(const Spectrogram& X, const ArrayGeometry& geom, const DirectionGrid& grid,
                       const HrtfSet& hrtf, double c) {
  Spectrogram out(2, X.frames(), X.params(), X.num_samples());
  bool silent = true;
  for (const auto& v : X.data())
    if (v != cplx{}) {
      silent = false;
      break;
    }
  if (silent) return out;

  const auto loc = srp_phat(X, geom, grid, c);
  const int idx = hrtf.index_of(loc.azimuth_deg);
  const auto hl = hrir_response(hrtf.left[idx], X.params());
  const auto hr = hrir_response(hrtf.right[idx], X.params());
  const auto R = covariance(X);
  const int M = X.channels();
  Eigen::VectorXcd x(M);
  for (int f = 0; f < X.bins(); ++f) {
    const auto a = steering_vector_full(geom, grid.look(loc.index), X.params().bin_hz(f), c);
    const Eigen::VectorXcd w = mpdr_weights(R[f], a);
    for (int l = 0; l < X.frames(); ++l) {
      for (int m = 0; m < M; ++m) x(m) = X(m, l, f);
      const cplx y = w.dot(x);  // w^H x
      out(0, l, f) = hl[f] * y;
      out(1, l, f) = hr[f] * y;
    }
  }
  return out;
}

Eigen::MatrixXcd mif_design_bin(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& T, double reg) {
  if (!(reg >= 0.0)) throw std::invalid_argument("mif_design: reg must be nonnegative");
  if (H.cols() != T.cols()) throw_dimension("mif_design: H and T disagree on the direction count");
  const Eigen::Index M = H.rows();
  const Eigen::MatrixXcd G = H * H.adjoint() + reg * Eigen::MatrixXcd::Identity(M, M);
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(G);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-13))
    throw_numerical("mif_design: H H^H + reg I is singular");
  // (H H^H + reg I) W^H = H T^H
  return ldlt.solve(H * T.adjoint()).adjoint();
}

MifFilterBank mif_design(const std::vector<Eigen::MatrixXcd>& H, const std::vector<Eigen::MatrixXcd>& T,
                         double reg) {
  if (H.size() != T.size()) throw_dimension("mif_design: H and T bin counts differ");
  MifFilterBank bank;
  bank.reg = reg;
  bank.W.reserve(H.size());
  for (std::size_t f = 0; f < H.size(); ++f) bank.W.push_back(mif_design_bin(H[f], T[f], reg));
  return bank;
}

Spectrogram mif_apply(const MifFilterBank& bank, const Spectrogram& X) {
  if (bank.bins() != X.bins() || bank.mics() != X.channels()) throw_dimension("mif_apply: filter bank does not match input");
  const int rows = static_cast<int>(bank.W.front().rows());
  Spectrogram out(rows, X.frames(), X.params(), X.num_samples());
  Eigen::VectorXcd x(X.channels());
  for (int f = 0; f < X.bins(); ++f) {
    for (int l = 0; l < X.frames(); ++l) {
      for (int m = 0; m < X.channels(); ++m) x(m) = X(m, l, f);
      const Eigen::VectorXcd y = bank.W[f] * x;
      for (int r = 0; r < rows; ++r) out(r, l, f) = y(r);
    }
  }
  return out;
}

MifModel mif_model(const SceneAcoustics& ac, const HrtfSet& hrtf, const StftParams& params) {
  const int M = ac.array.size();
  const int J = static_cast<int>(ac.ambient_rirs.size());
  const int F = params.num_bins();
  const int ref = ac.array.reference_index;
  MifModel model;
  model.H.assign(static_cast<std::size_t>(F), Eigen::MatrixXcd(M, J));
  model.T.assign(static_cast<std::size_t>(F), Eigen::MatrixXcd(2, J));
  for (int j = 0; j < J; ++j) {
    const int idx = hrtf.index_of(ac.ambient_azimuths_deg[j]);
    const auto hl = hrir_response(hrtf.left[idx], params);
    const auto hr = hrir_response(hrtf.right[idx], params);
    for (int m = 0; m < M; ++m) {
      const auto& rir = ac.ambient_rirs[j][m];
      const std::size_t n = std::min(rir.size(), static_cast<std::size_t>(params.frame_len));
      const auto atf = dsp::rfft(std::span<const double>(rir.data(), n), params.fft_size);
      for (int f = 0; f < F; ++f) model.H[f](m, j) = atf[f];
    }
    for (int f = 0; f < F; ++f) {
      model.T[f](0, j) = hl[f] * model.H[f](ref, j);
      model.T[f](1, j) = hr[f] * model.H[f](ref, j);
    }
  }
  return model;
}

void save_mif(const MifFilterBank& bank, const std::string& tensor_path) {
  if (bank.W.empty()) throw DataError("save_mif: empty filter bank");
  io::Tensor t;
  t.dtype = io::DType::Complex128;
  t.tag = "mif";
  const int M = bank.mics();
  const int F = bank.bins();
  t.shape = {2, static_cast<std::uint64_t>(M), static_cast<std::uint64_t>(F)};
  t.cplx.resize(static_cast<std::size_t>(2 * M * F));
  for (int r = 0; r < 2; ++r)
    for (int m = 0; m < M; ++m)
      for (int f = 0; f < F; ++f) t.cplx[(static_cast<std::size_t>(r) * M + m) * F + f] = bank.W[f](r, m);
  io::write_tensor(tensor_path, t);
  nlohmann::json meta{{"reg", bank.reg}, {"geometry", bank.geometry}, {"shape", {2, M, F}}};
  io::write_file_atomic(tensor_path + ".json", meta.dump(2) + "\n");
}

MifFilterBank load_mif(const std::string& tensor_path) {
  const auto t = io::read_tensor(tensor_path);
  if (t.dtype != io::DType::Complex128 || t.shape.size() != 3 || t.shape[0] != 2)
    throw DataError(tensor_path + ": not a MIF filter bank");
  MifFilterBank bank;
  try {
    const auto meta = nlohmann::json::parse(io::read_file(tensor_path + ".json"));
    bank.reg = meta.at("reg").get<double>();
    bank.geometry = meta.at("geometry").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(tensor_path + ".json: " + e.what());
  }
  const int M = static_cast<int>(t.shape[1]);
  const int F = static_cast<int>(t.shape[2]);
  bank.W.assign(static_cast<std::size_t>(F), Eigen::MatrixXcd(2, M));
  for (int r = 0; r < 2; ++r)
    for (int m = 0; m < M; ++m)
      for (int f = 0; f < F; ++f) bank.W[f](r, m) = t.cplx[(static_cast<std::size_t>(r) * M + m) * F + f];
  return bank;
}

}  // namespace bat
