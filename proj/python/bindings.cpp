#include <complex>
#include <filesystem>
#include <map>
#include <string>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bat/baselines.hpp"
#include "bat/error.hpp"
#include "bat/geometry.hpp"
#include "bat/hrtf.hpp"
#include "bat/metrics.hpp"
#include "bat/renderer.hpp"
#include "bat/rir.hpp"
#include "bat/scene.hpp"
#include "bat/score.hpp"
#include "bat/signal_core.hpp"
#include "commands.hpp"
#include "config.hpp"

namespace py = pybind11;
using namespace bat;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using CplxArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

ArrayGeometry resolve_geometry(const std::string& name) {
  if (std::filesystem::is_regular_file(name)) return load_geometry(name);
  return builtin_geometry(name);
}

MultiSignal to_channels(const RealArray& x) {
  if (x.ndim() == 1) return {Signal(x.data(), x.data() + x.shape(0))};
  if (x.ndim() != 2) throw DimensionError("expected a (samples,) or (channels, samples) array");
  MultiSignal out;
  for (py::ssize_t c = 0; c < x.shape(0); ++c) out.emplace_back(x.data(c, 0), x.data(c, 0) + x.shape(1));
  return out;
}

RealArray from_channels(const MultiSignal& x) {
  const py::ssize_t n = x.empty() ? 0 : static_cast<py::ssize_t>(x.front().size());
  RealArray out({static_cast<py::ssize_t>(x.size()), n});
  for (std::size_t c = 0; c < x.size(); ++c) std::copy(x[c].begin(), x[c].end(), out.mutable_data(c, 0));
  return out;
}

Spectrogram to_spec(const CplxArray& a, const StftParams& p, std::size_t num_samples = 0) {
  if (a.ndim() != 3) throw DimensionError("expected a (channels, frames, bins) complex array");
  if (a.shape(2) != p.num_bins()) throw DimensionError("bin count does not match the STFT parameters");
  Spectrogram s(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), p, num_samples);
  std::copy(a.data(), a.data() + a.size(), s.data().begin());
  return s;
}

CplxArray from_spec(const Spectrogram& s) {
  CplxArray out({s.channels(), s.frames(), s.bins()});
  std::copy(s.data().begin(), s.data().end(), out.mutable_data());
  return out;
}

RealArray from_tensor(const ScoreTensor& t) {
  RealArray out({t.frames, t.freqs, t.directions});
  std::copy(t.values.begin(), t.values.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Core routines of the binaural rendering toolkit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<StftParams>(m, "StftParams")
      .def(py::init([](int sample_rate, int frame_len, int hop, int fft_size) {
             StftParams p{sample_rate, frame_len, hop, fft_size};
             p.validate();
             return p;
           }),
           py::arg("sample_rate") = 16000, py::arg("frame_len") = 512, py::arg("hop") = 128,
           py::arg("fft_size") = 512)
      .def_readonly("sample_rate", &StftParams::sample_rate)
      .def_readonly("frame_len", &StftParams::frame_len)
      .def_readonly("hop", &StftParams::hop)
      .def_readonly("fft_size", &StftParams::fft_size)
      .def_property_readonly("num_bins", &StftParams::num_bins)
      .def("__repr__", [](const StftParams& p) {
        return "StftParams(sample_rate=" + std::to_string(p.sample_rate) + ", frame_len=" +
               std::to_string(p.frame_len) + ", hop=" + std::to_string(p.hop) +
               ", fft_size=" + std::to_string(p.fft_size) + ")";
      });

  m.def(
      "stft", [](const RealArray& x, const StftParams& p) { return from_spec(stft(to_channels(x), p)); },
      py::arg("x"), py::arg("params") = StftParams{}, "Complex spectrogram (channels, frames, bins).");
  m.def(
      "istft",
      [](const CplxArray& spec, std::size_t num_samples, const StftParams& p) {
        return from_channels(istft(to_spec(spec, p, num_samples), p));
      },
      py::arg("spec"), py::arg("num_samples"), py::arg("params") = StftParams{});

  m.def(
      "builtin_geometry",
      [](const std::string& name) {
        const auto g = resolve_geometry(name);
        py::array_t<double> pos({g.size(), 3});
        for (int i = 0; i < g.size(); ++i)
          for (int k = 0; k < 3; ++k) pos.mutable_at(i, k) = g.positions[i][k];
        return py::dict(py::arg("name") = g.name, py::arg("positions") = pos,
                        py::arg("reference_index") = g.reference_index);
      },
      py::arg("name"));
  m.def(
      "steering_vector",
      [](const std::string& geometry, double azimuth_deg, double freq_hz) {
        return Eigen::VectorXcd(steering_vector(resolve_geometry(geometry), look_vector(azimuth_deg), freq_hz));
      },
      py::arg("geometry"), py::arg("azimuth_deg"), py::arg("freq_hz"));
  m.def(
      "synth_plane_wave",
      [](const std::string& geometry, double azimuth_deg, const RealArray& signal, int sample_rate) {
        if (signal.ndim() != 1) throw DimensionError("synth_plane_wave: expected a mono signal");
        return from_channels(synth_plane_wave(resolve_geometry(geometry), azimuth_deg,
                                              Signal(signal.data(), signal.data() + signal.size()), sample_rate));
      },
      py::arg("geometry"), py::arg("azimuth_deg"), py::arg("signal"), py::arg("sample_rate") = 16000);

  m.def(
      "score_tensor",
      [](const CplxArray& spec, const std::string& geometry, int directions, const StftParams& p) {
        return from_tensor(score_tensor(to_spec(spec, p), resolve_geometry(geometry), DirectionGrid(directions)));
      },
      py::arg("spec"), py::arg("geometry"), py::arg("directions") = 72, py::arg("params") = StftParams{},
      "SCORE tensor (frames, bins, directions).");
  m.def(
      "erb_band_edges", [](int bands, const StftParams& p) { return build_erb_filterbank(bands, p).edges(); },
      py::arg("bands") = 32, py::arg("params") = StftParams{});
  m.def(
      "erb_score",
      [](const RealArray& score, int bands, const StftParams& p) {
        if (score.ndim() != 3) throw DimensionError("erb_score: expected (frames, bins, directions)");
        ScoreTensor t;
        t.frames = static_cast<int>(score.shape(0));
        t.freqs = static_cast<int>(score.shape(1));
        t.directions = static_cast<int>(score.shape(2));
        t.values.assign(score.data(), score.data() + score.size());
        return from_tensor(erb_score(t, build_erb_filterbank(bands, p)));
      },
      py::arg("score"), py::arg("bands") = 32, py::arg("params") = StftParams{});
  m.def(
      "mac",
      [](const RealArray& a, const RealArray& b) {
        auto fv = [](const RealArray& x) {
          FeatureVector v;
          v.dims = {1, 1, static_cast<int>(x.size())};
          v.values.assign(x.data(), x.data() + x.size());
          return v;
        };
        if (a.ndim() != b.ndim() || !std::equal(a.shape(), a.shape() + a.ndim(), b.shape()))
          throw DimensionError("mac: feature shapes differ");
        return mac(fv(a), fv(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "mpdr_weights",
      [](const Eigen::MatrixXcd& R, const Eigen::VectorXcd& a) { return Eigen::VectorXcd(mpdr_weights(R, a)); },
      py::arg("R"), py::arg("a"));
  m.def(
      "srp_phat",
      [](const CplxArray& spec, const std::string& geometry, int directions, const StftParams& p) {
        const auto r = srp_phat(to_spec(spec, p), resolve_geometry(geometry), DirectionGrid(directions));
        return py::make_tuple(r.index, r.azimuth_deg, r.power);
      },
      py::arg("spec"), py::arg("geometry"), py::arg("directions") = 72, py::arg("params") = StftParams{},
      "Returns (grid index, azimuth in degrees, power per direction).");

  m.def(
      "simulate_rir",
      [](const Vec3& src, const Vec3& mic, const Vec3& dims, double t60_s, int max_order, double length_s) {
        RoomSpec room;
        room.dims_m = dims;
        room.t60_s = t60_s;
        room.max_order = max_order;
        room.length_s = length_s;
        const Signal h = simulate_rir(room, src, mic);
        return py::array_t<double>(static_cast<py::ssize_t>(h.size()), h.data());
      },
      py::arg("src"), py::arg("mic"), py::arg("dims") = Vec3{6.0, 5.0, 3.0}, py::arg("t60_s") = 0.4,
      py::arg("max_order") = -1, py::arg("length_s") = 0.0);
  m.def(
      "spherical_head_hrtf",
      [](int directions) {
        const auto h = spherical_head_hrtf(DirectionGrid(directions));
        MultiSignal left = h.left, right = h.right;
        return py::make_tuple(h.azimuths_deg, from_channels(left), from_channels(right));
      },
      py::arg("directions") = 72, "Returns (azimuths, left HRIRs, right HRIRs).");

  m.def(
      "synth_scene",
      [](const std::string& scene_json, const std::vector<double>& alphas) {
        const auto spec = scene_from_json(nlohmann::json::parse(scene_json));
        spec.validate();
        const auto geom = scene_geometry(spec);
        const auto src = scene_sources(spec);
        const auto ac = simulate_scene_acoustics(spec, geom);
        const auto hrtf = spherical_head_hrtf(DirectionGrid());
        const SceneSynthesis synth(spec, ac, src.speech, src.ambient, &hrtf);
        py::dict targets;
        for (double a : alphas) targets[py::float_(a)] = from_channels(synth.target(a));
        return py::dict(py::arg("mixture") = from_channels(synth.mixture()), py::arg("targets") = targets,
                        py::arg("measured_sar_db") = synth.measured_sar_db(),
                        py::arg("measured_snr_db") = synth.measured_snr_db());
      },
      py::arg("scene_json"), py::arg("alphas") = std::vector<double>{0.0, 1.0});

  m.def(
      "mw_ipde",
      [](const CplxArray& target, const CplxArray& estimate, const StftParams& p) {
        return mw_ipde(to_spec(target, p), to_spec(estimate, p));
      },
      py::arg("target"), py::arg("estimate"), py::arg("params") = StftParams{});
  m.def(
      "mw_ilde",
      [](const CplxArray& target, const CplxArray& estimate, const StftParams& p) {
        return mw_ilde(to_spec(target, p), to_spec(estimate, p));
      },
      py::arg("target"), py::arg("estimate"), py::arg("params") = StftParams{});
  m.def(
      "msi_sdr",
      [](const RealArray& target, const RealArray& estimate, bool conventional) {
        return msi_sdr(to_channels(target), to_channels(estimate),
                       conventional ? SdrConvention::Conventional10 : SdrConvention::SquaredNormRatio20);
      },
      py::arg("target"), py::arg("estimate"), py::arg("conventional") = false);
  m.def(
      "compressed_loss",
      [](const CplxArray& target, const CplxArray& estimate, const StftParams& p) {
        return compressed_loss(to_spec(target, p), to_spec(estimate, p));
      },
      py::arg("target"), py::arg("estimate"), py::arg("params") = StftParams{});

  m.def(
      "run_command",
      [](const std::string& verb, const std::string& config_path) {
        static const std::map<std::string, void (*)(const app::RunConfig&)> verbs{
            {"synth", app::cmd_synth},   {"features", app::cmd_features},       {"mac-report", app::cmd_mac_report},
            {"render", app::cmd_render}, {"eval", app::cmd_eval},               {"train-toy", app::cmd_train_toy}};
        const auto it = verbs.find(verb);
        if (it == verbs.end()) throw ConfigError("unknown command '" + verb + "'");
        const auto cfg = app::load_run_config(config_path);
        py::gil_scoped_release release;
        it->second(cfg);
      },
      py::arg("verb"), py::arg("config_path"), "Runs one pipeline step, like the bat CLI.");
}
