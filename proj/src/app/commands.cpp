#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "bat/baselines.hpp"
#include "bat/error.hpp"
#include "bat/hrtf.hpp"
#include "bat/io.hpp"
#include "bat/metrics.hpp"
#include "bat/score.hpp"
#include "bat/sources.hpp"
#include "bat/training.hpp"

namespace bat::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kGridSize = 72;

struct Task {
  int scene;
  int geometry;
};

std::vector<Task> tasks_of(const RunConfig& cfg) {
  std::vector<Task> t;
  for (int s = 0; s < static_cast<int>(cfg.scenes.size()); ++s)
    for (int g = 0; g < static_cast<int>(cfg.geometries.size()); ++g) t.push_back({s, g});
  return t;
}

std::string geometry_tag(const std::string& g) { return fs::path(g).stem().string(); }

fs::path scene_dir(const RunConfig& cfg, const Task& t) {
  return fs::path(cfg.output_dir) / "scenes" / cfg.scenes[t.scene].id / geometry_tag(cfg.geometries[t.geometry]);
}
fs::path feature_dir(const RunConfig& cfg, const Task& t) {
  return fs::path(cfg.output_dir) / "features" / cfg.scenes[t.scene].id / geometry_tag(cfg.geometries[t.geometry]);
}
fs::path render_dir(const RunConfig& cfg, const Task& t) {
  return fs::path(cfg.output_dir) / "render" / cfg.scenes[t.scene].id / geometry_tag(cfg.geometries[t.geometry]);
}

SceneSpec task_scene(const RunConfig& cfg, const Task& t) {
  SceneSpec s = cfg.scenes[t.scene];
  s.geometry = cfg.geometries[t.geometry];
  return s;
}

HrtfSet load_hrtf(const RunConfig& cfg) {
  const DirectionGrid grid(kGridSize);
  if (cfg.hrtf == "spherical") return spherical_head_hrtf(grid);
  return load_hrtf_set(cfg.hrtf, grid);
}

json positions_json(const ArrayGeometry& g) {
  json p = json::array();
  for (const auto& v : g.positions) p.push_back({v[0], v[1], v[2]});
  return p;
}

MultiSignal read_audio(const fs::path& path, int sample_rate) {
  if (!fs::is_regular_file(path)) throw DataError("missing input " + path.string() + " (run the previous step first)");
  auto wav = io::read_wav(path.string());
  if (wav.sample_rate != sample_rate) throw DataError(path.string() + ": unexpected sample rate");
  return std::move(wav.channels);
}

std::string checkpoint_prefix(const RunConfig& cfg) {
  return cfg.toy.checkpoint.empty() ? (fs::path(cfg.output_dir) / "toy" / "checkpoint").string() : cfg.toy.checkpoint;
}

bool has_method(const RunConfig& cfg, const std::string& m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

bool has_metric(const RunConfig& cfg, const std::string& m) {
  return std::find(cfg.metrics.begin(), cfg.metrics.end(), m) != cfg.metrics.end();
}

std::string fmt(double v) { return metric_to_string(v); }

}  // namespace

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(count, 0)));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min(jobs, count));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void cmd_synth(const RunConfig& cfg) {
  const HrtfSet hrtf = load_hrtf(cfg);
  const auto tasks = tasks_of(cfg);
  const StftParams params;
  parallel_for(static_cast<int>(tasks.size()), cfg.jobs, [&](int i) {
    const Task& t = tasks[i];
    const SceneSpec spec = task_scene(cfg, t);
    const auto geom = scene_geometry(spec);
    const auto src = scene_sources(spec, params.sample_rate);
    const auto ac = simulate_scene_acoustics(spec, geom);
    const SceneSynthesis synth(spec, ac, src.speech, src.ambient, &hrtf);
    const fs::path dir = scene_dir(cfg, t);
    io::write_wav((dir / "mixture.wav").string(), synth.mixture(), params.sample_rate);
    json targets = json::object();
    for (double a : cfg.alphas) {
      const std::string name = "target_" + alpha_tag(a) + ".wav";
      io::write_wav((dir / name).string(), synth.target(a), params.sample_rate);
      targets[alpha_tag(a)] = name;
    }
    json side{{"scene", to_json(spec)},
              {"geometry",
               {{"name", geom.name}, {"reference_index", geom.reference_index}, {"positions_m", positions_json(ac.array)}}},
              {"sample_rate", params.sample_rate},
              {"num_samples", src.speech.size()},
              {"measured_sar_db", metric_to_json(synth.measured_sar_db())},
              {"measured_snr_db", metric_to_json(synth.measured_snr_db())},
              {"ambient_gain", synth.ambient_gain()},
              {"noise_gain", synth.noise_gain()},
              {"targets", targets}};
    io::write_file_atomic((dir / "scene.json").string(), side.dump(2) + "\n");
  });
}

void cmd_features(const RunConfig& cfg) {
  if (cfg.features.empty()) throw ConfigError("features: no feature types selected");
  const auto tasks = tasks_of(cfg);
  const StftParams params;
  const DirectionGrid grid(kGridSize);
  const auto fb = build_erb_filterbank(cfg.erb_bands, params);
  parallel_for(static_cast<int>(tasks.size()), cfg.jobs, [&](int i) {
    const Task& t = tasks[i];
    const auto geom = scene_geometry(task_scene(cfg, t));
    const auto mix = read_audio(scene_dir(cfg, t) / "mixture.wav", params.sample_rate);
    if (static_cast<int>(mix.size()) != geom.size()) throw DataError("features: mixture channel count does not match the geometry");
    const Spectrogram X = stft(mix, params);
    std::optional<ScoreTensor> per_bin;
    for (const auto layout : cfg.features) {
      FeatureVector fv;
      if (layout == FeatureLayout::Icpd) {
        fv = icpd_feature(X, geom.reference_index);
      } else {
        if (!per_bin) per_bin = score_tensor(X, geom, grid);
        fv = layout == FeatureLayout::Score ? to_feature(*per_bin) : to_feature(erb_score(*per_bin, fb));
      }
      io::Tensor tensor;
      tensor.dtype = io::DType::Float32;
      tensor.tag = to_string(layout);
      tensor.shape = {static_cast<std::uint64_t>(fv.dims[0]), static_cast<std::uint64_t>(fv.dims[1]),
                      static_cast<std::uint64_t>(fv.dims[2])};
      tensor.real = std::move(fv.values);
      io::write_tensor((feature_dir(cfg, t) / (to_string(layout) + ".tensor")).string(), tensor);
    }
  });
}

void cmd_mac_report(const RunConfig& cfg) {
  if (cfg.features.empty()) throw DataError("mac-report: no feature types to compare");
  const int G = static_cast<int>(cfg.geometries.size());
  const int S = static_cast<int>(cfg.scenes.size());
  json report{{"scenes", S}, {"geometries", json::array()}, {"features", json::object()}};
  for (const auto& g : cfg.geometries) report["geometries"].push_back(geometry_tag(g));

  for (const auto layout : cfg.features) {
    const std::string name = to_string(layout);
    std::vector<double> sum(static_cast<std::size_t>(G * G), 0.0);
    std::vector<bool> na(static_cast<std::size_t>(G * G), false);
    for (int s = 0; s < S; ++s) {
      std::vector<FeatureVector> fv(static_cast<std::size_t>(G));
      for (int g = 0; g < G; ++g) {
        const fs::path p = feature_dir(cfg, {s, g}) / (name + ".tensor");
        if (!fs::is_regular_file(p)) throw DataError("mac-report: missing feature dump " + p.string());
        const auto t = io::read_tensor(p.string());
        if (t.shape.size() != 3 || t.tag != name) throw DataError(p.string() + ": not a " + name + " dump");
        fv[g].layout = layout;
        fv[g].dims = {static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]), static_cast<int>(t.shape[2])};
        fv[g].values = t.real;
      }
      for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b) {
          try {
            sum[a * G + b] += mac(fv[a], fv[b]);
          } catch (const DimensionError&) {
            na[a * G + b] = true;
          }
        }
    }
    std::ostringstream csv;
    csv << "geometry";
    for (const auto& g : cfg.geometries) csv << ',' << geometry_tag(g);
    csv << '\n';
    json matrix = json::array();
    double off = 0.0;
    int off_count = 0;
    int incompatible = 0;
    for (int a = 0; a < G; ++a) {
      csv << geometry_tag(cfg.geometries[a]);
      json row = json::array();
      for (int b = 0; b < G; ++b) {
        if (na[a * G + b]) {
          csv << ",n/a";
          row.push_back("n/a");
          if (a != b) ++incompatible;
          continue;
        }
        const double v = sum[a * G + b] / S;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        csv << ',' << buf;
        row.push_back(v);
        if (a != b) {
          off += v;
          ++off_count;
        }
      }
      csv << '\n';
      matrix.push_back(row);
    }
    io::write_file_atomic((fs::path(cfg.output_dir) / "mac" / (name + ".csv")).string(), csv.str());
    report["features"][name] = {{"matrix", matrix},
                                {"mean_off_diagonal", off_count ? json(off / off_count) : json("n/a")},
                                {"incompatible_pairs", incompatible}};
  }
  io::write_file_atomic((fs::path(cfg.output_dir) / "mac" / "mac_report.json").string(), report.dump(2) + "\n");
}

void cmd_render(const RunConfig& cfg) {
  std::optional<ToyModel> toy;
  if (has_method(cfg, "toy")) {
    const std::string prefix = checkpoint_prefix(cfg);
    if (!fs::is_regular_file(prefix + ".bin") || !fs::is_regular_file(prefix + ".json"))
      throw ConfigError("render: the toy method needs a checkpoint at " + prefix + ".{bin,json}");
    toy = load_checkpoint(prefix + ".bin", prefix + ".json");
  }
  const HrtfSet hrtf = load_hrtf(cfg);
  const DirectionGrid grid(kGridSize);
  const StftParams params;
  if (toy && !(toy->config().stft == params)) throw ConfigError("render: toy checkpoint uses different STFT settings");
  const auto tasks = tasks_of(cfg);
  parallel_for(static_cast<int>(tasks.size()), cfg.jobs, [&](int i) {
    const Task& t = tasks[i];
    const SceneSpec spec = task_scene(cfg, t);
    const auto geom = scene_geometry(spec);
    const auto mix = read_audio(scene_dir(cfg, t) / "mixture.wav", params.sample_rate);
    if (static_cast<int>(mix.size()) != geom.size()) throw DataError("render: mixture channel count does not match the geometry");
    const Spectrogram X = stft(mix, params);
    const fs::path dir = render_dir(cfg, t);
    for (const auto& m : cfg.methods) {
      if (m == "passthrough") {
        const auto& ref = mix[geom.reference_index];
        io::write_wav((dir / "passthrough.wav").string(), {ref, ref}, params.sample_rate);
      } else if (m == "lbh") {
        io::write_wav((dir / "lbh.wav").string(), istft(lbh_render(X, geom, grid, hrtf), params), params.sample_rate);
      } else if (m == "mif") {
        const auto ac = simulate_scene_acoustics(spec, geom);
        const auto model = mif_model(ac, hrtf, params);
        auto bank = mif_design(model.H, model.T, cfg.mif_reg);
        bank.geometry = geom.name;
        save_mif(bank, (dir / "mif_filters.tensor").string());
        io::write_wav((dir / "mif.wav").string(), istft(mif_apply(bank, X), params), params.sample_rate);
      } else if (m == "toy") {
        if (toy->config().directions != kGridSize) throw ConfigError("render: toy model must use a 72-direction grid");
        const auto input = make_toy_input(X, geom, toy->config());
        for (double a : cfg.alphas)
          io::write_wav((dir / ("toy_" + alpha_tag(a) + ".wav")).string(), istft(toy->forward(input, a), params),
                        params.sample_rate);
      }
    }
  });
}

void cmd_eval(const RunConfig& cfg) {
  const StftParams params;
  const auto tasks = tasks_of(cfg);
  struct Row {
    std::string scene, method;
    double alpha, ipd, ild, sdr;
  };
  std::vector<std::vector<Row>> rows(tasks.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  parallel_for(static_cast<int>(tasks.size()), cfg.jobs, [&](int i) {
    const Task& t = tasks[i];
    const std::string scene_id = cfg.scenes[t.scene].id + "/" + geometry_tag(cfg.geometries[t.geometry]);
    for (double a : cfg.alphas) {
      const auto target = read_audio(scene_dir(cfg, t) / ("target_" + alpha_tag(a) + ".wav"), params.sample_rate);
      const Spectrogram Yt = stft(target, params);
      for (const auto& m : cfg.methods) {
        MultiSignal est;
        if (m == "oracle") {
          est = target;
        } else {
          const std::string file = m == "toy" ? "toy_" + alpha_tag(a) + ".wav" : m + ".wav";
          est = read_audio(render_dir(cfg, t) / file, params.sample_rate);
        }
        if (est.size() != 2 || est[0].size() != target[0].size())
          throw DataError("eval: " + scene_id + "/" + m + " does not match the target length");
        const Spectrogram Ye = stft(est, params);
        Row r{scene_id, m, a, nan, nan, nan};
        if (has_metric(cfg, "mw_ipde")) r.ipd = mw_ipde(Yt, Ye);
        if (has_metric(cfg, "mw_ilde")) r.ild = mw_ilde(Yt, Ye);
        if (has_metric(cfg, "msi_sdr")) r.sdr = msi_sdr(target, est, cfg.sdr_convention);
        rows[i].push_back(r);
      }
    }
  });
  std::ostringstream csv;
  csv << "scene_id,method,alpha,mw_ipde_rad,mw_ilde_db,msi_sdr_db\n";
  json out = json::array();
  for (const auto& block : rows)
    for (const auto& r : block) {
      char alpha[16];
      std::snprintf(alpha, sizeof alpha, "%.2f", r.alpha);
      auto cell = [](double v) { return std::isnan(v) ? std::string("n/a") : fmt(v); };
      auto jcell = [](double v) { return std::isnan(v) ? json(nullptr) : metric_to_json(v); };
      csv << r.scene << ',' << r.method << ',' << alpha << ',' << cell(r.ipd) << ',' << cell(r.ild) << ','
          << cell(r.sdr) << '\n';
      out.push_back({{"scene_id", r.scene},
                     {"method", r.method},
                     {"alpha", r.alpha},
                     {"mw_ipde_rad", jcell(r.ipd)},
                     {"mw_ilde_db", jcell(r.ild)},
                     {"msi_sdr_db", jcell(r.sdr)}});
    }
  const json report{{"sdr_convention",
                     cfg.sdr_convention == SdrConvention::SquaredNormRatio20 ? "squared_ratio_20log" : "conventional"},
                    {"ipd_max_hz", kIpdMaxHz},
                    {"rows", out}};
  const fs::path dir = fs::path(cfg.output_dir) / "eval";
  io::write_file_atomic((dir / "report.json").string(), report.dump(2) + "\n");
  io::write_file_atomic((dir / "report.csv").string(), csv.str());
}

void cmd_train_toy(const RunConfig& cfg) {
  const HrtfSet hrtf = load_hrtf(cfg);
  const ToyConfig& mc = cfg.toy.model;
  if (mc.directions != kGridSize) throw ConfigError("train-toy: the model must use a 72-direction grid");
  std::vector<ToyExample> clips(cfg.scenes.size());
  parallel_for(static_cast<int>(clips.size()), cfg.jobs, [&](int i) {
    SceneSpec spec = cfg.scenes[i];
    spec.geometry = cfg.toy.geometry;
    clips[i] = make_toy_example(spec, hrtf, mc);
  });
  ToyModel model = ToyModel::initialized(mc, split_seed(cfg.seed, 11));
  TrainOptions opts;
  opts.steps = cfg.toy.steps;
  opts.lr = cfg.toy.lr;
  opts.eval_every = cfg.toy.eval_every;
  opts.seed = cfg.seed;
  const fs::path dir = fs::path(cfg.output_dir) / "toy";
  TrainResult res;
  try {
    res = train_toy(model, clips, opts);
  } catch (const TrainingDiverged& e) {
    io::write_file_atomic((dir / "loss_trace.csv").string(), trace_csv(e.trace));
    throw;
  }
  const std::string prefix = (dir / "checkpoint").string();
  save_checkpoint(model, prefix + ".bin", prefix + ".json");
  io::write_file_atomic((dir / "loss_trace.csv").string(), trace_csv(res.trace));
  json summary{{"parameter_count", model.parameter_count()},
               {"steps", opts.steps},
               {"initial_loss", res.initial_loss},
               {"final_loss", res.final_loss},
               {"final_lr", res.final_lr},
               {"clips", clips.size()}};
  io::write_file_atomic((dir / "train_summary.json").string(), summary.dump(2) + "\n");
}

}  // namespace bat::app
