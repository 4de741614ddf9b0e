#include "config.hpp"

#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include "bat/error.hpp"
#include "bat/io.hpp"
#include "bat/sources.hpp"

namespace bat::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, _] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown field '" + k + "'");
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

bool is_builtin_geometry(const std::string& name) {
  return name == "G1" || name == "G2" || name == "G3" || name == "G4";
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ConfigError(what + " not found: " + path);
}

std::vector<SceneSpec> generate(const SceneGenerator& g, std::uint64_t seed) {
  std::vector<SceneSpec> out;
  for (int k = 0; k < g.count; ++k) {
    SceneSpec s;
    char id[32];
    std::snprintf(id, sizeof id, "scene_%03d", k);
    s.id = id;
    s.seed = split_seed(seed, 1000 + static_cast<std::uint64_t>(k));
    Rng rng(s.seed);
    s.room.t60_s = g.t60_s[static_cast<std::size_t>(k) % g.t60_s.size()];
    s.room.max_order = g.max_order;
    TrajectorySegment seg;
    seg.azimuth_deg = 5.0 * std::uniform_int_distribution<int>(0, 71)(rng);
    seg.radius_m = std::uniform_real_distribution<double>(1.0, 1.5)(rng);
    seg.duration_s = g.duration_s;
    s.trajectory = {seg};
    s.sar_db = g.sar_db;
    s.snr_db = g.snr_db;
    s.ambient_mode = g.ambient_mode;
    out.push_back(s);
  }
  return out;
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

std::string alpha_tag(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "a%.2f", alpha);
  return buf;
}

RunConfig parse_run_config(const json& j, const std::string& base, const Overrides& ov) {
  check_keys(j,
             {"version", "seed", "output_dir", "jobs", "geometries", "alphas", "scenes", "scene_generator", "hrtf",
              "methods", "metrics", "features", "erb_bands", "mif_reg", "sdr_convention", "toy"},
             "config");
  RunConfig c;
  try {
    if (!j.contains("version")) throw ConfigError("config: missing 'version'");
    c.version = j.at("version").get<int>();
    if (c.version != kConfigVersion) throw ConfigError("config: unsupported version " + std::to_string(c.version));
    c.seed = get<std::uint64_t>(j, "seed", c.seed);
    c.output_dir = resolve(base, get<std::string>(j, "output_dir", c.output_dir));
    c.jobs = get<int>(j, "jobs", c.jobs);
    c.geometries = get(j, "geometries", c.geometries);
    c.alphas = get(j, "alphas", c.alphas);
    c.hrtf = get<std::string>(j, "hrtf", c.hrtf);
    c.methods = get(j, "methods", c.methods);
    c.metrics = get(j, "metrics", c.metrics);
    if (j.contains("features")) {
      c.features.clear();
      for (const auto& f : j.at("features")) {
        try {
          c.features.push_back(feature_layout_from_string(f.get<std::string>()));
        } catch (const DataError& e) {
          throw ConfigError(std::string("config: ") + e.what());
        }
      }
    }
    c.erb_bands = get<int>(j, "erb_bands", c.erb_bands);
    c.mif_reg = get<double>(j, "mif_reg", c.mif_reg);
    if (j.contains("sdr_convention")) {
      const auto s = j.at("sdr_convention").get<std::string>();
      if (s == "squared_ratio_20log") c.sdr_convention = SdrConvention::SquaredNormRatio20;
      else if (s == "conventional") c.sdr_convention = SdrConvention::Conventional10;
      else throw ConfigError("config: sdr_convention must be 'squared_ratio_20log' or 'conventional'");
    }
    if (j.contains("toy")) {
      const auto& t = j.at("toy");
      check_keys(t, {"checkpoint", "model", "geometry", "steps", "lr", "eval_every"}, "config.toy");
      c.toy.checkpoint = resolve(base, get<std::string>(t, "checkpoint", ""));
      if (t.contains("model")) c.toy.model = toy_config_from_json(t.at("model"));
      c.toy.geometry = get<std::string>(t, "geometry", c.toy.geometry);
      c.toy.steps = get<int>(t, "steps", c.toy.steps);
      c.toy.lr = get<double>(t, "lr", c.toy.lr);
      c.toy.eval_every = get<int>(t, "eval_every", c.toy.eval_every);
    }
    if (ov.seed) c.seed = *ov.seed;
    if (ov.output_dir) c.output_dir = *ov.output_dir;
    if (ov.jobs) c.jobs = *ov.jobs;

    if (j.contains("scenes")) {
      int k = 0;
      for (const auto& sj : j.at("scenes")) {
        SceneSpec s = scene_from_json(sj);
        if (!sj.contains("seed")) s.seed = split_seed(c.seed, static_cast<std::uint64_t>(k));
        if (!sj.contains("id")) s.id = "scene_" + std::to_string(k);
        s.speech_wav = resolve(base, s.speech_wav);
        s.ambient_wav = resolve(base, s.ambient_wav);
        c.scenes.push_back(s);
        ++k;
      }
    }
    if (j.contains("scene_generator")) {
      const auto& g = j.at("scene_generator");
      check_keys(g, {"count", "duration_s", "t60_s", "sar_db", "snr_db", "max_order", "ambient_mode"},
                 "config.scene_generator");
      SceneGenerator gen;
      gen.count = get<int>(g, "count", gen.count);
      gen.duration_s = get<double>(g, "duration_s", gen.duration_s);
      gen.t60_s = get(g, "t60_s", gen.t60_s);
      gen.sar_db = get<double>(g, "sar_db", gen.sar_db);
      gen.snr_db = get<double>(g, "snr_db", gen.snr_db);
      gen.max_order = get<int>(g, "max_order", gen.max_order);
      if (g.contains("ambient_mode")) {
        const auto m = g.at("ambient_mode").get<std::string>();
        if (m == "shared") gen.ambient_mode = AmbientMode::Shared;
        else if (m == "independent") gen.ambient_mode = AmbientMode::Independent;
        else throw ConfigError("config.scene_generator: ambient_mode must be 'shared' or 'independent'");
      }
      if (gen.count < 0 || gen.t60_s.empty()) throw ConfigError("config.scene_generator: invalid count or t60 list");
      c.generator = gen;
      const auto generated = generate(gen, c.seed);
      c.scenes.insert(c.scenes.end(), generated.begin(), generated.end());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  // Validation of everything the commands rely on.
  if (c.jobs < 1) throw ConfigError("config: jobs must be >= 1");
  if (c.output_dir.empty()) throw ConfigError("config: empty output_dir");
  if (c.scenes.empty()) throw ConfigError("config: no scenes");
  std::set<std::string> ids;
  for (const auto& s : c.scenes) {
    if (s.id.empty() || s.id.find('/') != std::string::npos) throw ConfigError("config: invalid scene id '" + s.id + "'");
    if (!ids.insert(s.id).second) throw ConfigError("config: duplicate scene id '" + s.id + "'");
    s.validate();
    if (!s.speech_wav.empty()) require_file(s.speech_wav, "speech WAV");
    if (!s.ambient_wav.empty()) require_file(s.ambient_wav, "ambient WAV");
  }
  if (c.geometries.empty()) throw ConfigError("config: no geometries");
  std::set<std::string> geoms;
  for (auto& g : c.geometries) {
    if (!is_builtin_geometry(g)) {
      g = resolve(base, g);
      require_file(g, "geometry file");
    }
    if (!geoms.insert(g).second) throw ConfigError("config: duplicate geometry " + g);
  }
  if (c.alphas.empty()) throw ConfigError("config: empty alpha list");
  for (double a : c.alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("config: alpha values must lie in [0, 1]");
  std::set<std::string> tags;
  for (double a : c.alphas)
    if (!tags.insert(alpha_tag(a)).second) throw ConfigError("config: alpha values collide at two decimals");
  if (c.hrtf != "spherical") {
    c.hrtf = resolve(base, c.hrtf);
    require_file(c.hrtf, "HRTF manifest");
  }
  static const std::set<std::string> known_methods{"passthrough", "lbh", "mif", "toy", "oracle"};
  for (const auto& m : c.methods)
    if (!known_methods.count(m)) throw ConfigError("config: unknown method '" + m + "'");
  static const std::set<std::string> known_metrics{"mw_ipde", "mw_ilde", "msi_sdr"};
  for (const auto& m : c.metrics)
    if (!known_metrics.count(m)) throw ConfigError("config: unknown metric '" + m + "'");
  if (c.erb_bands < 1 || c.erb_bands > StftParams{}.num_bins()) throw ConfigError("config: erb_bands out of range");
  if (!(c.mif_reg >= 0.0)) throw ConfigError("config: mif_reg must be nonnegative");
  if (c.toy.steps < 0 || !(c.toy.lr >= 0.0) || c.toy.eval_every < 1) throw ConfigError("config.toy: invalid training options");
  if (!is_builtin_geometry(c.toy.geometry)) {
    c.toy.geometry = resolve(base, c.toy.geometry);
    require_file(c.toy.geometry, "geometry file");
  }
  return c;
}

RunConfig load_run_config(const std::string& path, const Overrides& ov) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path + ": " + e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return parse_run_config(j, fs::path(path).parent_path().string(), ov);
}

}  // namespace bat::app
