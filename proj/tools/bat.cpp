#include <cstdio>
#include <functional>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "bat/error.hpp"
#include "commands.hpp"
#include "config.hpp"

namespace {

int report(const char* kind, const std::exception& e, int code) {
  std::fprintf(stderr, "bat: %s: %s\n", kind, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binaural rendering toolkit for microphone-array recordings"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int jobs = 1;
  auto* seed_opt = app.add_option("--seed", seed, "Override the run seed");
  auto* out_opt = app.add_option("--out", out_dir, "Override the output directory");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads over scenes")->check(CLI::PositiveNumber);
  app.add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);

  const std::map<std::string, std::function<void(const bat::app::RunConfig&)>> verbs{
      {"synth", bat::app::cmd_synth},       {"features", bat::app::cmd_features},
      {"mac-report", bat::app::cmd_mac_report}, {"render", bat::app::cmd_render},
      {"eval", bat::app::cmd_eval},         {"train-toy", bat::app::cmd_train_toy}};
  const std::map<std::string, std::string> help{
      {"synth", "Synthesize mixtures and binaural targets"},
      {"features", "Dump ICPD / SCORE / ERB-SCORE features"},
      {"mac-report", "Cross-geometry MAC tables"},
      {"render", "Render binaural audio with the selected methods"},
      {"eval", "Evaluate renders against the targets"},
      {"train-toy", "Train the toy renderer"}};
  for (const auto& [name, _] : verbs) app.add_subcommand(name, help.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    bat::app::Overrides ov;
    if (*seed_opt) ov.seed = seed;
    if (*out_opt) ov.output_dir = out_dir;
    if (*jobs_opt) ov.jobs = jobs;
    const auto cfg = bat::app::load_run_config(config_path, ov);
    const std::string verb = app.get_subcommands().front()->get_name();
    verbs.at(verb)(cfg);
  } catch (const bat::ConfigError& e) {
    return report("config error", e, 1);
  } catch (const std::invalid_argument& e) {
    return report("config error", e, 1);
  } catch (const bat::NumericalError& e) {
    return report("numerical failure", e, 3);
  } catch (const bat::DataError& e) {
    return report("data error", e, 2);
  } catch (const std::exception& e) {
    return report("data error", e, 2);
  }
  return 0;
}
