#pragma once

#include <functional>
#include <string>

#include "config.hpp"

namespace bat::app {

/// Mixture, per-alpha binaural targets and a JSON sidecar for every
/// (scene, geometry) under <out>/scenes/<id>/<geometry>/.
void cmd_synth(const RunConfig& cfg);

/// ICPD / SCORE / ERB-SCORE tensors under <out>/features/<id>/<geometry>/.
void cmd_features(const RunConfig& cfg);

/// Geometry x geometry MAC tables per feature type under <out>/mac/.
void cmd_mac_report(const RunConfig& cfg);

/// Binaural renders per method under <out>/render/<id>/<geometry>/.
void cmd_render(const RunConfig& cfg);

/// Metric report <out>/eval/report.{json,csv}.
void cmd_eval(const RunConfig& cfg);

/// Toy renderer training; checkpoint and loss trace under <out>/toy/.
void cmd_train_toy(const RunConfig& cfg);

/// Runs fn(0..count-1) on `jobs` threads. Every index runs even if some
/// fail; the exception of the lowest failing index is rethrown.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace bat::app
