#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bat/error.hpp"
#include "bat/hrtf.hpp"
#include "bat/scene.hpp"
#include "bat/toy_model.hpp"

namespace bat {

/// Ambience weights sampled during training.
inline const std::vector<double> kAlphaSet{0.0, 0.3, 0.5, 0.7, 1.0};

/// One training clip: model input plus a binaural target per alpha.
struct ToyExample {
  std::string id;
  ToyInput input;
  std::vector<double> alphas;
  std::vector<Spectrogram> targets;

  const Spectrogram& target(double alpha) const;
};

ToyExample make_toy_example(const SceneSpec& spec, const HrtfSet& hrtf, const ToyConfig& cfg,
                            const std::vector<double>& alphas = kAlphaSet);

struct TrainOptions {
  int steps = 500;
  double lr = 1e-3;
  double clip_norm = 3.0;
  /// Evaluate the mean loss every `eval_every` steps; halve the learning
  /// rate after `patience` evaluations without improvement.
  int eval_every = 25;
  int patience = 3;
  std::uint64_t seed = 0;
  std::vector<double> alphas = kAlphaSet;
};

struct TracePoint {
  int step = 0;
  double alpha = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  std::vector<TracePoint> trace;
  double initial_loss = 0.0;  // mean over clips and alphas, before step 0
  double final_loss = 0.0;    // same, after the last step
  double final_lr = 0.0;
};

/// Thrown when the loss becomes non-finite; carries the trace so far.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, std::vector<TracePoint> trace)
      : NumericalError(what), trace(std::move(trace)) {}
  std::vector<TracePoint> trace;
};

/// Mean compressed loss over every clip and alpha, conditioning on the same
/// alpha as the target.
double evaluate_toy(const ToyModel& model, const std::vector<ToyExample>& clips, const std::vector<double>& alphas);

/// Loss of `clip`'s target at `target_alpha` when the model is conditioned on
/// `condition_alpha`.
double cross_alpha_loss(const ToyModel& model, const ToyExample& clip, double target_alpha, double condition_alpha);

/// Adam with gradient-norm clipping. Each step draws one clip and one alpha.
TrainResult train_toy(ToyModel& model, const std::vector<ToyExample>& clips, const TrainOptions& opts);

std::string trace_csv(const std::vector<TracePoint>& trace);

}  // namespace bat
