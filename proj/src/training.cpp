#include "bat/training.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "bat/sources.hpp"

namespace bat {

const Spectrogram& ToyExample::target(double alpha) const {
  for (std::size_t i = 0; i < alphas.size(); ++i)
    if (std::abs(alphas[i] - alpha) < 1e-12) return targets[i];
  throw DataError("clip " + id + ": no target for the requested alpha");
}

ToyExample make_toy_example(const SceneSpec& spec, const HrtfSet& hrtf, const ToyConfig& cfg,
                            const std::vector<double>& alphas) {
  const auto geom = scene_geometry(spec);
  const auto src = scene_sources(spec, cfg.stft.sample_rate);
  const auto ac = simulate_scene_acoustics(spec, geom);
  const SceneSynthesis synth(spec, ac, src.speech, src.ambient, &hrtf);
  ToyExample ex;
  ex.id = spec.id;
  ex.input = make_toy_input(stft(synth.mixture(), cfg.stft), ac.array, cfg);
  ex.alphas = alphas;
  for (double a : alphas) ex.targets.push_back(stft(synth.target(a), cfg.stft));
  return ex;
}

double cross_alpha_loss(const ToyModel& model, const ToyExample& clip, double target_alpha, double condition_alpha) {
  return compressed_loss(clip.target(target_alpha), model.forward(clip.input, condition_alpha));
}

double evaluate_toy(const ToyModel& model, const std::vector<ToyExample>& clips, const std::vector<double>& alphas) {
  if (clips.empty() || alphas.empty()) throw DataError("evaluate_toy: nothing to evaluate");
  double acc = 0.0;
  for (const auto& c : clips)
    for (double a : alphas) acc += cross_alpha_loss(model, c, a, a);
  return acc / static_cast<double>(clips.size() * alphas.size());
}

TrainResult train_toy(ToyModel& model, const std::vector<ToyExample>& clips, const TrainOptions& opts) {
  if (clips.empty()) throw DataError("train_toy: no training clips");
  if (opts.alphas.empty()) throw ConfigError("train_toy: empty alpha set");
  if (opts.steps < 0 || !(opts.lr >= 0.0) || opts.eval_every < 1 || opts.patience < 1)
    throw ConfigError("train_toy: invalid options");
  for (const auto& c : clips)
    for (double a : opts.alphas) c.target(a);

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  auto& p = model.params();
  const std::size_t n = p.size();
  std::vector<double> m(n, 0.0), v(n, 0.0), grad;
  Rng rng(split_seed(opts.seed, 7));
  std::uniform_int_distribution<std::size_t> pick_clip(0, clips.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_alpha(0, opts.alphas.size() - 1);

  TrainResult res;
  double lr = opts.lr;
  res.initial_loss = evaluate_toy(model, clips, opts.alphas);
  if (!std::isfinite(res.initial_loss)) throw TrainingDiverged("train_toy: initial loss is not finite", {});
  double best = res.initial_loss;
  int stale = 0;

  for (int step = 0; step < opts.steps; ++step) {
    const auto& clip = clips[pick_clip(rng)];
    const double alpha = opts.alphas[pick_alpha(rng)];
    double loss;
    try {
      loss = model.loss_and_gradient(clip.input, clip.target(alpha), alpha, &grad);
    } catch (const NumericalError& e) {
      throw TrainingDiverged(e.what(), res.trace);
    }
    res.trace.push_back({step, alpha, loss});

    double norm = 0.0;
    for (double g : grad) norm += g * g;
    norm = std::sqrt(norm);
    if (!std::isfinite(norm)) throw TrainingDiverged("train_toy: non-finite gradient", res.trace);
    const double scale = norm > opts.clip_norm ? opts.clip_norm / norm : 1.0;

    const double t = step + 1;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad[i] * scale;
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }

    if ((step + 1) % opts.eval_every == 0) {
      const double eval = evaluate_toy(model, clips, opts.alphas);
      if (!std::isfinite(eval)) throw TrainingDiverged("train_toy: evaluation loss is not finite", res.trace);
      if (eval < best) {
        best = eval;
        stale = 0;
      } else if (++stale >= opts.patience) {
        lr *= 0.5;
        stale = 0;
      }
    }
  }
  res.final_loss = evaluate_toy(model, clips, opts.alphas);
  res.final_lr = lr;
  return res;
}

std::string trace_csv(const std::vector<TracePoint>& trace) {
  std::ostringstream os;
  os << "step,alpha,loss\n";
  char buf[96];
  for (const auto& t : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.1f,%.17g\n", t.step, t.alpha, t.loss);
    os << buf;
  }
  return os.str();
}

}  // namespace bat
