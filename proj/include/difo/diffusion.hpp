#pragma once

#include <vector>

#include "difo/nets.hpp"

namespace difo {

// Linear-beta DDPM noise schedule with a restricted timestep range used when
// single-step losses are sampled (discrimination and reward paths).
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;       // beta_1..beta_T at [0..T-1]
    std::vector<double> alpha_bars;  // running products of (1 - beta)
    int sample_lo = 1;               // inclusive timestep range for loss sampling
    int sample_hi = 1;

    double beta(int t) const;       // t in [1, T]
    double alpha_bar(int t) const;  // t in [0, T], alpha_bar(0) = 1
};

NoiseSchedule make_schedule(int T, double beta_start, double beta_end, int sample_lo,
                            int sample_hi);

struct NoisedSample {
    Tensor x_t;
    int t = 0;
    Tensor eps;
};

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, eps drawn from the stream.
NoisedSample forward_noise(const NoiseSchedule& sched, const Tensor& x0, int t, RngStream& rng);

// Same mixing applied row-wise with caller-provided noise; pure function.
Tensor forward_noise_rows(const NoiseSchedule& sched, const Tensor& x0,
                          const std::vector<int>& ts, const Tensor& eps);

// Per-row single-step denoising losses ||eps - eps_hat||^2 (summed over dims)
// as an m x 1 graph node. cond is null for the unconditional variant.
Graph::NodeId denoising_loss_rows(Graph& g, const MlpUnet& net,
                                  const std::vector<Graph::NodeId>& pids,
                                  const NoiseSchedule& sched, const Tensor& x0,
                                  const std::vector<int>& ts, const Tensor& eps,
                                  const Tensor* cond_states, Label label);

// Scalar convenience for a single target vector with explicit (t, eps); no
// graph exposed, used for spec-level checks and reward evaluation.
double denoising_loss(const MlpUnet& net, const NoiseSchedule& sched, const Tensor& x0, int t,
                      const Tensor& eps, const Tensor* cond_state, Label label);

// Full T-step ancestral DDPM chain conditioned on each row of cond_states;
// returns one sampled target row per conditioning row. The running x0 estimate
// is clamped to [x0_lo, x0_hi] each step when x0_lo < x0_hi (wide-range noise
// early in the chain otherwise throws the iterate far outside the data box).
Tensor sample_next_states(const MlpUnet& net, const NoiseSchedule& sched,
                          const Tensor& cond_states, Label label, RngStream& rng,
                          double x0_lo = 0.0, double x0_hi = 0.0);

}  // namespace difo
