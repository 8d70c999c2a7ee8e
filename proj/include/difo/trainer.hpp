#pragma once

#include <memory>
#include <string>

#include "difo/config.hpp"
#include "difo/dataset.hpp"

namespace difo {

struct EvalResult {
    double success_rate = 0.0;
};

// Deterministic evaluation: runs n_episodes with the env's fixed horizon, an
// episode counts as a success once env.success holds at any step. The rng is
// taken by value so evaluation never perturbs training streams.
EvalResult evaluate(const ActFn& act, const Env& env, int n_episodes, RngStream rng);
// Uses the policy's mean action (no sampling).
EvalResult evaluate(const GaussianPolicy& policy, const Env& env, int n_episodes, RngStream rng);

struct TrainResult {
    std::unique_ptr<Env> env;
    std::unique_ptr<Discriminator> disc;
    std::unique_ptr<GaussianPolicy> policy;
    std::unique_ptr<Mlp> value_net;
    int rounds = 0;
    long long env_steps = 0;
    int evals = 0;
    double final_eval_success = 0.0;
    double best_eval_success = 0.0;  // best across all eval points in the budget
    std::string out_dir;
};

// The alternating loop: per round, collect a rollout paid by the current
// discriminator snapshot, push it into the replay buffer, take
// disc_updates_per_round discriminator steps (expert vs buffer), then a PPO
// update (skipped during the warm-up rounds), evaluating and checkpointing
// every eval_every env steps. Writes metrics.csv (per discriminator step),
// rounds.csv, eval.csv, and a resolved config.ini into cfg.out_dir. Identical
// configs and seeds produce byte-identical CSVs.
TrainResult train(const TrainConfig& cfg);

// Denoising-only pretraining for the frozen-reward variant; train() calls this
// itself when the variant asks for it.
std::unique_ptr<Discriminator> pretrain_na(const TrainConfig& cfg, const ExpertDataset& ds,
                                           RngStream init_rng, RngStream step_rng);

}  // namespace difo
