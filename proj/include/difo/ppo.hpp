#pragma once

#include <functional>
#include <vector>

#include "difo/discriminator.hpp"
#include "difo/env.hpp"
#include "difo/policy.hpp"

namespace difo {

struct PpoConfig {
    double learning_rate = 1e-4;
    int batch_size = 128;  // minibatch rows per gradient step
    double gamma = 0.99;
    double clip = 0.2;  // source table prints 0.001; kept configurable
    double gae_lambda = 0.95;
    double vf_coef = 0.5;
    double ent_coef = 0.0;
    double max_grad_norm = 0.6;
    int epochs = 5;

    void validate() const;
};

// Parallel arrays over env steps. `values` and the scalar bootstrap for the
// state after the last step are filled by fill_values; advantages and returns
// appear after the GAE pass.
struct RolloutBatch {
    Tensor states;       // n x state_dim
    Tensor next_states;  // n x state_dim
    Tensor actions;      // n x action_dim (squashed)
    Tensor pre_squash;   // n x action_dim (Gaussian draws behind the actions)
    std::vector<double> log_probs;
    std::vector<double> rewards;  // discriminator rewards, never the env's own
    std::vector<unsigned char> dones;
    std::vector<double> values;
    Tensor bootstrap_state;        // 1 x state_dim, the state after the last step
    double bootstrap_value = 0.0;  // value of bootstrap_state
    std::vector<double> advantages;
    std::vector<double> returns;
    int disc_snapshot = -1;  // the single snapshot that paid every reward

    int size() const { return states.rows(); }
};

using ActFn = std::function<ActionSample(const Tensor& state, RngStream& rng)>;

// Run fixed-horizon episodes for horizon_steps env steps (a trailing partial
// episode is truncated without a done flag) and relabel every transition with
// the discriminator reward in one batched call.
RolloutBatch collect_rollout(const ActFn& act, const Env& env, const Discriminator& disc,
                             int horizon_steps, RngStream& rng);
RolloutBatch collect_rollout(const GaussianPolicy& policy, const Env& env,
                             const Discriminator& disc, int horizon_steps, RngStream& rng);

// Fill values (one per step) and the bootstrap for the post-rollout state.
void fill_values(RolloutBatch& batch, const Mlp& value_net);

// Standard GAE recursion, then returns = advantages + values, then advantages
// normalized to zero mean and unit variance (skipped when the batch std
// vanishes, so an all-zero batch stays all-zero).
void compute_gae(RolloutBatch& batch, double gamma, double lambda);

struct PpoMetrics {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
};

// cfg.epochs passes of shuffled clipped-surrogate minibatch updates; policy
// and value gradients are clipped jointly by global norm and applied by the
// two optimizers.
PpoMetrics ppo_update(GaussianPolicy& policy, Mlp& value_net, const RolloutBatch& batch,
                      const PpoConfig& cfg, Adam& policy_opt, Adam& value_opt, RngStream& rng);

}  // namespace difo
