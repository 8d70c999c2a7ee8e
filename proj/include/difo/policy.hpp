#pragma once

#include <string>
#include <utility>
#include <vector>

#include "difo/env.hpp"
#include "difo/nets.hpp"

namespace difo {

struct PolicyConfig {
    std::vector<int> hidden = {64, 64};
    double logstd_init = -0.5;
    double logstd_min = -5.0;
    double logstd_max = 2.0;
};

struct ActionSample {
    Tensor action;          // 1 x action_dim, inside the action box
    Tensor pre_squash;      // 1 x action_dim Gaussian draw, kept for re-evaluation
    double log_prob = 0.0;  // density of `action` (squash Jacobian included)
};

// Tanh-squashed diagonal Gaussian policy: u ~ N(mu(s), exp(logstd)),
// a = scale * tanh(u). Reported log-probabilities are densities of the squashed
// action, i.e. they carry the change-of-variables term.
class GaussianPolicy {
  public:
    GaussianPolicy(const EnvSpec& env, PolicyConfig cfg, RngStream& rng);

    const PolicyConfig& config() const { return cfg_; }
    int state_dim() const { return state_dim_; }
    int action_dim() const { return action_dim_; }
    double action_scale() const { return scale_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    ActionSample act(const Tensor& state, RngStream& rng) const;
    Tensor mean_action(const Tensor& state) const;  // deterministic evaluation action
    double log_prob_of(const Tensor& state, const Tensor& action) const;

    // Per-row log-probs of recorded pre-squash draws, differentiable in the
    // parameters. The squash Jacobian does not depend on them, so it enters as
    // a constant: values are true squashed densities, gradients flow through
    // the Gaussian part only.
    Graph::NodeId log_prob_rows(Graph& g, const std::vector<Graph::NodeId>& pids,
                                const Tensor& states, const Tensor& pre_squash) const;

    double entropy() const;  // closed form for the pre-squash Gaussian
    // same quantity as a 1x1 graph node, differentiable in logstd
    Graph::NodeId entropy_node(Graph& g, const std::vector<Graph::NodeId>& pids) const;

    std::vector<std::pair<std::string, std::string>> arch_header() const;

  private:
    Graph::NodeId mu_rows(Graph& g, const std::vector<Graph::NodeId>& pids,
                          Graph::NodeId states) const;
    Graph::NodeId clamped_logstd_node(Graph& g, const std::vector<Graph::NodeId>& pids) const;
    double clamped_logstd(int d) const;

    PolicyConfig cfg_;
    int state_dim_;
    int action_dim_;
    double scale_;
    ParamSet params_;
    std::vector<int> w_, b_;  // trunk layers then the mean head
    int logstd_;
};

}  // namespace difo
