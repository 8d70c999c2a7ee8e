#pragma once

#include <memory>
#include <string>
#include <vector>

#include "difo/rng.hpp"
#include "difo/tensor.hpp"

namespace difo {

struct EnvSpec {
    std::string name;
    int state_dim = 0;
    int action_dim = 0;
    double action_lo = 0.0;
    double action_hi = 0.0;
    int horizon = 0;
    double action_noise_sigma = 0.0;  // env-side noise added to agent actions
    std::vector<int> constant_dims;   // state dims fixed for a whole episode (e.g. the goal)
    std::string success_desc;
};

// Environments are stateless: step is a pure function of (state, action, noise
// draw). Callers track the current state and the step count within an episode;
// every episode runs exactly spec().horizon steps.
class Env {
  public:
    virtual ~Env() = default;
    virtual const EnvSpec& spec() const = 0;
    virtual Tensor reset(RngStream& rng) const = 0;  // 1 x state_dim
    virtual Tensor step(const Tensor& state, const Tensor& action, RngStream& rng) const = 0;
    virtual bool success(const Tensor& state) const = 0;
    virtual bool has_expert() const { return false; }
    virtual Tensor expert_action(const Tensor& state, RngStream& rng) const;
};

// 2-D point navigating to a goal: state (x, y, gx, gy), action box [-0.1, 0.1]^2,
// positions clamped to [-1, 1]^2, success when the point is within 0.1 of the
// goal, horizon 60. Reset rejects start-goal pairs closer than 0.4.
class PointReachEnv : public Env {
  public:
    explicit PointReachEnv(double action_noise_sigma = 0.0);
    const EnvSpec& spec() const override { return spec_; }
    Tensor reset(RngStream& rng) const override;
    Tensor step(const Tensor& state, const Tensor& action, RngStream& rng) const override;
    bool success(const Tensor& state) const override;
    bool has_expert() const override { return true; }
    Tensor expert_action(const Tensor& state, RngStream& rng) const override;

  private:
    EnvSpec spec_;
};

// 1-D track whose expert follows the sine manifold: state s in [0, 1], action
// a in [-1, 1], s' = clamp(s + a, 0, 1), horizon 32. The scripted expert plays
// a = sin(6 pi s) + N(0, 0.05^2), so unclamped expert transitions match the
// sine data distribution.
class SineTrackEnv : public Env {
  public:
    explicit SineTrackEnv(double action_noise_sigma = 0.0);
    const EnvSpec& spec() const override { return spec_; }
    Tensor reset(RngStream& rng) const override;
    Tensor step(const Tensor& state, const Tensor& action, RngStream& rng) const override;
    bool success(const Tensor& state) const override;
    bool has_expert() const override { return true; }
    Tensor expert_action(const Tensor& state, RngStream& rng) const override;

  private:
    EnvSpec spec_;
};

std::unique_ptr<Env> make_env(const std::string& name, double action_noise_sigma = 0.0);

struct Transition {
    std::vector<double> s;
    std::vector<double> s_next;
};

struct ExpertDataset {
    std::vector<Transition> transitions;
    std::vector<int> boundaries;  // exclusive end index of each trajectory, strictly increasing
    std::string env_name;
    int state_dim = 0;
    int n_trajectories = 0;
    unsigned long long seed = 0;
    std::vector<unsigned char> traj_success;  // generation-time flags, not serialized

    int size() const { return static_cast<int>(transitions.size()); }
    // Rows of s (and s_next) for the given transition indices.
    Tensor states_at(const std::vector<int>& idx) const;
    Tensor next_states_at(const std::vector<int>& idx) const;
};

// Roll the env's scripted expert for n_trajectories episodes and record the
// state-only transitions (actions are discarded).
ExpertDataset generate_expert(const Env& env, int n_trajectories, unsigned long long seed);

// Keep only the first k trajectories (prefix-stable subsampling).
ExpertDataset subsample_trajectories(const ExpertDataset& ds, int k);

// n i.i.d. draws from the sine transition distribution: s ~ U[0,1],
// s' = sin(6 pi s) + s + N(0, 0.05^2), unclamped. Each draw is its own
// one-transition trajectory.
ExpertDataset sine_sample(int n, unsigned long long seed);

}  // namespace difo
