#include "difo/env.hpp"

#include <cmath>
#include <stdexcept>

namespace difo {

namespace {

const double kPi = 3.14159265358979323846;

double clampd(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

void check_state(const Tensor& state, const EnvSpec& spec) {
    if (state.rows() != 1 || state.cols() != spec.state_dim)
        throw std::invalid_argument(spec.name + ": state must be 1 x " +
                                    std::to_string(spec.state_dim) + ", got " + state.shape_str());
}

void check_action(const Tensor& action, const EnvSpec& spec) {
    if (action.rows() != 1 || action.cols() != spec.action_dim)
        throw std::invalid_argument(spec.name + ": action must be 1 x " +
                                    std::to_string(spec.action_dim) + ", got " +
                                    action.shape_str());
}

}  // namespace

Tensor Env::expert_action(const Tensor&, RngStream&) const {
    throw std::runtime_error(spec().name + ": no scripted expert registered");
}

PointReachEnv::PointReachEnv(double action_noise_sigma) {
    spec_.name = "pointreach";
    spec_.state_dim = 4;
    spec_.action_dim = 2;
    spec_.action_lo = -0.1;
    spec_.action_hi = 0.1;
    spec_.horizon = 60;
    spec_.action_noise_sigma = action_noise_sigma;
    spec_.constant_dims = {2, 3};  // goal coordinates never move within an episode
    spec_.success_desc = "position within 0.1 of goal";
}

Tensor PointReachEnv::reset(RngStream& rng) const {
    // Rejection-sample until start and goal are at least 0.4 apart.
    while (true) {
        double px = rng.uniform(-1, 1), py = rng.uniform(-1, 1);
        double gx = rng.uniform(-1, 1), gy = rng.uniform(-1, 1);
        if (std::hypot(px - gx, py - gy) >= 0.4) return Tensor::row({px, py, gx, gy});
    }
}

Tensor PointReachEnv::step(const Tensor& state, const Tensor& action, RngStream& rng) const {
    check_state(state, spec_);
    check_action(action, spec_);
    double ax = clampd(action.at(0, 0), spec_.action_lo, spec_.action_hi);
    double ay = clampd(action.at(0, 1), spec_.action_lo, spec_.action_hi);
    if (spec_.action_noise_sigma > 0) {
        ax += rng.normal(0.0, spec_.action_noise_sigma);
        ay += rng.normal(0.0, spec_.action_noise_sigma);
    }
    return Tensor::row({clampd(state.at(0, 0) + ax, -1, 1), clampd(state.at(0, 1) + ay, -1, 1),
                        state.at(0, 2), state.at(0, 3)});
}

bool PointReachEnv::success(const Tensor& state) const {
    check_state(state, spec_);
    return std::hypot(state.at(0, 0) - state.at(0, 2), state.at(0, 1) - state.at(0, 3)) < 0.1;
}

Tensor PointReachEnv::expert_action(const Tensor& state, RngStream& rng) const {
    check_state(state, spec_);
    double dx = state.at(0, 2) - state.at(0, 0);
    double dy = state.at(0, 3) - state.at(0, 1);
    double dist = std::hypot(dx, dy);
    double sx = dx, sy = dy;
    if (dist > spec_.action_hi) {
        sx = dx / dist * spec_.action_hi;
        sy = dy / dist * spec_.action_hi;
    }
    sx = clampd(sx + rng.normal(0.0, 0.01), spec_.action_lo, spec_.action_hi);
    sy = clampd(sy + rng.normal(0.0, 0.01), spec_.action_lo, spec_.action_hi);
    return Tensor::row({sx, sy});
}

SineTrackEnv::SineTrackEnv(double action_noise_sigma) {
    spec_.name = "sinetrack";
    spec_.state_dim = 1;
    spec_.action_dim = 1;
    spec_.action_lo = -1.0;
    spec_.action_hi = 1.0;
    spec_.horizon = 32;
    spec_.action_noise_sigma = action_noise_sigma;
    spec_.success_desc = "none (imitation quality is the metric)";
}

Tensor SineTrackEnv::reset(RngStream& rng) const { return Tensor::row({rng.uniform(0, 1)}); }

Tensor SineTrackEnv::step(const Tensor& state, const Tensor& action, RngStream& rng) const {
    check_state(state, spec_);
    check_action(action, spec_);
    double a = clampd(action.at(0, 0), spec_.action_lo, spec_.action_hi);
    if (spec_.action_noise_sigma > 0) a += rng.normal(0.0, spec_.action_noise_sigma);
    return Tensor::row({clampd(state.at(0, 0) + a, 0, 1)});
}

bool SineTrackEnv::success(const Tensor& state) const {
    check_state(state, spec_);
    return false;
}

Tensor SineTrackEnv::expert_action(const Tensor& state, RngStream& rng) const {
    check_state(state, spec_);
    double a = std::sin(6.0 * kPi * state.at(0, 0)) + rng.normal(0.0, 0.05);
    return Tensor::row({clampd(a, spec_.action_lo, spec_.action_hi)});
}

std::unique_ptr<Env> make_env(const std::string& name, double action_noise_sigma) {
    if (name == "pointreach") return std::make_unique<PointReachEnv>(action_noise_sigma);
    if (name == "sinetrack") return std::make_unique<SineTrackEnv>(action_noise_sigma);
    throw std::invalid_argument("make_env: unknown environment \"" + name + "\"");
}

Tensor ExpertDataset::states_at(const std::vector<int>& idx) const {
    Tensor out(static_cast<int>(idx.size()), state_dim);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const Transition& tr = transitions.at(idx[r]);
        for (int c = 0; c < state_dim; ++c) out.at(static_cast<int>(r), c) = tr.s[c];
    }
    return out;
}

Tensor ExpertDataset::next_states_at(const std::vector<int>& idx) const {
    Tensor out(static_cast<int>(idx.size()), state_dim);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const Transition& tr = transitions.at(idx[r]);
        for (int c = 0; c < state_dim; ++c) out.at(static_cast<int>(r), c) = tr.s_next[c];
    }
    return out;
}

ExpertDataset generate_expert(const Env& env, int n_trajectories, unsigned long long seed) {
    if (n_trajectories < 1) throw std::invalid_argument("generate_expert: need n_trajectories >= 1");
    if (!env.has_expert())
        throw std::runtime_error("generate_expert: " + env.spec().name +
                                 " has no scripted expert");
    const EnvSpec& spec = env.spec();
    RngStream rng(seed);
    ExpertDataset ds;
    ds.env_name = spec.name;
    ds.state_dim = spec.state_dim;
    ds.n_trajectories = n_trajectories;
    ds.seed = seed;
    for (int traj = 0; traj < n_trajectories; ++traj) {
        Tensor s = env.reset(rng);
        bool reached = false;
        for (int t = 0; t < spec.horizon; ++t) {
            Tensor a = env.expert_action(s, rng);
            Tensor s2 = env.step(s, a, rng);
            Transition tr;
            tr.s.assign(s.data(), s.data() + spec.state_dim);
            tr.s_next.assign(s2.data(), s2.data() + spec.state_dim);
            ds.transitions.push_back(std::move(tr));
            if (env.success(s2)) reached = true;
            s = s2;
        }
        ds.boundaries.push_back(static_cast<int>(ds.transitions.size()));
        ds.traj_success.push_back(reached ? 1 : 0);
    }
    return ds;
}

ExpertDataset subsample_trajectories(const ExpertDataset& ds, int k) {
    if (k < 1 || k > ds.n_trajectories)
        throw std::invalid_argument("subsample_trajectories: k=" + std::to_string(k) +
                                    " outside [1, " + std::to_string(ds.n_trajectories) + "]");
    ExpertDataset out;
    out.env_name = ds.env_name;
    out.state_dim = ds.state_dim;
    out.n_trajectories = k;
    out.seed = ds.seed;
    int cut = ds.boundaries.at(k - 1);
    out.transitions.assign(ds.transitions.begin(), ds.transitions.begin() + cut);
    out.boundaries.assign(ds.boundaries.begin(), ds.boundaries.begin() + k);
    if (static_cast<int>(ds.traj_success.size()) >= k)
        out.traj_success.assign(ds.traj_success.begin(), ds.traj_success.begin() + k);
    return out;
}

ExpertDataset sine_sample(int n, unsigned long long seed) {
    if (n < 1) throw std::invalid_argument("sine_sample: need n >= 1");
    RngStream rng(seed);
    ExpertDataset ds;
    ds.env_name = "sine";
    ds.state_dim = 1;
    ds.n_trajectories = n;
    ds.seed = seed;
    for (int i = 0; i < n; ++i) {
        double s = rng.uniform(0, 1);
        double sp = std::sin(6.0 * kPi * s) + s + rng.normal(0.0, 0.05);
        ds.transitions.push_back({{s}, {sp}});
        ds.boundaries.push_back(i + 1);
        ds.traj_success.push_back(1);
    }
    return ds;
}

}  // namespace difo
