#pragma once

#include <string>
#include <vector>

#include "difo/config.hpp"
#include "difo/discriminator.hpp"
#include "difo/env.hpp"

namespace difo {

// Reward surface r(s, s') for a 1-D state model: both axes discretized to
// `resolution` evenly spaced points over [lo, hi], values stored s-major.
struct RewardGrid {
    double lo = 0.0;
    double hi = 1.0;
    int resolution = 101;
    std::vector<double> rewards;

    int n_cells() const { return resolution * resolution; }
    double axis_at(int i) const;         // i-th grid coordinate
    double at(int i, int j) const;       // i indexes s, j indexes s_next
};

// Evaluates the reward on every cell in one batched call seeded by `seed`, so
// two models queried with the same seed see identical (t, eps) draws.
RewardGrid compute_reward_grid(const Discriminator& disc, double lo, double hi,
                               int resolution, unsigned long long seed);

void write_reward_grid_csv(const RewardGrid& grid, const std::string& path);
RewardGrid read_reward_grid_csv(const std::string& path);

// Mean rewards split by distance from the sine curve s' = sin(6 pi s) + s.
// A far/near band ratio closer to 1 means the reward decays more gradually
// away from the data manifold.
struct GridBandStats {
    double mean_on = 0.0;         // distance < 0.1
    double mean_off = 0.0;        // distance >= 0.1
    double mean_band_near = 0.0;  // 0.1 <= distance < 0.2
    double mean_band_far = 0.0;   // 0.3 <= distance < 0.4
    double band_ratio = 0.0;      // mean_band_far / mean_band_near
    int n_on = 0;
    int n_band_near = 0;
    int n_band_far = 0;
};

GridBandStats sine_band_stats(const RewardGrid& grid);

// States chained autoregressively from the conditional sampler under the
// expert label; row 0 is the seed state drawn from the dataset.
struct GeneratedTrajectory {
    Tensor states;  // (n_steps + 1) x state_dim
};

// Chains the full ancestral sampler from dataset initial states. Dims listed
// in env.spec().constant_dims are held at the seed state's values: they are
// episode constants (the goal), so regenerating them each step would let the
// conditioning context drift away mid-trajectory. The running x0 estimate is
// clamped to [x0_lo, x0_hi]; pass the state box padded a little.
std::vector<GeneratedTrajectory> generate_trajectories(const DifoDiscriminator& disc,
                                                       const ExpertDataset& ds, const Env& env,
                                                       int n, int max_len,
                                                       unsigned long long seed, double x0_lo,
                                                       double x0_hi);

void write_trajectory_csv(const GeneratedTrajectory& traj, const std::string& path);

// One member configuration of an ablation study. subsample_denom > 1 asks the
// runner to keep only the first n_trajectories / subsample_denom demo
// trajectories for this arm.
struct AblationArm {
    std::string name;
    TrainConfig cfg;
    int subsample_denom = 1;
};

// The configuration grid for a named study; throws on an unknown study name.
// Arms share the base config's seed so curves are comparable.
std::vector<AblationArm> ablation_arms(const std::string& study, const TrainConfig& base);

// Runs every arm sequentially into out_dir/<arm>/ and writes
// out_dir/combined.csv holding the eval success curves aligned on env steps.
void run_ablation(const std::string& study, const TrainConfig& base, const std::string& out_dir);

}  // namespace difo
