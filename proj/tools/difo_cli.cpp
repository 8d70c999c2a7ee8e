#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "difo/analysis.hpp"
#include "difo/config.hpp"
#include "difo/dataset.hpp"
#include "difo/discriminator.hpp"
#include "difo/env.hpp"
#include "difo/nets.hpp"
#include "difo/plot.hpp"
#include "difo/policy.hpp"
#include "difo/trainer.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out;
    unsigned long long seed = 0;
    bool seed_set = false;
    bool out_set = false;
    std::vector<std::string> overrides;
};

difo::TrainConfig load_train_config(const GlobalArgs& g) {
    if (g.config_path.empty()) throw std::runtime_error("--config is required");
    difo::ConfigMap map = difo::ConfigMap::parse_file(g.config_path);
    for (const std::string& ov : g.overrides) map.apply_override(ov);
    difo::TrainConfig cfg = difo::TrainConfig::from_map(map);
    if (g.seed_set) cfg.seed = g.seed;
    if (g.out_set) cfg.out_dir = g.out;
    return cfg;
}

// Rebuild the reward model recorded by a run config and load its weights.
std::unique_ptr<difo::Discriminator> load_disc(const difo::TrainConfig& cfg,
                                               const std::string& checkpoint) {
    const difo::EnvSpec& spec = difo::make_env(cfg.env_name)->spec();
    difo::RngStream dummy(0);
    std::unique_ptr<difo::Discriminator> disc =
        difo::make_discriminator(cfg.disc, spec.state_dim, dummy);
    disc->load(checkpoint);
    return disc;
}

int cmd_gen_expert(const GlobalArgs& g, const std::string& env_name, int n, bool iid_sine) {
    if (!g.out_set) throw std::runtime_error("gen-expert: --out is required");
    difo::ExpertDataset ds;
    if (iid_sine) {
        if (env_name != "sinetrack")
            throw std::runtime_error("gen-expert: --iid-sine only applies to sinetrack");
        ds = difo::sine_sample(n, g.seed);
    } else {
        std::unique_ptr<difo::Env> env = difo::make_env(env_name);
        ds = difo::generate_expert(*env, n, g.seed);
    }
    difo::save_dataset(g.out, ds);
    int succ = 0;
    for (unsigned char s : ds.traj_success) succ += s;
    std::printf("wrote %s: %d transitions, %d trajectories, %d successful\n", g.out.c_str(),
                ds.size(), ds.n_trajectories, succ);
    return 0;
}

int cmd_train(const GlobalArgs& g) {
    difo::TrainConfig cfg = load_train_config(g);
    difo::TrainResult res = difo::train(cfg);
    std::printf("run %s: %d rounds, %lld env steps, %d evals, final success %.3f, best %.3f\n",
                res.out_dir.c_str(), res.rounds, res.env_steps, res.evals,
                res.final_eval_success, res.best_eval_success);
    return 0;
}

int cmd_eval(const GlobalArgs& g, const std::string& policy_ckpt, int episodes) {
    difo::TrainConfig cfg = load_train_config(g);
    std::unique_ptr<difo::Env> env = difo::make_env(cfg.env_name, cfg.env_action_noise);
    difo::RngStream dummy(0);
    difo::GaussianPolicy policy(env->spec(), cfg.policy, dummy);
    difo::load_checkpoint(policy_ckpt, policy.arch_header(), policy.params());
    difo::EvalResult ev =
        difo::evaluate(policy, *env, episodes, difo::RngStream(g.seed_set ? g.seed : cfg.seed));
    std::printf("success_rate %.4f over %d episodes\n", ev.success_rate, episodes);
    return 0;
}

int cmd_viz_reward(const GlobalArgs& g, const std::string& checkpoint, int resolution, double lo,
                   double hi, int draws) {
    if (!g.out_set) throw std::runtime_error("viz-reward: --out is required");
    difo::TrainConfig cfg = load_train_config(g);
    const difo::EnvSpec& spec = difo::make_env(cfg.env_name)->spec();
    if (spec.state_dim != 1)
        throw std::runtime_error("viz-reward: needs a 1-D state env, " + cfg.env_name + " has " +
                                 std::to_string(spec.state_dim) + " dims");
    std::unique_ptr<difo::Discriminator> disc = load_disc(cfg, checkpoint);
    if (draws > 0) disc->set_n_reward_samples(draws);
    difo::RewardGrid grid =
        difo::compute_reward_grid(*disc, lo, hi, resolution, g.seed_set ? g.seed : cfg.seed);
    difo::write_reward_grid_csv(grid, g.out);
    difo::GridBandStats st = difo::sine_band_stats(grid);
    std::printf("wrote %s: %d cells, on-manifold mean %.4f, off %.4f, band ratio %.4f\n",
                g.out.c_str(), grid.n_cells(), st.mean_on, st.mean_off, st.band_ratio);
    return 0;
}

int cmd_gen_traj(const GlobalArgs& g, const std::string& checkpoint, int n, int max_len,
                 double x0_lo, double x0_hi) {
    if (!g.out_set) throw std::runtime_error("gen-traj: --out is required");
    difo::TrainConfig cfg = load_train_config(g);
    std::unique_ptr<difo::Env> env = difo::make_env(cfg.env_name);
    difo::ExpertDataset ds = difo::load_dataset(cfg.expert_dataset);
    difo::RngStream dummy(0);
    difo::DifoDiscriminator disc(cfg.disc, env->spec().state_dim, dummy);
    disc.load(checkpoint);

    std::vector<difo::GeneratedTrajectory> trajs = difo::generate_trajectories(
        disc, ds, *env, n, max_len, g.seed_set ? g.seed : cfg.seed, x0_lo, x0_hi);
    std::filesystem::create_directories(g.out);
    for (std::size_t k = 0; k < trajs.size(); ++k)
        difo::write_trajectory_csv(trajs[k], g.out + "/traj_" + std::to_string(k) + ".csv");
    std::printf("wrote %zu trajectories of %d steps to %s\n", trajs.size(), max_len,
                g.out.c_str());

    if (cfg.env_name == "pointreach") {
        int reached = 0;
        for (const difo::GeneratedTrajectory& t : trajs) {
            int last = t.states.rows() - 1;
            double dx = t.states.at(last, 0) - t.states.at(last, 2);
            double dy = t.states.at(last, 1) - t.states.at(last, 3);
            if (std::hypot(dx, dy) <= 0.15) ++reached;
        }
        std::printf("%d of %zu end within 0.15 of the goal\n", reached, trajs.size());
    }
    return 0;
}

int cmd_ablation(const GlobalArgs& g, const std::string& study) {
    if (!g.out_set) throw std::runtime_error("ablation: --out is required");
    difo::TrainConfig base = load_train_config(g);
    difo::run_ablation(study, base, g.out);
    std::printf("wrote %s/combined.csv\n", g.out.c_str());
    return 0;
}

int cmd_plot(const GlobalArgs& g, const std::vector<std::string>& csvs, const std::string& kind,
             const std::string& x_col, const std::string& y_col, int width, int height) {
    if (!g.out_set) throw std::runtime_error("plot: --out is required");
    difo::render_plot(kind, csvs, x_col, y_col, g.out, width, height);
    std::printf("wrote %s\n", g.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Imitation from state-only demonstrations with a diffusion-model reward"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "Config file (key = value under [section] headers)");
    app.add_option("--seed", g.seed, "Root rng seed (overrides the config's)");
    app.add_option("--out", g.out, "Output path or directory");
    app.add_option("--override", g.overrides,
                   "section.key=value config override, repeatable");

    std::string env_name = "pointreach";
    int n_traj = 50;
    bool iid_sine = false;
    CLI::App* gen = app.add_subcommand("gen-expert", "Roll the scripted expert into a dataset");
    gen->fallthrough();
    gen->add_option("--env", env_name, "pointreach or sinetrack");
    gen->add_option("--n", n_traj, "Trajectories (or draws with --iid-sine)");
    gen->add_flag("--iid-sine", iid_sine, "Draw i.i.d. sine transitions instead of rolling");

    CLI::App* train = app.add_subcommand("train", "Run the adversarial imitation loop");
    train->fallthrough();

    std::string policy_ckpt;
    int episodes = 50;
    CLI::App* ev = app.add_subcommand("eval", "Evaluate a saved policy with mean actions");
    ev->fallthrough();
    ev->add_option("--policy", policy_ckpt, "Policy checkpoint")->required();
    ev->add_option("--episodes", episodes, "Evaluation episodes");

    std::string checkpoint;
    int resolution = 101, draws = 10;
    double grid_lo = 0.0, grid_hi = 1.0;
    CLI::App* viz = app.add_subcommand("viz-reward", "Reward surface r(s, s') on a square grid");
    viz->fallthrough();
    viz->add_option("--checkpoint", checkpoint, "Reward-model checkpoint")->required();
    viz->add_option("--resolution", resolution, "Grid points per axis");
    viz->add_option("--lo", grid_lo, "Axis lower bound");
    viz->add_option("--hi", grid_hi, "Axis upper bound");
    viz->add_option("--draws", draws, "(t, eps) draws per cell, 0 keeps the config value");

    std::string gt_checkpoint;
    int gt_n = 50, max_len = 40;
    double x0_lo = -1.2, x0_hi = 1.2;
    CLI::App* gt = app.add_subcommand("gen-traj", "Chain the conditional sampler into trajectories");
    gt->fallthrough();
    gt->add_option("--checkpoint", gt_checkpoint, "Trained denoiser checkpoint")->required();
    gt->add_option("--n", gt_n, "Trajectories to generate");
    gt->add_option("--max-len", max_len, "Steps per trajectory");
    gt->add_option("--x0-lo", x0_lo, "Sampler x0 clamp lower bound");
    gt->add_option("--x0-hi", x0_hi, "Sampler x0 clamp upper bound");

    std::string study;
    CLI::App* ab = app.add_subcommand("ablation", "Run a named study over config variants");
    ab->fallthrough();
    ab->add_option("--study", study,
                   "lambda_ratio, n_samples, data_efficiency, agent_mse, or stochastic_env")
        ->required();

    std::vector<std::string> csvs;
    std::string kind = "line", x_col, y_col;
    int width = 900, height = 600;
    CLI::App* plot = app.add_subcommand("plot", "Render CSVs to a BMP image");
    plot->fallthrough();
    plot->add_option("csvs", csvs, "Input CSV files")->required();
    plot->add_option("--kind", kind, "line, scatter, or heatmap");
    plot->add_option("--x", x_col, "X column name (default: first column)");
    plot->add_option("--y", y_col, "Y column name (default: every other column)");
    plot->add_option("--width", width, "Image width in pixels");
    plot->add_option("--height", height, "Image height in pixels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    g.seed_set = app.count("--seed") > 0;
    g.out_set = app.count("--out") > 0;

    try {
        if (gen->parsed()) return cmd_gen_expert(g, env_name, n_traj, iid_sine);
        if (train->parsed()) return cmd_train(g);
        if (ev->parsed()) return cmd_eval(g, policy_ckpt, episodes);
        if (viz->parsed()) return cmd_viz_reward(g, checkpoint, resolution, grid_lo, grid_hi, draws);
        if (gt->parsed()) return cmd_gen_traj(g, gt_checkpoint, gt_n, max_len, x0_lo, x0_hi);
        if (ab->parsed()) return cmd_ablation(g, study);
        if (plot->parsed()) return cmd_plot(g, csvs, kind, x_col, y_col, width, height);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    std::fprintf(stderr, "error: no subcommand\n");
    return 1;
}
