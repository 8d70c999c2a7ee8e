#include "difo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "difo/dataset.hpp"
#include "difo/diffusion.hpp"
#include "difo/trainer.hpp"

namespace difo {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

}  // namespace

double RewardGrid::axis_at(int i) const {
    if (resolution < 2) throw std::invalid_argument("reward grid: resolution must be >= 2");
    return lo + (hi - lo) * i / (resolution - 1);
}

double RewardGrid::at(int i, int j) const {
    if (i < 0 || i >= resolution || j < 0 || j >= resolution)
        throw std::out_of_range("reward grid: cell (" + std::to_string(i) + ", " +
                                std::to_string(j) + ") outside " + std::to_string(resolution) +
                                "^2");
    return rewards[static_cast<std::size_t>(i) * resolution + j];
}

RewardGrid compute_reward_grid(const Discriminator& disc, double lo, double hi, int resolution,
                               unsigned long long seed) {
    if (resolution < 2) throw std::invalid_argument("reward grid: resolution must be >= 2");
    if (!(lo < hi)) throw std::invalid_argument("reward grid: need lo < hi");

    RewardGrid grid;
    grid.lo = lo;
    grid.hi = hi;
    grid.resolution = resolution;

    int n = resolution * resolution;
    TransitionBatch batch{Tensor(n, 1), Tensor(n, 1)};
    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            int row = i * resolution + j;
            batch.s.at(row, 0) = grid.axis_at(i);
            batch.s_next.at(row, 0) = grid.axis_at(j);
        }
    }

    RngStream rng(seed);
    grid.rewards = disc.rewards(batch, rng);
    for (int c = 0; c < n; ++c) {
        if (!std::isfinite(grid.rewards[c]))
            throw std::runtime_error("reward grid: non-finite value at cell " + std::to_string(c));
    }
    return grid;
}

void write_reward_grid_csv(const RewardGrid& grid, const std::string& path) {
    if (static_cast<int>(grid.rewards.size()) != grid.n_cells())
        throw std::invalid_argument("reward grid: " + std::to_string(grid.rewards.size()) +
                                    " values for resolution " + std::to_string(grid.resolution));
    std::ofstream f = open_out(path);
    f << "s,s_next,reward\n";
    for (int i = 0; i < grid.resolution; ++i)
        for (int j = 0; j < grid.resolution; ++j)
            f << fmt(grid.axis_at(i)) << "," << fmt(grid.axis_at(j)) << "," << fmt(grid.at(i, j))
              << "\n";
    if (!f) throw std::runtime_error("write failed: " + path);
}

RewardGrid read_reward_grid_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("s,s_next,reward", 0) != 0)
        throw std::runtime_error(path + ": not a reward grid CSV (bad header)");

    std::vector<double> s_vals, r_vals;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        double s = 0, sn = 0, r = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &s, &sn, &r) != 3)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad row");
        s_vals.push_back(s);
        r_vals.push_back(r);
    }
    if (r_vals.empty()) throw std::runtime_error(path + ": no data rows");

    int res = static_cast<int>(std::llround(std::sqrt(static_cast<double>(r_vals.size()))));
    if (static_cast<std::size_t>(res) * res != r_vals.size() || res < 2)
        throw std::runtime_error(path + ": row count " + std::to_string(r_vals.size()) +
                                 " is not a square grid");
    RewardGrid grid;
    grid.resolution = res;
    grid.lo = s_vals.front();
    grid.hi = s_vals.back();
    grid.rewards = std::move(r_vals);
    return grid;
}

GridBandStats sine_band_stats(const RewardGrid& grid) {
    if (static_cast<int>(grid.rewards.size()) != grid.n_cells())
        throw std::invalid_argument("sine_band_stats: incomplete grid");
    GridBandStats st;
    double sum_on = 0, sum_off = 0, sum_near = 0, sum_far = 0;
    int n_off = 0;
    for (int i = 0; i < grid.resolution; ++i) {
        double s = grid.axis_at(i);
        double manifold = std::sin(6.0 * kPi * s) + s;
        for (int j = 0; j < grid.resolution; ++j) {
            double dist = std::fabs(grid.axis_at(j) - manifold);
            double r = grid.at(i, j);
            if (dist < 0.1) {
                sum_on += r;
                ++st.n_on;
            } else {
                sum_off += r;
                ++n_off;
            }
            if (dist >= 0.1 && dist < 0.2) {
                sum_near += r;
                ++st.n_band_near;
            } else if (dist >= 0.3 && dist < 0.4) {
                sum_far += r;
                ++st.n_band_far;
            }
        }
    }
    if (st.n_on > 0) st.mean_on = sum_on / st.n_on;
    if (n_off > 0) st.mean_off = sum_off / n_off;
    if (st.n_band_near > 0) st.mean_band_near = sum_near / st.n_band_near;
    if (st.n_band_far > 0) st.mean_band_far = sum_far / st.n_band_far;
    if (st.mean_band_near != 0.0) st.band_ratio = st.mean_band_far / st.mean_band_near;
    return st;
}

std::vector<GeneratedTrajectory> generate_trajectories(const DifoDiscriminator& disc,
                                                       const ExpertDataset& ds, const Env& env,
                                                       int n, int max_len,
                                                       unsigned long long seed, double x0_lo,
                                                       double x0_hi) {
    if (n < 1) throw std::invalid_argument("generate_trajectories: n must be >= 1");
    if (max_len < 1) throw std::invalid_argument("generate_trajectories: max_len must be >= 1");
    if (disc.config().variant == Variant::DifoUncond)
        throw std::invalid_argument(
            "generate_trajectories: the unconditional variant has no conditioning state to chain");
    int sd = env.spec().state_dim;
    if (ds.state_dim != sd)
        throw std::invalid_argument("generate_trajectories: dataset state_dim " +
                                    std::to_string(ds.state_dim) + " does not match env " +
                                    std::to_string(sd));
    if (ds.n_trajectories < 1)
        throw std::invalid_argument("generate_trajectories: empty dataset");

    RngStream root(seed);
    RngStream pick = root.substream(1);
    RngStream chain = root.substream(2);

    std::vector<GeneratedTrajectory> out(n);
    Tensor cur(n, sd);
    for (int k = 0; k < n; ++k) {
        int tr = pick.uniform_int(0, ds.n_trajectories - 1);
        int first = tr == 0 ? 0 : ds.boundaries[tr - 1];
        out[k].states = Tensor(max_len + 1, sd);
        for (int d = 0; d < sd; ++d) {
            double v = ds.transitions[first].s[d];
            out[k].states.at(0, d) = v;
            cur.at(k, d) = v;
        }
    }

    for (int step = 1; step <= max_len; ++step) {
        Tensor next =
            sample_next_states(disc.net(), disc.schedule(), cur, Label::Expert, chain, x0_lo, x0_hi);
        for (int k = 0; k < n; ++k) {
            for (int d : env.spec().constant_dims) next.at(k, d) = out[k].states.at(0, d);
            for (int d = 0; d < sd; ++d) {
                double v = next.at(k, d);
                if (!std::isfinite(v))
                    throw std::runtime_error("generate_trajectories: non-finite state at step " +
                                             std::to_string(step));
                out[k].states.at(step, d) = v;
            }
        }
        cur = next;
    }
    return out;
}

void write_trajectory_csv(const GeneratedTrajectory& traj, const std::string& path) {
    if (traj.states.rows() < 1) throw std::invalid_argument("write_trajectory_csv: empty trajectory");
    std::ofstream f = open_out(path);
    f << "step";
    for (int d = 0; d < traj.states.cols(); ++d) f << ",s" << d;
    f << "\n";
    for (int i = 0; i < traj.states.rows(); ++i) {
        f << i;
        for (int d = 0; d < traj.states.cols(); ++d) f << "," << fmt(traj.states.at(i, d));
        f << "\n";
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<AblationArm> ablation_arms(const std::string& study, const TrainConfig& base) {
    std::vector<AblationArm> arms;
    auto add = [&](const std::string& name) -> TrainConfig& {
        arms.push_back({name, base, 1});
        return arms.back().cfg;
    };
    if (study == "lambda_ratio") {
        add("default");
        add("bce_only").disc.lambda_mse = 0.0;   // keeps learning from negatives
        add("mse_only").disc.lambda_bce = 0.0;   // no negative samples enter the loss
    } else if (study == "n_samples") {
        for (int ns : {1, 2, 5, 10}) add("n_" + std::to_string(ns)).disc.n_reward_samples = ns;
    } else if (study == "data_efficiency") {
        const char* names[] = {"full", "half", "quarter", "eighth"};
        int denom = 1;
        for (const char* name : names) {
            arms.push_back({name, base, denom});
            denom *= 2;
        }
    } else if (study == "agent_mse") {
        add("mse_expert");
        add("mse_agent").disc.mse_on_agent = true;
    } else if (study == "stochastic_env") {
        for (double sigma : {0.0, 0.01, 0.03}) {
            std::ostringstream name;
            name << "noise_" << sigma;
            add(name.str()).env_action_noise = sigma;
        }
    } else {
        throw std::invalid_argument(
            "unknown ablation study '" + study +
            "' (valid: lambda_ratio, n_samples, data_efficiency, agent_mse, stochastic_env)");
    }
    return arms;
}

void run_ablation(const std::string& study, const TrainConfig& base, const std::string& out_dir) {
    std::vector<AblationArm> arms = ablation_arms(study, base);
    std::filesystem::create_directories(out_dir);

    std::vector<std::vector<std::pair<long long, double>>> curves;
    for (AblationArm& arm : arms) {
        std::string arm_dir = out_dir + "/" + arm.name;
        arm.cfg.out_dir = arm_dir;
        if (arm.subsample_denom > 1) {
            ExpertDataset full = load_dataset(base.expert_dataset);
            int k = std::max(1, full.n_trajectories / arm.subsample_denom);
            std::filesystem::create_directories(arm_dir);
            std::string sub_path = arm_dir + "/dataset.bin";
            save_dataset(sub_path, subsample_trajectories(full, k));
            arm.cfg.expert_dataset = sub_path;
        }
        train(arm.cfg);

        std::ifstream ev(arm_dir + "/eval.csv");
        if (!ev) throw std::runtime_error("ablation: missing " + arm_dir + "/eval.csv");
        std::string line;
        std::getline(ev, line);  // header
        std::vector<std::pair<long long, double>> curve;
        while (std::getline(ev, line)) {
            long long steps = 0;
            double succ = 0;
            if (std::sscanf(line.c_str(), "%lld,%lf", &steps, &succ) == 2)
                curve.emplace_back(steps, succ);
        }
        curves.push_back(std::move(curve));
    }

    for (std::size_t a = 1; a < curves.size(); ++a) {
        if (curves[a].size() != curves[0].size())
            throw std::runtime_error("ablation: eval cadence differs between arms '" +
                                     arms[0].name + "' and '" + arms[a].name + "'");
        for (std::size_t r = 0; r < curves[a].size(); ++r)
            if (curves[a][r].first != curves[0][r].first)
                throw std::runtime_error("ablation: eval steps differ between arms '" +
                                         arms[0].name + "' and '" + arms[a].name + "'");
    }

    std::ofstream f = open_out(out_dir + "/combined.csv");
    f << "env_steps";
    for (const AblationArm& arm : arms) f << "," << arm.name;
    f << "\n";
    for (std::size_t r = 0; r < curves[0].size(); ++r) {
        f << curves[0][r].first;
        for (const auto& curve : curves) f << "," << fmt(curve[r].second);
        f << "\n";
    }
    if (!f) throw std::runtime_error("write failed: " + out_dir + "/combined.csv");
}

}  // namespace difo
