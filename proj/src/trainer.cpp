#include "difo/trainer.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace difo {

EvalResult evaluate(const ActFn& act, const Env& env, int n_episodes, RngStream rng) {
    if (n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
    int n_success = 0;
    for (int ep = 0; ep < n_episodes; ++ep) {
        Tensor s = env.reset(rng);
        for (int t = 0; t < env.spec().horizon; ++t) {
            ActionSample a = act(s, rng);
            s = env.step(s, a.action, rng);
            if (env.success(s)) {
                ++n_success;
                break;
            }
        }
    }
    EvalResult r;
    r.success_rate = static_cast<double>(n_success) / n_episodes;
    return r;
}

EvalResult evaluate(const GaussianPolicy& policy, const Env& env, int n_episodes, RngStream rng) {
    ActFn mean_act = [&policy](const Tensor& s, RngStream&) {
        ActionSample a;
        a.action = policy.mean_action(s);
        a.pre_squash = Tensor(1, policy.action_dim(), 0.0);
        return a;
    };
    return evaluate(mean_act, env, n_episodes, rng);
}

std::unique_ptr<Discriminator> pretrain_na(const TrainConfig& cfg, const ExpertDataset& ds,
                                           RngStream init_rng, RngStream step_rng) {
    if (cfg.variant != Variant::DifoNa)
        throw std::invalid_argument("pretrain_na: variant is " + variant_name(cfg.variant) +
                                    ", expected DIFO_NA");
    DiscriminatorConfig dc = cfg.disc;
    dc.variant = cfg.variant;
    auto disc = std::make_unique<DifoDiscriminator>(dc, ds.state_dim, init_rng);
    disc->pretrain(ds, cfg.na_pretrain_steps, step_rng);
    return disc;
}

namespace {

// One fixed float format everywhere so identical runs write identical bytes.
void csv(std::ofstream& f, double v, bool last = false) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    f << buf << (last ? "\n" : ",");
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.out_dir.empty()) throw std::invalid_argument("train: output directory not set");
    std::filesystem::create_directories(cfg.out_dir + "/checkpoints");

    ExpertDataset ds = load_dataset(cfg.expert_dataset);
    TrainResult res;
    res.out_dir = cfg.out_dir;
    res.env = make_env(cfg.env_name, cfg.env_action_noise);
    const EnvSpec& spec = res.env->spec();
    // The i.i.d. sine distribution is the intended expert data for its RL
    // counterpart, so that pairing passes the provenance check.
    bool paired = ds.env_name == "sine" && spec.name == "sinetrack";
    if (ds.env_name != spec.name && !paired)
        throw std::runtime_error("train: dataset was generated on env \"" + ds.env_name +
                                 "\" but the config trains on \"" + spec.name + "\"");
    if (ds.state_dim != spec.state_dim)
        throw std::runtime_error("train: dataset state_dim " + std::to_string(ds.state_dim) +
                                 " does not match env state_dim " +
                                 std::to_string(spec.state_dim));

    {
        std::ofstream f(cfg.out_dir + "/config.ini");
        f << cfg.to_map().to_text();
    }

    RngStream root(cfg.seed);
    RngStream rollout_rng = root.substream(1);
    RngStream disc_rng = root.substream(5);
    RngStream ppo_rng = root.substream(6);

    if (cfg.variant == Variant::DifoNa) {
        res.disc = pretrain_na(cfg, ds, root.substream(2), root.substream(7));
    } else {
        DiscriminatorConfig dc = cfg.disc;
        dc.variant = cfg.variant;
        RngStream init = root.substream(2);
        res.disc = make_discriminator(dc, spec.state_dim, init);
    }
    {
        RngStream init = root.substream(3);
        res.policy = std::make_unique<GaussianPolicy>(spec, cfg.policy, init);
    }
    {
        MlpConfig vc;
        vc.widths.push_back(spec.state_dim);
        for (int w : cfg.value_hidden) vc.widths.push_back(w);
        vc.widths.push_back(1);
        vc.activation = Activation::Tanh;
        RngStream init = root.substream(4);
        res.value_net = std::make_unique<Mlp>(vc, init);
    }
    Adam policy_opt(res.policy->params(), cfg.ppo.learning_rate);
    Adam value_opt(res.value_net->params(), cfg.ppo.learning_rate);
    ReplayBuffer buffer(cfg.disc.buffer_capacity, spec.state_dim);

    std::ofstream metrics_csv(cfg.out_dir + "/metrics.csv");
    metrics_csv << "step,L_D,L_BCE,L_MSE,accuracy,mean_reward_agent,mean_reward_expert\n";
    std::ofstream rounds_csv(cfg.out_dir + "/rounds.csv");
    rounds_csv << "round,env_steps,mean_reward,disc_accuracy,disc_accuracy_expert,"
                  "disc_accuracy_agent,policy_loss,value_loss,entropy,clip_fraction\n";
    std::ofstream eval_csv(cfg.out_dir + "/eval.csv");
    eval_csv << "env_steps,success_rate\n";

    long long n_rounds = cfg.total_env_steps / cfg.rollout_steps;
    long long disc_step_no = 0, eval_marker = 0;
    int eval_idx = 0;

    auto run_eval = [&]() {
        ++eval_idx;
        EvalResult ev =
            evaluate(*res.policy, *res.env, cfg.eval_episodes, root.substream(1000 + eval_idx));
        eval_csv << res.env_steps << ",";
        csv(eval_csv, ev.success_rate, true);
        res.final_eval_success = ev.success_rate;
        res.best_eval_success = std::max(res.best_eval_success, ev.success_rate);
        ++res.evals;
        std::string stem = cfg.out_dir + "/checkpoints/step_" + std::to_string(res.env_steps);
        res.disc->save(stem + "_discriminator.ckpt");
        save_checkpoint(stem + "_policy.ckpt", res.policy->arch_header(), res.policy->params());
        save_checkpoint(stem + "_value.ckpt", res.value_net->arch_header("value"),
                        res.value_net->params());
    };

    for (long long round = 0; round < n_rounds; ++round) {
        RolloutBatch batch =
            collect_rollout(*res.policy, *res.env, *res.disc, cfg.rollout_steps, rollout_rng);
        buffer.push(batch.states, batch.next_states);
        DiscMetrics dm;
        if (!res.disc->frozen()) {
            for (int k = 0; k < cfg.disc_updates_per_round; ++k) {
                std::vector<int> idx(cfg.disc.batch_size);
                for (int& i : idx) i = disc_rng.uniform_int(0, ds.size() - 1);
                TransitionBatch expert{ds.states_at(idx), ds.next_states_at(idx)};
                TransitionBatch agent = buffer.sample(cfg.disc.batch_size, disc_rng);
                dm = res.disc->step(expert, agent, disc_rng);
                ++disc_step_no;
                metrics_csv << disc_step_no << ",";
                csv(metrics_csv, dm.L_D);
                csv(metrics_csv, dm.L_BCE);
                csv(metrics_csv, dm.L_MSE);
                csv(metrics_csv, dm.accuracy);
                csv(metrics_csv, dm.mean_reward_agent);
                csv(metrics_csv, dm.mean_reward_expert, true);
            }
        }
        PpoMetrics pm;
        // a frozen reward model needs no warm-up; otherwise give the
        // discriminator a head start so early rewards are informative
        if (res.disc->frozen() || round >= cfg.disc_warmup_rounds) {
            fill_values(batch, *res.value_net);
            compute_gae(batch, cfg.ppo.gamma, cfg.ppo.gae_lambda);
            pm = ppo_update(*res.policy, *res.value_net, batch, cfg.ppo, policy_opt, value_opt,
                            ppo_rng);
        }
        res.env_steps += cfg.rollout_steps;
        res.rounds = static_cast<int>(round + 1);
        double mean_reward =
            std::accumulate(batch.rewards.begin(), batch.rewards.end(), 0.0) / batch.size();
        rounds_csv << round << "," << res.env_steps << ",";
        csv(rounds_csv, mean_reward);
        csv(rounds_csv, dm.accuracy);
        csv(rounds_csv, dm.accuracy_expert);
        csv(rounds_csv, dm.accuracy_agent);
        csv(rounds_csv, pm.policy_loss);
        csv(rounds_csv, pm.value_loss);
        csv(rounds_csv, pm.entropy);
        csv(rounds_csv, pm.clip_fraction, true);

        if (res.env_steps / cfg.eval_every > eval_marker) {
            eval_marker = res.env_steps / cfg.eval_every;
            run_eval();
        }
    }
    // make sure the final parameters are always measured and checkpointed
    if (n_rounds > 0 && res.env_steps % cfg.eval_every != 0) run_eval();
    return res;
}

}  // namespace difo
