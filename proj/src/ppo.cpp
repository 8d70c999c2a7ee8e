#include "difo/ppo.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace difo {

void PpoConfig::validate() const {
    if (!(gamma > 0 && gamma <= 1)) throw std::invalid_argument("ppo: gamma must be in (0, 1]");
    if (!(gae_lambda > 0 && gae_lambda <= 1))
        throw std::invalid_argument("ppo: gae_lambda must be in (0, 1]");
    if (!(clip > 0)) throw std::invalid_argument("ppo: clip must be > 0");
    if (epochs < 1) throw std::invalid_argument("ppo: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("ppo: batch_size must be >= 1");
    if (learning_rate <= 0) throw std::invalid_argument("ppo: learning_rate must be > 0");
}

RolloutBatch collect_rollout(const ActFn& act, const Env& env, const Discriminator& disc,
                             int horizon_steps, RngStream& rng) {
    if (horizon_steps < 0) throw std::invalid_argument("collect_rollout: negative horizon_steps");
    const EnvSpec& spec = env.spec();
    RolloutBatch b;
    b.states = Tensor(horizon_steps, spec.state_dim);
    b.next_states = Tensor(horizon_steps, spec.state_dim);
    b.actions = Tensor(horizon_steps, spec.action_dim);
    b.pre_squash = Tensor(horizon_steps, spec.action_dim);
    b.log_probs.resize(horizon_steps);
    b.dones.assign(horizon_steps, 0);
    b.disc_snapshot = disc.snapshot_id();
    if (horizon_steps == 0) return b;

    Tensor cur = env.reset(rng);
    int t_in_ep = 0;
    for (int i = 0; i < horizon_steps; ++i) {
        ActionSample a = act(cur, rng);
        Tensor next = env.step(cur, a.action, rng);
        for (int c = 0; c < spec.state_dim; ++c) {
            b.states.at(i, c) = cur.at(0, c);
            b.next_states.at(i, c) = next.at(0, c);
        }
        for (int c = 0; c < spec.action_dim; ++c) {
            b.actions.at(i, c) = a.action.at(0, c);
            b.pre_squash.at(i, c) = a.pre_squash.at(0, c);
        }
        b.log_probs[i] = a.log_prob;
        if (++t_in_ep == spec.horizon) {
            b.dones[i] = 1;
            cur = env.reset(rng);
            t_in_ep = 0;
        } else {
            cur = next;
        }
    }
    b.rewards = disc.rewards(TransitionBatch{b.states, b.next_states}, rng);
    // the state the next action would see; fill_values bootstraps from it
    b.bootstrap_state = cur;
    return b;
}

RolloutBatch collect_rollout(const GaussianPolicy& policy, const Env& env,
                             const Discriminator& disc, int horizon_steps, RngStream& rng) {
    return collect_rollout(
        [&policy](const Tensor& s, RngStream& r) { return policy.act(s, r); }, env, disc,
        horizon_steps, rng);
}

void fill_values(RolloutBatch& batch, const Mlp& value_net) {
    int n = batch.size();
    batch.values.assign(n, 0.0);
    if (n == 0) {
        batch.bootstrap_value = 0.0;
        return;
    }
    Graph g;
    std::vector<Graph::NodeId> pids = value_net.params().enter(g, false);
    const Tensor& v = g.value(value_net.forward(g, pids, g.leaf(batch.states)));
    for (int i = 0; i < n; ++i) batch.values[i] = v.at(i, 0);
    Graph g2;
    std::vector<Graph::NodeId> pids2 = value_net.params().enter(g2, false);
    batch.bootstrap_value =
        g2.value(value_net.forward(g2, pids2, g2.leaf(batch.bootstrap_state))).at(0, 0);
}

void compute_gae(RolloutBatch& batch, double gamma, double lambda) {
    int n = batch.size();
    auto check = [n](std::size_t len, const char* what) {
        if (static_cast<int>(len) != n)
            throw std::invalid_argument(std::string("compute_gae: ") + what + " length " +
                                        std::to_string(len) + " does not match batch size " +
                                        std::to_string(n));
    };
    check(batch.rewards.size(), "rewards");
    check(batch.values.size(), "values");
    check(batch.dones.size(), "dones");
    batch.advantages.assign(n, 0.0);
    batch.returns.assign(n, 0.0);
    double acc = 0.0;
    for (int t = n - 1; t >= 0; --t) {
        double not_done = batch.dones[t] ? 0.0 : 1.0;
        double next_v = (t == n - 1) ? batch.bootstrap_value : batch.values[t + 1];
        double delta = batch.rewards[t] + gamma * next_v * not_done - batch.values[t];
        acc = delta + gamma * lambda * not_done * acc;
        batch.advantages[t] = acc;
        batch.returns[t] = acc + batch.values[t];
    }
    if (n == 0) return;
    double mean = std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    var /= n;
    double std = std::sqrt(var);
    if (std > 1e-8)
        for (double& a : batch.advantages) a = (a - mean) / std;
}

namespace {

Graph::NodeId gscale(Graph& g, Graph::NodeId x, double c) {
    const Tensor& v = g.value(x);
    return g.mul(x, g.leaf(Tensor(v.rows(), v.cols(), c)));
}

Graph::NodeId gshift(Graph& g, Graph::NodeId x, double c) {
    const Tensor& v = g.value(x);
    return g.add(x, g.leaf(Tensor(v.rows(), v.cols(), c)));
}

}  // namespace

PpoMetrics ppo_update(GaussianPolicy& policy, Mlp& value_net, const RolloutBatch& batch,
                      const PpoConfig& cfg, Adam& policy_opt, Adam& value_opt, RngStream& rng) {
    cfg.validate();
    int n = batch.size();
    if (static_cast<int>(batch.advantages.size()) != n)
        throw std::invalid_argument("ppo_update: advantages not computed for this batch");
    if (n == 0) return PpoMetrics{};

    PpoMetrics total;
    int n_minibatches = 0;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    int n_policy = policy.params().count();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
        for (int lo = 0, mb_index = 0; lo < n; lo += cfg.batch_size, ++mb_index) {
            int m = std::min(cfg.batch_size, n - lo);
            Tensor S(m, batch.states.cols()), U(m, batch.pre_squash.cols());
            Tensor adv(m, 1), neg_lp_old(m, 1), neg_ret(m, 1);
            for (int r = 0; r < m; ++r) {
                int src = order[lo + r];
                for (int c = 0; c < S.cols(); ++c) S.at(r, c) = batch.states.at(src, c);
                for (int c = 0; c < U.cols(); ++c) U.at(r, c) = batch.pre_squash.at(src, c);
                adv.at(r, 0) = batch.advantages[src];
                neg_lp_old.at(r, 0) = -batch.log_probs[src];
                neg_ret.at(r, 0) = -batch.returns[src];
            }
            Graph g;
            std::vector<Graph::NodeId> ppids = policy.params().enter(g, true);
            std::vector<Graph::NodeId> vpids = value_net.params().enter(g, true);
            Graph::NodeId lp = policy.log_prob_rows(g, ppids, S, U);
            Graph::NodeId ratio = g.exp(g.add(lp, g.leaf(neg_lp_old)));
            Graph::NodeId adv_leaf = g.leaf(adv);
            Graph::NodeId surr1 = g.mul(ratio, adv_leaf);
            // clip(r, 1-c, 1+c) = (1-c) + relu(r-(1-c)) - relu(r-(1+c))
            Graph::NodeId clipped =
                g.add(gshift(g, g.relu(gshift(g, ratio, -(1.0 - cfg.clip))), 1.0 - cfg.clip),
                      gscale(g, g.relu(gshift(g, ratio, -(1.0 + cfg.clip))), -1.0));
            Graph::NodeId surr2 = g.mul(clipped, adv_leaf);
            // min(a, b) = b - relu(b - a)
            Graph::NodeId obj = g.add(surr2, gscale(g, g.relu(g.add(surr2, gscale(g, surr1, -1.0))), -1.0));
            Graph::NodeId policy_loss = gscale(g, g.mean(obj), -1.0);
            Graph::NodeId v = value_net.forward(g, vpids, g.leaf(S));
            Graph::NodeId vloss = g.mean(g.square(g.add(v, g.leaf(neg_ret))));
            Graph::NodeId loss = g.add(policy_loss, gscale(g, vloss, cfg.vf_coef));
            if (cfg.ent_coef != 0.0)
                loss = g.add(loss, gscale(g, policy.entropy_node(g, ppids), -cfg.ent_coef));
            if (!std::isfinite(g.value(loss).at(0, 0)))
                throw std::runtime_error("ppo_update: non-finite loss in epoch " +
                                         std::to_string(epoch) + " minibatch " +
                                         std::to_string(mb_index));
            g.backward(loss);
            std::vector<Tensor> grads = policy.params().gather_grads(g, ppids);
            std::vector<Tensor> vgrads = value_net.params().gather_grads(g, vpids);
            for (Tensor& t : vgrads) grads.push_back(std::move(t));
            clip_grad_norm(grads, cfg.max_grad_norm);
            std::vector<Tensor> pgrads(grads.begin(), grads.begin() + n_policy);
            std::vector<Tensor> vpart(grads.begin() + n_policy, grads.end());
            policy_opt.step(policy.params(), pgrads);
            value_opt.step(value_net.params(), vpart);

            total.policy_loss += g.value(policy_loss).at(0, 0);
            total.value_loss += g.value(vloss).at(0, 0);
            total.entropy += policy.entropy();
            const Tensor& rv = g.value(ratio);
            int n_clipped = 0;
            for (int r = 0; r < m; ++r)
                if (std::fabs(rv.at(r, 0) - 1.0) > cfg.clip) ++n_clipped;
            total.clip_fraction += static_cast<double>(n_clipped) / m;
            ++n_minibatches;
        }
    }
    total.policy_loss /= n_minibatches;
    total.value_loss /= n_minibatches;
    total.entropy /= n_minibatches;
    total.clip_fraction /= n_minibatches;
    return total;
}

}  // namespace difo
