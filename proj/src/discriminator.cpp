#include "difo/discriminator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace difo {

double stable_sigmoid(double z) {
    // p lands in [0.5, 1), so both "1 - p" here and "1 - sigmoid" at call sites
    // are exact subtractions (Sterbenz lemma): sigmoid(-z) == 1 - sigmoid(z)
    // holds bitwise, which the label-swap contract relies on.
    double p = 1.0 / (1.0 + std::exp(-std::fabs(z)));
    return z >= 0 ? p : 1.0 - p;
}

double stable_softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

double clamp_logit(double z) { return z < -20.0 ? -20.0 : (z > 20.0 ? 20.0 : z); }

Variant parse_variant(const std::string& name) {
    std::string up(name.size(), '\0');
    std::transform(name.begin(), name.end(), up.begin(),
                   [](unsigned char c) { return c == '-' ? '_' : std::toupper(c); });
    if (up == "DIFO") return Variant::Difo;
    if (up == "DIFO_NA") return Variant::DifoNa;
    if (up == "DIFO_UNCOND") return Variant::DifoUncond;
    if (up == "GAIFO") return Variant::Gaifo;
    throw std::invalid_argument("unknown variant \"" + name +
                                "\" (expected DIFO, DIFO_NA, DIFO_UNCOND, or GAIFO)");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Difo: return "DIFO";
        case Variant::DifoNa: return "DIFO_NA";
        case Variant::DifoUncond: return "DIFO_UNCOND";
        case Variant::Gaifo: return "GAIFO";
    }
    throw std::logic_error("variant_name: bad enum value");
}

void DiscriminatorConfig::validate() const {
    if (!(lambda_sigma > 0)) throw std::invalid_argument("discriminator: lambda_sigma must be > 0");
    if (lambda_mse < 0 || lambda_bce < 0)
        throw std::invalid_argument("discriminator: loss weights must be >= 0");
    if (n_reward_samples < 1)
        throw std::invalid_argument("discriminator: n_reward_samples must be >= 1");
    if (learning_rate <= 0) throw std::invalid_argument("discriminator: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("discriminator: batch_size must be >= 1");
    if (buffer_capacity < 1)
        throw std::invalid_argument("discriminator: buffer_capacity must be >= 1");
    if (sample_lo < 1 || sample_hi > T || sample_lo > sample_hi)
        throw std::invalid_argument("discriminator: sample range [" + std::to_string(sample_lo) +
                                    ", " + std::to_string(sample_hi) + "] not within [1, " +
                                    std::to_string(T) + "]");
}

ReplayBuffer::ReplayBuffer(int capacity, int state_dim)
    : capacity_(capacity), state_dim_(state_dim) {
    if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
    if (state_dim < 1) throw std::invalid_argument("ReplayBuffer: state_dim must be >= 1");
    s_.resize(static_cast<std::size_t>(capacity) * state_dim);
    sp_.resize(static_cast<std::size_t>(capacity) * state_dim);
}

void ReplayBuffer::push(const Tensor& s, const Tensor& s_next) {
    if (!s.same_shape(s_next) || s.cols() != state_dim_)
        throw std::invalid_argument("ReplayBuffer::push: expected matching m x " +
                                    std::to_string(state_dim_) + " batches");
    for (int r = 0; r < s.rows(); ++r) {
        double* ds = &s_[static_cast<std::size_t>(head_) * state_dim_];
        double* dp = &sp_[static_cast<std::size_t>(head_) * state_dim_];
        for (int c = 0; c < state_dim_; ++c) {
            ds[c] = s.at(r, c);
            dp[c] = s_next.at(r, c);
        }
        head_ = (head_ + 1) % capacity_;
        if (size_ < capacity_) ++size_;
        ++inserted_;
    }
}

TransitionBatch ReplayBuffer::sample(int n, RngStream& rng) const {
    if (size_ == 0) throw std::runtime_error("ReplayBuffer::sample: buffer is empty");
    if (n < 1) throw std::invalid_argument("ReplayBuffer::sample: n must be >= 1");
    TransitionBatch b{Tensor(n, state_dim_), Tensor(n, state_dim_)};
    for (int r = 0; r < n; ++r) {
        int slot = rng.uniform_int(0, size_ - 1);
        // slot counts from the oldest retained entry
        int idx = size_ < capacity_ ? slot : (head_ + slot) % capacity_;
        for (int c = 0; c < state_dim_; ++c) {
            b.s.at(r, c) = s_[static_cast<std::size_t>(idx) * state_dim_ + c];
            b.s_next.at(r, c) = sp_[static_cast<std::size_t>(idx) * state_dim_ + c];
        }
    }
    return b;
}

Transition ReplayBuffer::row(int i) const {
    if (i < 0 || i >= size_) throw std::out_of_range("ReplayBuffer::row: index " + std::to_string(i));
    int idx = size_ < capacity_ ? i : (head_ + i) % capacity_;
    Transition tr;
    tr.s.assign(&s_[static_cast<std::size_t>(idx) * state_dim_],
                &s_[static_cast<std::size_t>(idx) * state_dim_] + state_dim_);
    tr.s_next.assign(&sp_[static_cast<std::size_t>(idx) * state_dim_],
                     &sp_[static_cast<std::size_t>(idx) * state_dim_] + state_dim_);
    return tr;
}

namespace {

Graph::NodeId gconst(Graph& g, const Tensor& like, double v) {
    return g.leaf(Tensor(like.rows(), like.cols(), v));
}

Graph::NodeId gscale(Graph& g, Graph::NodeId x, double c) {
    const Tensor& v = g.value(x);
    return g.mul(x, g.leaf(Tensor(v.rows(), v.cols(), c)));
}

Graph::NodeId gsub(Graph& g, Graph::NodeId a, Graph::NodeId b) {
    return g.add(a, gscale(g, b, -1.0));
}

MlpUnetConfig unet_config(const DiscriminatorConfig& cfg, int state_dim) {
    MlpUnetConfig u;
    bool uncond = cfg.variant == Variant::DifoUncond;
    u.x_dim = uncond ? 2 * state_dim : state_dim;
    u.cond_state_dim = uncond ? 0 : state_dim;
    u.widths = cfg.widths;
    u.emb_dim = cfg.emb_dim;
    u.fourier_bands = cfg.fourier_bands;
    return u;
}

void check_batch(const TransitionBatch& b, int state_dim, const char* who) {
    if (b.s.rows() == 0) throw std::invalid_argument(std::string(who) + ": empty batch");
    if (!b.s.same_shape(b.s_next) || b.s.cols() != state_dim)
        throw std::invalid_argument(std::string(who) + ": batch shape " + b.s.shape_str() +
                                    " does not match state_dim " + std::to_string(state_dim));
}

}  // namespace

DifoDiscriminator::DifoDiscriminator(DiscriminatorConfig cfg, int state_dim, RngStream& init_rng)
    : cfg_(std::move(cfg)),
      state_dim_(state_dim),
      sched_(make_schedule(cfg_.T, cfg_.beta_start, cfg_.beta_end, cfg_.sample_lo, cfg_.sample_hi)),
      net_(unet_config(cfg_, state_dim), init_rng),
      opt_(net_.params(), cfg_.learning_rate) {
    cfg_.validate();
    if (cfg_.variant == Variant::Gaifo)
        throw std::invalid_argument("DifoDiscriminator: GAIFO uses its own class");
}

Tensor DifoDiscriminator::target_rows(const TransitionBatch& batch) const {
    if (cfg_.variant != Variant::DifoUncond) return batch.s_next;
    Tensor x(batch.s.rows(), 2 * state_dim_);
    for (int r = 0; r < batch.s.rows(); ++r) {
        for (int c = 0; c < state_dim_; ++c) {
            x.at(r, c) = batch.s.at(r, c);
            x.at(r, state_dim_ + c) = batch.s_next.at(r, c);
        }
    }
    return x;
}

const Tensor* DifoDiscriminator::cond_ptr(const TransitionBatch& batch) const {
    return cfg_.variant == Variant::DifoUncond ? nullptr : &batch.s;
}

void DifoDiscriminator::label_losses(const TransitionBatch& batch, RngStream& rng, int n_samples,
                                     std::vector<double>* loss_e,
                                     std::vector<double>* loss_a) const {
    Tensor x0 = target_rows(batch);
    const Tensor* cond = cond_ptr(batch);
    int m = x0.rows();
    if (loss_e) loss_e->assign(m, 0.0);
    if (loss_a) loss_a->assign(m, 0.0);
    for (int k = 0; k < n_samples; ++k) {
        std::vector<int> ts(m);
        for (int r = 0; r < m; ++r) ts[r] = rng.uniform_int(cfg_.sample_lo, cfg_.sample_hi);
        Tensor eps(m, x0.cols());
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
        Graph g;
        std::vector<Graph::NodeId> pids = net_.params().enter(g, false);
        if (loss_e) {
            Graph::NodeId rows =
                denoising_loss_rows(g, net_, pids, sched_, x0, ts, eps, cond, Label::Expert);
            for (int r = 0; r < m; ++r) (*loss_e)[r] += g.value(rows).at(r, 0);
        }
        if (loss_a) {
            Graph::NodeId rows =
                denoising_loss_rows(g, net_, pids, sched_, x0, ts, eps, cond, Label::Agent);
            for (int r = 0; r < m; ++r) (*loss_a)[r] += g.value(rows).at(r, 0);
        }
    }
    for (int r = 0; r < m; ++r) {
        if (loss_e) (*loss_e)[r] /= n_samples;
        if (loss_a) (*loss_a)[r] /= n_samples;
    }
}

DiscriminatorOutput DifoDiscriminator::discriminate(const Tensor& s, const Tensor& s_next,
                                                    RngStream& rng, bool swap_labels) const {
    if (cfg_.variant == Variant::DifoNa)
        throw std::runtime_error("discriminate: the pretrained variant has no adversarial score");
    TransitionBatch b{s, s_next};
    check_batch(b, state_dim_, "discriminate");
    if (s.rows() != 1) throw std::invalid_argument("discriminate: expects a single transition");
    std::vector<double> le, la;
    label_losses(b, rng, cfg_.n_reward_samples, &le, &la);
    DiscriminatorOutput out;
    out.loss_e = swap_labels ? la[0] : le[0];
    out.loss_a = swap_labels ? le[0] : la[0];
    out.logit = clamp_logit(cfg_.lambda_sigma * (out.loss_a - out.loss_e));
    out.d = stable_sigmoid(out.logit);
    return out;
}

DiscMetrics DifoDiscriminator::step(const TransitionBatch& expert, const TransitionBatch& agent,
                                    RngStream& rng) {
    if (frozen_ || cfg_.variant == Variant::DifoNa) return DiscMetrics{};
    check_batch(expert, state_dim_, "discriminator_step(expert)");
    check_batch(agent, state_dim_, "discriminator_step(agent)");
    int me = expert.s.rows(), ma = agent.s.rows();
    Tensor x0e = target_rows(expert), x0a = target_rows(agent);

    auto draw = [&](int m, int cols, bool full_range, std::vector<int>* ts, Tensor* eps) {
        ts->resize(m);
        int lo = full_range ? 1 : cfg_.sample_lo;
        int hi = full_range ? cfg_.T : cfg_.sample_hi;
        for (int r = 0; r < m; ++r) (*ts)[r] = rng.uniform_int(lo, hi);
        *eps = Tensor(m, cols);
        for (std::size_t i = 0; i < eps->size(); ++i) (*eps)[i] = rng.normal();
    };
    std::vector<int> ts_e, ts_a, ts_m, ts_m2;
    Tensor eps_e, eps_a, eps_m, eps_m2;
    draw(me, x0e.cols(), false, &ts_e, &eps_e);
    draw(ma, x0a.cols(), false, &ts_a, &eps_a);
    draw(me, x0e.cols(), cfg_.mse_full_range, &ts_m, &eps_m);
    if (cfg_.mse_on_agent) draw(ma, x0a.cols(), cfg_.mse_full_range, &ts_m2, &eps_m2);

    Graph g;
    std::vector<Graph::NodeId> pids = net_.params().enter(g, true);
    auto rows = [&](const Tensor& x0, const std::vector<int>& ts, const Tensor& eps,
                    const Tensor* cond, Label lab) {
        return denoising_loss_rows(g, net_, pids, sched_, x0, ts, eps, cond, lab);
    };
    Graph::NodeId z_e = gscale(g, gsub(g, rows(x0e, ts_e, eps_e, cond_ptr(expert), Label::Agent),
                                       rows(x0e, ts_e, eps_e, cond_ptr(expert), Label::Expert)),
                               cfg_.lambda_sigma);
    Graph::NodeId z_a = gscale(g, gsub(g, rows(x0a, ts_a, eps_a, cond_ptr(agent), Label::Agent),
                                       rows(x0a, ts_a, eps_a, cond_ptr(agent), Label::Expert)),
                               cfg_.lambda_sigma);
    // Bounded logistic objective: drives z up on expert data and down on agent
    // data, with gradients that vanish once a sample is confidently separated.
    Graph::NodeId bce =
        g.add(g.mean(g.softplus(gscale(g, z_e, -1.0))), g.mean(g.softplus(z_a)));
    Graph::NodeId mse = g.mean(rows(x0e, ts_m, eps_m, cond_ptr(expert), Label::Expert));
    if (cfg_.mse_on_agent) {
        Graph::NodeId mse_a = g.mean(rows(x0a, ts_m2, eps_m2, cond_ptr(agent), Label::Agent));
        double we = static_cast<double>(me) / (me + ma);
        double wa = static_cast<double>(ma) / (me + ma);
        mse = g.add(gscale(g, mse, we), gscale(g, mse_a, wa));
    }
    Graph::NodeId loss = g.add(gscale(g, mse, cfg_.lambda_mse), gscale(g, bce, cfg_.lambda_bce));
    g.backward(loss);
    std::vector<Tensor> grads = net_.params().gather_grads(g, pids);
    if (cfg_.max_grad_norm > 0) clip_grad_norm(grads, cfg_.max_grad_norm);
    opt_.step(net_.params(), grads);
    ++snapshot_;

    DiscMetrics m;
    m.L_D = g.value(loss).at(0, 0);
    m.L_BCE = g.value(bce).at(0, 0);
    m.L_MSE = g.value(mse).at(0, 0);
    int ce = 0, ca = 0;
    double re = 0, ra = 0;
    for (int r = 0; r < me; ++r) {
        double z = g.value(z_e).at(r, 0);
        if (z > 0) ++ce;
        re += stable_softplus(clamp_logit(z));
    }
    for (int r = 0; r < ma; ++r) {
        double z = g.value(z_a).at(r, 0);
        if (z < 0) ++ca;
        ra += stable_softplus(clamp_logit(z));
    }
    m.accuracy = static_cast<double>(ce + ca) / (me + ma);
    m.accuracy_expert = static_cast<double>(ce) / me;
    m.accuracy_agent = static_cast<double>(ca) / ma;
    m.mean_reward_expert = re / me;
    m.mean_reward_agent = ra / ma;
    return m;
}

std::vector<double> DifoDiscriminator::rewards(const TransitionBatch& batch,
                                               RngStream& rng) const {
    check_batch(batch, state_dim_, "reward");
    int m = batch.s.rows();
    std::vector<double> out(m);
    if (cfg_.variant == Variant::DifoNa) {
        std::vector<double> le;
        label_losses(batch, rng, cfg_.n_reward_samples, &le, nullptr);
        for (int r = 0; r < m; ++r) out[r] = -le[r];
        return out;
    }
    std::vector<double> le, la;
    label_losses(batch, rng, cfg_.n_reward_samples, &le, &la);
    for (int r = 0; r < m; ++r)
        out[r] = stable_softplus(clamp_logit(cfg_.lambda_sigma * (la[r] - le[r])));
    return out;
}

void DifoDiscriminator::set_n_reward_samples(int n) {
    if (n < 1) throw std::invalid_argument("set_n_reward_samples: n must be >= 1");
    cfg_.n_reward_samples = n;
}

void DifoDiscriminator::pretrain(const ExpertDataset& ds, int steps, RngStream& rng) {
    if (cfg_.variant != Variant::DifoNa)
        throw std::runtime_error("pretrain: only the pretrained variant trains this way");
    if (ds.state_dim != state_dim_)
        throw std::invalid_argument("pretrain: dataset state_dim " + std::to_string(ds.state_dim) +
                                    " does not match discriminator " + std::to_string(state_dim_));
    double base_lr = opt_.learning_rate();
    for (int step = 1; step <= steps; ++step) {
        // Two-stage decay: most transitions in a reaching task hover at the
        // goal, so the rare far-from-goal rows only fit once the rate drops.
        double scale = step > 0.8 * steps ? 0.09 : step > 0.48 * steps ? 0.3 : 1.0;
        opt_.set_learning_rate(base_lr * scale);
        std::vector<int> idx(cfg_.batch_size);
        for (int& i : idx) i = rng.uniform_int(0, ds.size() - 1);
        TransitionBatch b{ds.states_at(idx), ds.next_states_at(idx)};
        Tensor x0 = target_rows(b);
        std::vector<int> ts(x0.rows());
        for (int& t : ts) t = rng.uniform_int(1, cfg_.T);  // full range: generative objective
        Tensor eps(x0.rows(), x0.cols());
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
        Graph g;
        std::vector<Graph::NodeId> pids = net_.params().enter(g, true);
        Graph::NodeId loss = g.mean(
            denoising_loss_rows(g, net_, pids, sched_, x0, ts, eps, cond_ptr(b), Label::Expert));
        g.backward(loss);
        std::vector<Tensor> grads = net_.params().gather_grads(g, pids);
        if (cfg_.max_grad_norm > 0) clip_grad_norm(grads, cfg_.max_grad_norm);
        opt_.step(net_.params(), grads);
        ++snapshot_;
    }
    opt_.set_learning_rate(base_lr);
    frozen_ = true;
}

void DifoDiscriminator::save(const std::string& path) const {
    save_checkpoint(path, net_.arch_header(), net_.params());
}

void DifoDiscriminator::load(const std::string& path) {
    load_checkpoint(path, net_.arch_header(), net_.params());
    ++snapshot_;
}

GaifoDiscriminator::GaifoDiscriminator(DiscriminatorConfig cfg, int state_dim, RngStream& init_rng)
    : cfg_(std::move(cfg)),
      state_dim_(state_dim),
      net_(
          [&] {
              MlpConfig mc;
              mc.widths.push_back(2 * state_dim);
              for (int w : cfg_.gaifo_hidden) mc.widths.push_back(w);
              mc.widths.push_back(1);
              mc.activation = Activation::Tanh;
              return mc;
          }(),
          init_rng),
      opt_(net_.params(), cfg_.learning_rate) {
    cfg_.validate();
}

std::vector<double> GaifoDiscriminator::logits(const TransitionBatch& batch) const {
    check_batch(batch, state_dim_, "gaifo logits");
    int m = batch.s.rows();
    Tensor x(m, 2 * state_dim_);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < state_dim_; ++c) {
            x.at(r, c) = batch.s.at(r, c);
            x.at(r, state_dim_ + c) = batch.s_next.at(r, c);
        }
    Graph g;
    std::vector<Graph::NodeId> pids = net_.params().enter(g, false);
    Graph::NodeId z = net_.forward(g, pids, g.leaf(x));
    std::vector<double> out(m);
    for (int r = 0; r < m; ++r) out[r] = g.value(z).at(r, 0);
    return out;
}

DiscMetrics GaifoDiscriminator::step(const TransitionBatch& expert, const TransitionBatch& agent,
                                     RngStream&) {
    check_batch(expert, state_dim_, "discriminator_step(expert)");
    check_batch(agent, state_dim_, "discriminator_step(agent)");
    int me = expert.s.rows(), ma = agent.s.rows();
    auto pack = [&](const TransitionBatch& b, int m) {
        Tensor x(m, 2 * state_dim_);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < state_dim_; ++c) {
                x.at(r, c) = b.s.at(r, c);
                x.at(r, state_dim_ + c) = b.s_next.at(r, c);
            }
        return x;
    };
    Graph g;
    std::vector<Graph::NodeId> pids = net_.params().enter(g, true);
    Graph::NodeId z_e = net_.forward(g, pids, g.leaf(pack(expert, me)));
    Graph::NodeId z_a = net_.forward(g, pids, g.leaf(pack(agent, ma)));
    Graph::NodeId loss =
        g.add(g.mean(g.softplus(gscale(g, z_e, -1.0))), g.mean(g.softplus(z_a)));
    g.backward(loss);
    std::vector<Tensor> grads = net_.params().gather_grads(g, pids);
    if (cfg_.max_grad_norm > 0) clip_grad_norm(grads, cfg_.max_grad_norm);
    opt_.step(net_.params(), grads);
    ++snapshot_;

    DiscMetrics m;
    m.L_D = m.L_BCE = g.value(loss).at(0, 0);
    m.L_MSE = 0.0;
    int ce = 0, ca = 0;
    double re = 0, ra = 0;
    for (int r = 0; r < me; ++r) {
        double z = g.value(z_e).at(r, 0);
        if (z > 0) ++ce;
        re += stable_softplus(clamp_logit(z));
    }
    for (int r = 0; r < ma; ++r) {
        double z = g.value(z_a).at(r, 0);
        if (z < 0) ++ca;
        ra += stable_softplus(clamp_logit(z));
    }
    m.accuracy = static_cast<double>(ce + ca) / (me + ma);
    m.accuracy_expert = static_cast<double>(ce) / me;
    m.accuracy_agent = static_cast<double>(ca) / ma;
    m.mean_reward_expert = re / me;
    m.mean_reward_agent = ra / ma;
    return m;
}

std::vector<double> GaifoDiscriminator::rewards(const TransitionBatch& batch, RngStream&) const {
    std::vector<double> z = logits(batch);
    for (double& v : z) v = stable_softplus(clamp_logit(v));
    return z;
}

void GaifoDiscriminator::save(const std::string& path) const {
    save_checkpoint(path, net_.arch_header("gaifo"), net_.params());
}

void GaifoDiscriminator::load(const std::string& path) {
    load_checkpoint(path, net_.arch_header("gaifo"), net_.params());
    ++snapshot_;
}

std::unique_ptr<Discriminator> make_discriminator(const DiscriminatorConfig& cfg, int state_dim,
                                                  RngStream& init_rng) {
    if (cfg.variant == Variant::Gaifo)
        return std::make_unique<GaifoDiscriminator>(cfg, state_dim, init_rng);
    return std::make_unique<DifoDiscriminator>(cfg, state_dim, init_rng);
}

std::vector<StabilityRow> reward_stability(Discriminator& disc, const TransitionBatch& batch,
                                           int n_repeats, const std::vector<int>& n_samples_list,
                                           RngStream& rng) {
    if (n_repeats < 2)
        throw std::invalid_argument("reward_stability: n_repeats must be >= 2 (std undefined)");
    if (batch.s.rows() == 0) throw std::invalid_argument("reward_stability: empty batch");
    int m = batch.s.rows();
    int original_n = disc.config().n_reward_samples;
    std::vector<StabilityRow> table;
    for (int n : n_samples_list) {
        disc.set_n_reward_samples(n);
        std::vector<std::vector<double>> draws(n_repeats);
        for (int k = 0; k < n_repeats; ++k) draws[k] = disc.rewards(batch, rng);
        StabilityRow row;
        row.n_samples = n;
        double sum = 0;
        int included = 0;
        for (int r = 0; r < m; ++r) {
            double mean = 0;
            for (int k = 0; k < n_repeats; ++k) mean += draws[k][r];
            mean /= n_repeats;
            if (mean == 0.0) {
                ++row.n_excluded;
                continue;
            }
            double var = 0;
            for (int k = 0; k < n_repeats; ++k) {
                double d = draws[k][r] - mean;
                var += d * d;
            }
            var /= n_repeats - 1;
            sum += std::sqrt(var) / std::fabs(mean);
            ++included;
        }
        row.std_mean_ratio = included > 0 ? sum / included : 0.0;
        table.push_back(row);
    }
    disc.set_n_reward_samples(original_n);
    return table;
}

}  // namespace difo
