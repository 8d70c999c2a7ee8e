#include "difo/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace difo {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2 pi)

// log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), stable for large |u|.
double log_one_minus_tanh_sq(double u) {
    double sp = std::max(-2.0 * u, 0.0) + std::log1p(std::exp(-std::fabs(2.0 * u)));
    return 2.0 * (std::log(2.0) - u - sp);
}

}  // namespace

GaussianPolicy::GaussianPolicy(const EnvSpec& env, PolicyConfig cfg, RngStream& rng)
    : cfg_(std::move(cfg)), state_dim_(env.state_dim), action_dim_(env.action_dim) {
    if (env.action_lo != -env.action_hi || env.action_hi <= 0)
        throw std::invalid_argument("GaussianPolicy: action box must be symmetric, got [" +
                                    std::to_string(env.action_lo) + ", " +
                                    std::to_string(env.action_hi) + "]");
    if (cfg_.hidden.empty()) throw std::invalid_argument("GaussianPolicy: no hidden layers");
    if (!(cfg_.logstd_min < cfg_.logstd_max))
        throw std::invalid_argument("GaussianPolicy: logstd bounds out of order");
    scale_ = env.action_hi;
    int prev = state_dim_;
    for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
        int w = cfg_.hidden[i];
        w_.push_back(params_.add("pi.w" + std::to_string(i), linear_init(prev, w, rng)));
        b_.push_back(params_.add("pi.b" + std::to_string(i), Tensor(1, w, 0.0)));
        prev = w;
    }
    w_.push_back(params_.add("pi.mu_w", linear_init(prev, action_dim_, rng)));
    b_.push_back(params_.add("pi.mu_b", Tensor(1, action_dim_, 0.0)));
    logstd_ = params_.add("pi.logstd", Tensor(1, action_dim_, cfg_.logstd_init));
}

double GaussianPolicy::clamped_logstd(int d) const {
    double v = params_.value(logstd_).at(0, d);
    return v < cfg_.logstd_min ? cfg_.logstd_min : (v > cfg_.logstd_max ? cfg_.logstd_max : v);
}

Graph::NodeId GaussianPolicy::mu_rows(Graph& g, const std::vector<Graph::NodeId>& pids,
                                      Graph::NodeId states) const {
    Graph::NodeId h = states;
    int rows = g.value(states).rows();
    std::size_t layers = cfg_.hidden.size() + 1;
    for (std::size_t i = 0; i < layers; ++i) {
        h = g.add(g.matmul(h, pids[w_[i]]), g.broadcast(pids[b_[i]], rows));
        if (i + 1 < layers) h = g.tanh(h);
    }
    return h;
}

ActionSample GaussianPolicy::act(const Tensor& state, RngStream& rng) const {
    Graph g;
    std::vector<Graph::NodeId> pids = params_.enter(g, false);
    const Tensor& mu = g.value(mu_rows(g, pids, g.leaf(state)));
    ActionSample out;
    out.pre_squash = Tensor(1, action_dim_);
    out.action = Tensor(1, action_dim_);
    for (int d = 0; d < action_dim_; ++d) {
        double ls = clamped_logstd(d);
        double z = rng.normal();
        double u = mu.at(0, d) + std::exp(ls) * z;
        out.pre_squash.at(0, d) = u;
        out.action.at(0, d) = scale_ * std::tanh(u);
        out.log_prob += -0.5 * z * z - ls - kHalfLog2Pi;
        out.log_prob -= std::log(scale_) + log_one_minus_tanh_sq(u);
    }
    return out;
}

Tensor GaussianPolicy::mean_action(const Tensor& state) const {
    Graph g;
    std::vector<Graph::NodeId> pids = params_.enter(g, false);
    const Tensor& mu = g.value(mu_rows(g, pids, g.leaf(state)));
    Tensor a(1, action_dim_);
    for (int d = 0; d < action_dim_; ++d) a.at(0, d) = scale_ * std::tanh(mu.at(0, d));
    return a;
}

double GaussianPolicy::log_prob_of(const Tensor& state, const Tensor& action) const {
    Graph g;
    std::vector<Graph::NodeId> pids = params_.enter(g, false);
    const Tensor& mu = g.value(mu_rows(g, pids, g.leaf(state)));
    double lp = 0.0;
    for (int d = 0; d < action_dim_; ++d) {
        double frac = action.at(0, d) / scale_;
        frac = std::max(-1.0 + 1e-12, std::min(1.0 - 1e-12, frac));
        double u = std::atanh(frac);
        double ls = clamped_logstd(d);
        double z = (u - mu.at(0, d)) * std::exp(-ls);
        lp += -0.5 * z * z - ls - kHalfLog2Pi;
        lp -= std::log(scale_) + log_one_minus_tanh_sq(u);
    }
    return lp;
}

Graph::NodeId GaussianPolicy::clamped_logstd_node(Graph& g,
                                                  const std::vector<Graph::NodeId>& pids) const {
    // clamp(x) = lo + relu(x - lo) - relu(x - hi)
    Graph::NodeId ls = pids[logstd_];
    Graph::NodeId above_lo = g.relu(g.add(ls, g.leaf(Tensor(1, action_dim_, -cfg_.logstd_min))));
    Graph::NodeId above_hi = g.relu(g.add(ls, g.leaf(Tensor(1, action_dim_, -cfg_.logstd_max))));
    return g.add(g.add(g.leaf(Tensor(1, action_dim_, cfg_.logstd_min)), above_lo),
                 g.mul(above_hi, g.leaf(Tensor(1, action_dim_, -1.0))));
}

Graph::NodeId GaussianPolicy::log_prob_rows(Graph& g, const std::vector<Graph::NodeId>& pids,
                                            const Tensor& states, const Tensor& pre_squash) const {
    if (states.rows() != pre_squash.rows() || pre_squash.cols() != action_dim_)
        throw std::invalid_argument("log_prob_rows: states " + states.shape_str() +
                                    " vs pre_squash " + pre_squash.shape_str());
    int m = states.rows();
    Graph::NodeId mu = mu_rows(g, pids, g.leaf(states));
    Graph::NodeId ls_b = g.broadcast(clamped_logstd_node(g, pids), m);
    Graph::NodeId inv_sigma = g.exp(g.mul(ls_b, g.leaf(Tensor(m, action_dim_, -1.0))));
    Graph::NodeId diff = g.add(g.leaf(pre_squash), g.mul(mu, g.leaf(Tensor(m, action_dim_, -1.0))));
    Graph::NodeId zsq = g.square(g.mul(diff, inv_sigma));
    Graph::NodeId ones = g.leaf(Tensor(action_dim_, 1, 1.0));
    Graph::NodeId quad = g.mul(g.matmul(zsq, ones), g.leaf(Tensor(m, 1, -0.5)));
    Graph::NodeId ls_sum = g.mul(g.matmul(ls_b, ones), g.leaf(Tensor(m, 1, -1.0)));
    // parameter-independent part: normalizing constant plus the squash Jacobian
    Tensor rest(m, 1);
    for (int r = 0; r < m; ++r) {
        double v = -action_dim_ * kHalfLog2Pi;
        for (int d = 0; d < action_dim_; ++d)
            v -= std::log(scale_) + log_one_minus_tanh_sq(pre_squash.at(r, d));
        rest.at(r, 0) = v;
    }
    return g.add(g.add(quad, ls_sum), g.leaf(rest));
}

double GaussianPolicy::entropy() const {
    double h = 0.0;
    for (int d = 0; d < action_dim_; ++d) h += clamped_logstd(d) + 0.5 + kHalfLog2Pi;
    return h;
}

Graph::NodeId GaussianPolicy::entropy_node(Graph& g, const std::vector<Graph::NodeId>& pids) const {
    return g.add(g.sum(clamped_logstd_node(g, pids)),
                 g.leaf(Tensor(1, 1, action_dim_ * (0.5 + kHalfLog2Pi))));
}

std::vector<std::pair<std::string, std::string>> GaussianPolicy::arch_header() const {
    std::string hid;
    for (std::size_t i = 0; i < cfg_.hidden.size(); ++i)
        hid += (i ? "," : "") + std::to_string(cfg_.hidden[i]);
    return {{"net", "gaussian_policy"},
            {"state_dim", std::to_string(state_dim_)},
            {"action_dim", std::to_string(action_dim_)},
            {"hidden", hid},
            {"action_scale", std::to_string(scale_)}};
}

}  // namespace difo
