#include "difo/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace difo {

double NoiseSchedule::beta(int t) const {
    if (t < 1 || t > T) throw std::out_of_range("NoiseSchedule::beta: t=" + std::to_string(t));
    return betas[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t > T) throw std::out_of_range("NoiseSchedule::alpha_bar: t=" + std::to_string(t));
    return t == 0 ? 1.0 : alpha_bars[t - 1];
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end, int sample_lo,
                            int sample_hi) {
    if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
    if (!(0.0 < beta_start && beta_start <= beta_end && beta_end < 1.0))
        throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
    if (sample_lo < 1 || sample_hi > T || sample_lo > sample_hi)
        throw std::invalid_argument("make_schedule: sample range [" + std::to_string(sample_lo) +
                                    ", " + std::to_string(sample_hi) + "] not within [1, " +
                                    std::to_string(T) + "]");
    NoiseSchedule s;
    s.T = T;
    s.sample_lo = sample_lo;
    s.sample_hi = sample_hi;
    s.betas.resize(T);
    s.alpha_bars.resize(T);
    double prod = 1.0;
    for (int i = 0; i < T; ++i) {
        s.betas[i] = T == 1 ? beta_start
                            : beta_start + (beta_end - beta_start) * i / static_cast<double>(T - 1);
        prod *= 1.0 - s.betas[i];
        s.alpha_bars[i] = prod;
    }
    return s;
}

NoisedSample forward_noise(const NoiseSchedule& sched, const Tensor& x0, int t, RngStream& rng) {
    if (t < 1 || t > sched.T)
        throw std::out_of_range("forward_noise: t=" + std::to_string(t) + " outside [1, " +
                                std::to_string(sched.T) + "]");
    NoisedSample out;
    out.t = t;
    out.eps = Tensor(x0.rows(), x0.cols());
    for (std::size_t i = 0; i < out.eps.size(); ++i) out.eps[i] = rng.normal();
    std::vector<int> ts(x0.rows(), t);
    out.x_t = forward_noise_rows(sched, x0, ts, out.eps);
    return out;
}

Tensor forward_noise_rows(const NoiseSchedule& sched, const Tensor& x0,
                          const std::vector<int>& ts, const Tensor& eps) {
    if (!x0.same_shape(eps))
        throw std::invalid_argument("forward_noise_rows: x0 " + x0.shape_str() + " vs eps " +
                                    eps.shape_str());
    if (static_cast<int>(ts.size()) != x0.rows())
        throw std::invalid_argument("forward_noise_rows: timestep count mismatch");
    Tensor xt(x0.rows(), x0.cols());
    for (int r = 0; r < x0.rows(); ++r) {
        double ab = sched.alpha_bar(ts[r]);
        double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
        for (int c = 0; c < x0.cols(); ++c) xt.at(r, c) = a * x0.at(r, c) + b * eps.at(r, c);
    }
    return xt;
}

Graph::NodeId denoising_loss_rows(Graph& g, const MlpUnet& net,
                                  const std::vector<Graph::NodeId>& pids,
                                  const NoiseSchedule& sched, const Tensor& x0,
                                  const std::vector<int>& ts, const Tensor& eps,
                                  const Tensor* cond_states, Label label) {
    Graph::NodeId xt = g.leaf(forward_noise_rows(sched, x0, ts, eps));
    Graph::NodeId pred = net.forward(g, pids, xt, ts, cond_states, label);
    Graph::NodeId diff = g.add(g.leaf(eps), g.mul(pred, g.leaf(Tensor(eps.rows(), eps.cols(), -1.0))));
    Graph::NodeId sq = g.square(diff);
    return g.matmul(sq, g.leaf(Tensor(eps.cols(), 1, 1.0)));  // row sums
}

double denoising_loss(const MlpUnet& net, const NoiseSchedule& sched, const Tensor& x0, int t,
                      const Tensor& eps, const Tensor* cond_state, Label label) {
    if (x0.rows() != 1)
        throw std::invalid_argument("denoising_loss: expects a single row target, got " +
                                    x0.shape_str());
    Graph g;
    std::vector<Graph::NodeId> pids = net.params().enter(g, false);
    Graph::NodeId rows =
        denoising_loss_rows(g, net, pids, sched, x0, {t}, eps, cond_state, label);
    return g.value(rows).at(0, 0);
}

Tensor sample_next_states(const MlpUnet& net, const NoiseSchedule& sched,
                          const Tensor& cond_states, Label label, RngStream& rng,
                          double x0_lo, double x0_hi) {
    int m = cond_states.rows();
    int d = net.config().x_dim;
    bool clip = x0_lo < x0_hi;
    Tensor x(m, d);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
    const Tensor* cond = net.conditional() ? &cond_states : nullptr;
    for (int t = sched.T; t >= 1; --t) {
        Graph g;
        std::vector<Graph::NodeId> pids = net.params().enter(g, false);
        std::vector<int> ts(m, t);
        Graph::NodeId pred = net.forward(g, pids, g.leaf(x), ts, cond, label);
        const Tensor& eps_hat = g.value(pred);
        double ab = sched.alpha_bar(t);
        double ab_prev = sched.alpha_bar(t - 1);
        double beta = sched.beta(t);
        double c0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
        double c1 = std::sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab);
        double sigma = t > 1 ? std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab)) : 0.0;
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < d; ++c) {
                double x0 = (x.at(r, c) - std::sqrt(1.0 - ab) * eps_hat.at(r, c)) / std::sqrt(ab);
                if (clip) x0 = std::min(std::max(x0, x0_lo), x0_hi);
                double v = c0 * x0 + c1 * x.at(r, c);
                if (t > 1) v += sigma * rng.normal();
                if (!std::isfinite(v))
                    throw std::runtime_error("sample_next_states: non-finite value at t=" +
                                             std::to_string(t));
                x.at(r, c) = v;
            }
        }
    }
    return x;
}

}  // namespace difo
