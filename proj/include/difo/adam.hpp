#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "difo/graph.hpp"
#include "difo/tensor.hpp"

namespace difo {

// Named, ordered parameter collection for one network. Order is fixed at
// construction and defines both the optimizer-slot layout and the checkpoint
// byte layout.
class ParamSet {
public:
    int add(const std::string& name, Tensor init) {
        names_.push_back(name);
        values_.push_back(std::move(init));
        return static_cast<int>(values_.size()) - 1;
    }

    int count() const { return static_cast<int>(values_.size()); }
    const std::string& name(int i) const { return names_.at(i); }
    Tensor& value(int i) { return values_.at(i); }
    const Tensor& value(int i) const { return values_.at(i); }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const Tensor& t : values_) n += t.size();
        return n;
    }

    // Enter every parameter into a graph as a differentiable leaf. Call once per
    // graph so repeated uses of a parameter accumulate into one gradient slot.
    std::vector<Graph::NodeId> enter(Graph& g, bool requires_grad = true) const {
        std::vector<Graph::NodeId> ids;
        ids.reserve(values_.size());
        for (const Tensor& t : values_) ids.push_back(g.leaf(t, requires_grad));
        return ids;
    }

    // Pull gradients for leaves created by enter(). Parameters off the backward
    // path (e.g. the unused label row in an expert-only loss) get zero grads.
    std::vector<Tensor> gather_grads(const Graph& g, const std::vector<Graph::NodeId>& ids) const {
        if (ids.size() != values_.size())
            throw std::invalid_argument("ParamSet::gather_grads: id count mismatch");
        std::vector<Tensor> grads;
        grads.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (g.has_grad(ids[i]))
                grads.push_back(g.grad(ids[i]));
            else
                grads.push_back(Tensor(values_[i].shape(), 0.0));
        }
        return grads;
    }

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

// Clip gradients in place to a maximum global L2 norm. No-op if max_norm <= 0.
inline void clip_grad_norm(std::vector<Tensor>& grads, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (const Tensor& g : grads)
        for (std::size_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
    double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    double scale = max_norm / norm;
    for (Tensor& g : grads)
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale;
}

// Adam with bias correction, matching the standard formulation.
class Adam {
public:
    Adam(const ParamSet& params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (int i = 0; i < params.count(); ++i) {
            m_.emplace_back(params.value(i).shape(), 0.0);
            v_.emplace_back(params.value(i).shape(), 0.0);
        }
    }

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }
    long step_count() const { return t_; }

    void step(ParamSet& params, const std::vector<Tensor>& grads) {
        if (static_cast<int>(grads.size()) != params.count())
            throw std::invalid_argument("Adam::step: gradient count mismatch");
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (int k = 0; k < params.count(); ++k) {
            Tensor& p = params.value(k);
            const Tensor& g = grads[k];
            if (!p.same_shape(g))
                throw std::invalid_argument("Adam::step: grad shape " + g.shape_str() +
                                            " does not match param " + p.shape_str());
            Tensor& m = m_[k];
            Tensor& v = v_[k];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                p[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
            }
        }
    }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace difo
