#pragma once

#include <memory>
#include <string>
#include <vector>

#include "difo/diffusion.hpp"
#include "difo/env.hpp"

namespace difo {

enum class Variant { Difo, DifoNa, DifoUncond, Gaifo };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

struct DiscriminatorConfig {
    Variant variant = Variant::Difo;
    double lambda_sigma = 10.0;  // logit scale
    double lambda_mse = 1.0;
    double lambda_bce = 0.1;
    bool mse_on_agent = false;  // appends an agent batch to the denoising term
    int n_reward_samples = 1;   // (t, eps) draws averaged per reward
    double learning_rate = 1e-4;
    int batch_size = 64;
    int buffer_capacity = 100000;
    // Denoising schedule and the timestep range used by single-step losses.
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int sample_lo = 250;
    int sample_hi = 750;
    bool mse_full_range = false;  // denoising term samples t over [1, T] instead
    // Denoiser architecture.
    std::vector<int> widths = {256, 256, 256};
    int emb_dim = 128;
    int fourier_bands = 0;
    double max_grad_norm = 0.0;  // 0 disables clipping
    std::vector<int> gaifo_hidden = {128, 128, 128, 128};

    void validate() const;
};

struct DiscriminatorOutput {
    double logit = 0.0;  // lambda_sigma * (loss_a - loss_e), clamped to [-20, 20]
    double d = 0.0;      // sigmoid(logit)
    double loss_e = 0.0;
    double loss_a = 0.0;
};

struct DiscMetrics {
    double L_D = 0.0;
    double L_BCE = 0.0;
    double L_MSE = 0.0;
    double accuracy = 0.0;         // over both batches
    double accuracy_expert = 0.0;  // fraction of expert rows with d > 1/2
    double accuracy_agent = 0.0;   // fraction of agent rows with d < 1/2
    double mean_reward_agent = 0.0;
    double mean_reward_expert = 0.0;
};

struct TransitionBatch {
    Tensor s;       // m x state_dim
    Tensor s_next;  // m x state_dim
};

// FIFO ring of agent transitions sampled as discriminator negatives.
class ReplayBuffer {
  public:
    ReplayBuffer(int capacity, int state_dim);
    void push(const Tensor& s, const Tensor& s_next);  // appends every row
    int size() const { return size_; }
    long long inserted() const { return inserted_; }
    int capacity() const { return capacity_; }
    TransitionBatch sample(int n, RngStream& rng) const;
    // i-th oldest retained transition, i in [0, size).
    Transition row(int i) const;

  private:
    int capacity_;
    int state_dim_;
    int size_ = 0;
    int head_ = 0;  // next write slot
    long long inserted_ = 0;
    std::vector<double> s_;
    std::vector<double> sp_;
};

// One interface for all reward providers; the trainer never branches on the
// concrete variant.
class Discriminator {
  public:
    virtual ~Discriminator() = default;
    virtual const DiscriminatorConfig& config() const = 0;
    // One gradient step on the variant's objective; no-op for a frozen model.
    virtual DiscMetrics step(const TransitionBatch& expert, const TransitionBatch& agent,
                             RngStream& rng) = 0;
    virtual std::vector<double> rewards(const TransitionBatch& batch, RngStream& rng) const = 0;
    virtual void set_n_reward_samples(int n) = 0;
    virtual void save(const std::string& path) const = 0;
    virtual void load(const std::string& path) = 0;
    // Bumped on every parameter change; rollouts record the id they were paid by.
    virtual int snapshot_id() const = 0;
    // A frozen model ignores step(); the trainer skips its update phase.
    virtual bool frozen() const { return false; }
};

// Conditional-denoiser discriminator covering the adversarial variant, the
// unconditional ablation, and the frozen pretrained variant.
class DifoDiscriminator : public Discriminator {
  public:
    DifoDiscriminator(DiscriminatorConfig cfg, int state_dim, RngStream& init_rng);

    const DiscriminatorConfig& config() const override { return cfg_; }
    DiscMetrics step(const TransitionBatch& expert, const TransitionBatch& agent,
                     RngStream& rng) override;
    std::vector<double> rewards(const TransitionBatch& batch, RngStream& rng) const override;
    void set_n_reward_samples(int n) override;
    void save(const std::string& path) const override;
    void load(const std::string& path) override;
    int snapshot_id() const override { return snapshot_; }

    // Shared-(t, eps) score of one transition; both label losses use the same
    // draws, so exchanging labels negates the logit exactly. Pass swap_labels
    // with a copied RngStream to evaluate the exchanged-label score under
    // identical draws: its d equals 1 - d of the plain call bitwise.
    DiscriminatorOutput discriminate(const Tensor& s, const Tensor& s_next, RngStream& rng,
                                     bool swap_labels = false) const;
    // Denoising-only training on expert data with the expert label over the
    // full timestep range; the model is frozen afterwards (step becomes no-op).
    void pretrain(const ExpertDataset& ds, int steps, RngStream& rng);
    bool frozen() const override { return frozen_; }

    MlpUnet& net() { return net_; }
    const MlpUnet& net() const { return net_; }
    const NoiseSchedule& schedule() const { return sched_; }

  private:
    // Per-row losses for both labels under shared draws; used by step/rewards.
    void label_losses(const TransitionBatch& batch, RngStream& rng, int n_samples,
                      std::vector<double>* loss_e, std::vector<double>* loss_a) const;
    Tensor target_rows(const TransitionBatch& batch) const;
    const Tensor* cond_ptr(const TransitionBatch& batch) const;

    DiscriminatorConfig cfg_;
    int state_dim_;
    NoiseSchedule sched_;
    MlpUnet net_;
    Adam opt_;
    int snapshot_ = 0;
    bool frozen_ = false;
};

// Plain MLP discriminator on (s, s_next) with the standard logistic loss.
class GaifoDiscriminator : public Discriminator {
  public:
    GaifoDiscriminator(DiscriminatorConfig cfg, int state_dim, RngStream& init_rng);

    const DiscriminatorConfig& config() const override { return cfg_; }
    DiscMetrics step(const TransitionBatch& expert, const TransitionBatch& agent,
                     RngStream& rng) override;
    std::vector<double> rewards(const TransitionBatch& batch, RngStream& rng) const override;
    void set_n_reward_samples(int) override {}  // rewards are deterministic
    void save(const std::string& path) const override;
    void load(const std::string& path) override;
    int snapshot_id() const override { return snapshot_; }

    std::vector<double> logits(const TransitionBatch& batch) const;
    Mlp& net() { return net_; }

  private:
    DiscriminatorConfig cfg_;
    int state_dim_;
    Mlp net_;
    Adam opt_;
    int snapshot_ = 0;
};

std::unique_ptr<Discriminator> make_discriminator(const DiscriminatorConfig& cfg, int state_dim,
                                                  RngStream& init_rng);

// Sigmoid computed so that sigmoid(-z) == 1 - sigmoid(z) holds bitwise: the
// half in [0.5, 1) is formed first and the complement is one exact subtraction.
double stable_sigmoid(double z);
double stable_softplus(double z);
double clamp_logit(double z);  // [-20, 20]

struct StabilityRow {
    int n_samples = 0;
    double std_mean_ratio = 0.0;
    int n_excluded = 0;
};

// Reward noise study: recompute each transition's reward n_repeats times per
// n in n_samples_list; transitions with zero mean reward are excluded.
std::vector<StabilityRow> reward_stability(Discriminator& disc, const TransitionBatch& batch,
                                           int n_repeats, const std::vector<int>& n_samples_list,
                                           RngStream& rng);

}  // namespace difo
