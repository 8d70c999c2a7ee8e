#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "difo/adam.hpp"
#include "difo/graph.hpp"
#include "difo/rng.hpp"
#include "difo/tensor.hpp"

namespace difo {

enum class Label { Expert, Agent };

enum class Activation { Relu, Tanh, Silu };

// Fixed sinusoidal timestep embedding with geometrically spaced frequencies.
// No trainable parameters; rows are computed outside the graph and fed as data.
class TimeEmbedding {
public:
    TimeEmbedding(int dim, double max_period);

    int dim() const { return dim_; }
    Tensor rows(const std::vector<int>& ts) const;

private:
    int dim_;
    std::vector<double> freqs_;
};

// Per-dimension Fourier features of a bounded state: each coordinate x expands
// to [x, sin(2pi 2^k x), cos(2pi 2^k x)] for k < bands. bands = 0 passes the
// state through unchanged. High-frequency structure in the conditioning state
// (the sine manifold) becomes linearly separable this way; without it the
// denoiser spends most of its training budget just resolving the manifold.
class StateFeatures {
public:
    StateFeatures(int state_dim, int bands) : state_dim_(state_dim), bands_(bands) {}

    int state_dim() const { return state_dim_; }
    int dim() const { return state_dim_ * (1 + 2 * bands_); }
    Tensor rows(const Tensor& states) const;  // B x state_dim -> B x dim()

private:
    int state_dim_;
    int bands_;
};

struct MlpUnetConfig {
    int x_dim = 1;                           // dimension of the denoised variable
    int cond_state_dim = 1;                  // 0: unconditional (no state input)
    std::vector<int> widths = {256, 256, 256};
    int emb_dim = 128;                       // shared by time and label embeddings
    int fourier_bands = 0;
    double time_max_period = 1000.0;
};

// Conditional MLP U-Net noise predictor. Encoder/decoder stacks of equal depth;
// each decoder layer consumes the mirror encoder activation by concatenation,
// and every hidden layer (both stacks) receives the conditioning vector
// time_emb (+) label_emb (+) state_features appended to its input.
//
// Parameter count is closed-form in (x_dim, widths, emb_dim, fourier bands):
// with cd = 2*emb + sfd, layer (in -> out) costing (in+1)*out, it is
//   enc: (x+cd+1)w0 + (w0+cd+1)w1 + ... + (w_{L-2}+cd+1)w_{L-1}
//   dec: (w_{L-1}+cd+1)w_{L-1} + sum_{i<L-1} (w_{i+1}+w_i+cd+1)w_i
//   out: (w0+1)x, labels: 2*emb.
class MlpUnet {
public:
    MlpUnet(MlpUnetConfig cfg, RngStream& rng);

    const MlpUnetConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    bool conditional() const { return cfg_.cond_state_dim > 0; }

    static std::size_t param_count(const MlpUnetConfig& cfg);

    // Predict the injected noise for a batch. `x` is the noised target (B x
    // x_dim leaf already in the graph), `ts` the per-row timesteps, and
    // `cond_states` the per-row conditioning states (required unless the net is
    // unconditional). Uses the parameter leaves in `pids` (from params().enter).
    Graph::NodeId forward(Graph& g, const std::vector<Graph::NodeId>& pids, Graph::NodeId x,
                          const std::vector<int>& ts, const Tensor* cond_states, Label label) const;

    // Header entries identifying this architecture; checkpoints embed and verify them.
    std::vector<std::pair<std::string, std::string>> arch_header() const;

private:
    MlpUnetConfig cfg_;
    TimeEmbedding time_emb_;
    StateFeatures state_feat_;
    ParamSet params_;
    // parameter indices
    int label_e_, label_a_;
    std::vector<int> enc_w_, enc_b_, dec_w_, dec_b_;
    int out_w_, out_b_;
};

struct MlpConfig {
    std::vector<int> widths;  // input, hidden..., output
    Activation activation = Activation::Relu;
    bool tanh_head = false;
};

// Plain fully connected network for the policy mean, value function, and the
// 2-layer-style baseline discriminator.
class Mlp {
public:
    Mlp(MlpConfig cfg, RngStream& rng);

    const MlpConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    Graph::NodeId forward(Graph& g, const std::vector<Graph::NodeId>& pids, Graph::NodeId x) const;

    std::vector<std::pair<std::string, std::string>> arch_header(const std::string& prefix) const;

private:
    MlpConfig cfg_;
    ParamSet params_;
    std::vector<int> w_, b_;
};

// Uniform fan-in initialisation, the default for every linear layer here.
Tensor linear_init(int fan_in, int fan_out, RngStream& rng);

// Checkpoint format: a text header ("difo-checkpoint v1", then "key = value"
// architecture lines, then a tensor directory), the literal line "binary", and
// the raw parameter doubles (little-endian) in directory order. Loading
// verifies the header against the caller's expectation and the directory
// against the ParamSet; any disagreement or short read is an error.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& header,
                     const ParamSet& params);
void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& expected_header,
                     ParamSet& params);

}  // namespace difo
