#include "difo/nets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace difo {

Tensor linear_init(int fan_in, int fan_out, RngStream& rng) {
    if (fan_in < 1 || fan_out < 1)
        throw std::invalid_argument("linear_init: non-positive layer dimension");
    Tensor w(fan_in, fan_out);
    double lim = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-lim, lim);
    return w;
}

TimeEmbedding::TimeEmbedding(int dim, double max_period) : dim_(dim) {
    if (dim < 2 || dim % 2 != 0)
        throw std::invalid_argument("TimeEmbedding: dim must be even and >= 2, got " +
                                    std::to_string(dim));
    if (max_period <= 1.0) throw std::invalid_argument("TimeEmbedding: max_period must exceed 1");
    int half = dim / 2;
    freqs_.resize(half);
    for (int k = 0; k < half; ++k) {
        double expo = half > 1 ? static_cast<double>(k) / (half - 1) : 0.0;
        freqs_[k] = std::exp(-std::log(max_period) * expo);
    }
}

Tensor TimeEmbedding::rows(const std::vector<int>& ts) const {
    int half = dim_ / 2;
    Tensor out(static_cast<int>(ts.size()), dim_);
    for (std::size_t r = 0; r < ts.size(); ++r) {
        for (int k = 0; k < half; ++k) {
            double ang = static_cast<double>(ts[r]) * freqs_[k];
            out.at(static_cast<int>(r), k) = std::sin(ang);
            out.at(static_cast<int>(r), half + k) = std::cos(ang);
        }
    }
    return out;
}

Tensor StateFeatures::rows(const Tensor& states) const {
    if (states.cols() != state_dim_)
        throw std::invalid_argument("StateFeatures: expected state dim " +
                                    std::to_string(state_dim_) + ", got " + states.shape_str());
    Tensor out(states.rows(), dim());
    const double two_pi = 6.283185307179586476925286766559;
    for (int r = 0; r < states.rows(); ++r) {
        int c = 0;
        for (int j = 0; j < state_dim_; ++j) {
            double x = states.at(r, j);
            out.at(r, c++) = x;
            for (int k = 0; k < bands_; ++k) out.at(r, c++) = std::sin(two_pi * std::ldexp(x, k));
            for (int k = 0; k < bands_; ++k) out.at(r, c++) = std::cos(two_pi * std::ldexp(x, k));
        }
    }
    return out;
}

MlpUnet::MlpUnet(MlpUnetConfig cfg, RngStream& rng)
    : cfg_(std::move(cfg)),
      time_emb_(cfg_.emb_dim, cfg_.time_max_period),
      state_feat_(cfg_.cond_state_dim > 0 ? cfg_.cond_state_dim : 1, cfg_.fourier_bands) {
    if (cfg_.x_dim < 1) throw std::invalid_argument("MlpUnet: x_dim must be positive");
    if (cfg_.widths.empty()) throw std::invalid_argument("MlpUnet: needs at least one layer width");

    // Label rows get a small random init while the output head starts at zero.
    // The zero head makes the untrained net label-independent (d = 0.5 exactly),
    // but the rows must differ: with identical rows the two label branches are
    // bitwise equal and every gradient of the label-separation loss vanishes,
    // a saddle that pure-BCE training can never leave.
    Tensor le(1, cfg_.emb_dim), la(1, cfg_.emb_dim);
    for (std::size_t i = 0; i < le.size(); ++i) le[i] = rng.normal(0.0, 0.01);
    for (std::size_t i = 0; i < la.size(); ++i) la[i] = rng.normal(0.0, 0.01);
    label_e_ = params_.add("label_e", le);
    label_a_ = params_.add("label_a", la);

    int sfd = cfg_.cond_state_dim > 0 ? state_feat_.dim() : 0;
    int cd = 2 * cfg_.emb_dim + sfd;
    int L = static_cast<int>(cfg_.widths.size());

    int prev = cfg_.x_dim;
    for (int i = 0; i < L; ++i) {
        int w = cfg_.widths[i];
        enc_w_.push_back(params_.add("enc" + std::to_string(i) + ".w", linear_init(prev + cd, w, rng)));
        enc_b_.push_back(params_.add("enc" + std::to_string(i) + ".b", Tensor(1, w)));
        prev = w;
    }
    dec_w_.resize(L);
    dec_b_.resize(L);
    for (int i = L - 1; i >= 0; --i) {
        int w = cfg_.widths[i];
        // Bottleneck layer sees only the top encoder output; lower decoder
        // layers also take the mirror encoder activation as a skip input.
        int in = (i == L - 1) ? cfg_.widths[L - 1] + cd : cfg_.widths[i + 1] + cfg_.widths[i] + cd;
        dec_w_[i] = params_.add("dec" + std::to_string(i) + ".w", linear_init(in, w, rng));
        dec_b_[i] = params_.add("dec" + std::to_string(i) + ".b", Tensor(1, w));
    }
    // Zero-initialised head: the untrained net predicts zero noise.
    out_w_ = params_.add("out.w", Tensor(cfg_.widths[0], cfg_.x_dim));
    out_b_ = params_.add("out.b", Tensor(1, cfg_.x_dim));
}

std::size_t MlpUnet::param_count(const MlpUnetConfig& cfg) {
    int sfd = cfg.cond_state_dim > 0 ? cfg.cond_state_dim * (1 + 2 * cfg.fourier_bands) : 0;
    std::size_t cd = 2 * cfg.emb_dim + sfd;
    std::size_t n = 2 * static_cast<std::size_t>(cfg.emb_dim);  // label rows
    int L = static_cast<int>(cfg.widths.size());
    std::size_t prev = cfg.x_dim;
    for (int i = 0; i < L; ++i) {
        n += (prev + cd + 1) * cfg.widths[i];
        prev = cfg.widths[i];
    }
    for (int i = L - 1; i >= 0; --i) {
        std::size_t in = (i == L - 1) ? cfg.widths[L - 1] + cd
                                      : static_cast<std::size_t>(cfg.widths[i + 1]) + cfg.widths[i] + cd;
        n += (in + 1) * cfg.widths[i];
    }
    n += (static_cast<std::size_t>(cfg.widths[0]) + 1) * cfg.x_dim;
    return n;
}

Graph::NodeId MlpUnet::forward(Graph& g, const std::vector<Graph::NodeId>& pids, Graph::NodeId x,
                               const std::vector<int>& ts, const Tensor* cond_states,
                               Label label) const {
    const Tensor& xv = g.value(x);
    int B = xv.rows();
    if (xv.cols() != cfg_.x_dim)
        throw std::invalid_argument("MlpUnet: input has dim " + std::to_string(xv.cols()) +
                                    ", configured x_dim is " + std::to_string(cfg_.x_dim));
    if (static_cast<int>(ts.size()) != B)
        throw std::invalid_argument("MlpUnet: timestep count does not match batch size");
    if (conditional() && cond_states == nullptr)
        throw std::invalid_argument("MlpUnet: conditional net called without conditioning states");

    std::vector<Graph::NodeId> cond_parts;
    cond_parts.push_back(g.leaf(time_emb_.rows(ts)));
    int lab = label == Label::Expert ? label_e_ : label_a_;
    cond_parts.push_back(g.broadcast(pids[lab], B));
    if (conditional()) {
        if (cond_states->rows() != B)
            throw std::invalid_argument("MlpUnet: conditioning state batch size mismatch");
        cond_parts.push_back(g.leaf(state_feat_.rows(*cond_states)));
    }
    Graph::NodeId cond = g.concat(cond_parts);

    auto layer = [&](Graph::NodeId in, int wi, int bi) {
        Graph::NodeId z = g.add(g.matmul(in, pids[wi]), g.broadcast(pids[bi], B));
        return g.silu(z);
    };

    int L = static_cast<int>(cfg_.widths.size());
    std::vector<Graph::NodeId> enc(L);
    Graph::NodeId h = x;
    for (int i = 0; i < L; ++i) {
        enc[i] = layer(g.concat({h, cond}), enc_w_[i], enc_b_[i]);
        h = enc[i];
    }
    Graph::NodeId d = layer(g.concat({enc[L - 1], cond}), dec_w_[L - 1], dec_b_[L - 1]);
    for (int i = L - 2; i >= 0; --i) d = layer(g.concat({d, enc[i], cond}), dec_w_[i], dec_b_[i]);
    return g.add(g.matmul(d, pids[out_w_]), g.broadcast(pids[out_b_], B));
}

std::vector<std::pair<std::string, std::string>> MlpUnet::arch_header() const {
    std::string widths;
    for (std::size_t i = 0; i < cfg_.widths.size(); ++i) {
        if (i) widths += ",";
        widths += std::to_string(cfg_.widths[i]);
    }
    char mp[32];
    std::snprintf(mp, sizeof mp, "%.17g", cfg_.time_max_period);
    return {{"arch", "mlp_unet"},
            {"x_dim", std::to_string(cfg_.x_dim)},
            {"cond_state_dim", std::to_string(cfg_.cond_state_dim)},
            {"widths", widths},
            {"emb_dim", std::to_string(cfg_.emb_dim)},
            {"fourier_bands", std::to_string(cfg_.fourier_bands)},
            {"time_max_period", mp}};
}

Mlp::Mlp(MlpConfig cfg, RngStream& rng) : cfg_(std::move(cfg)) {
    if (cfg_.widths.size() < 2)
        throw std::invalid_argument("Mlp: widths must list input and output dims");
    for (std::size_t i = 0; i + 1 < cfg_.widths.size(); ++i) {
        w_.push_back(params_.add("l" + std::to_string(i) + ".w",
                                 linear_init(cfg_.widths[i], cfg_.widths[i + 1], rng)));
        b_.push_back(params_.add("l" + std::to_string(i) + ".b", Tensor(1, cfg_.widths[i + 1])));
    }
}

Graph::NodeId Mlp::forward(Graph& g, const std::vector<Graph::NodeId>& pids, Graph::NodeId x) const {
    const Tensor& xv = g.value(x);
    if (xv.cols() != cfg_.widths.front())
        throw std::invalid_argument("Mlp: input dim " + std::to_string(xv.cols()) +
                                    " does not match configured " + std::to_string(cfg_.widths.front()));
    int B = xv.rows();
    Graph::NodeId h = x;
    int n_layers = static_cast<int>(w_.size());
    for (int i = 0; i < n_layers; ++i) {
        h = g.add(g.matmul(h, pids[w_[i]]), g.broadcast(pids[b_[i]], B));
        bool last = i == n_layers - 1;
        if (!last) {
            switch (cfg_.activation) {
                case Activation::Relu: h = g.relu(h); break;
                case Activation::Tanh: h = g.tanh(h); break;
                case Activation::Silu: h = g.silu(h); break;
            }
        } else if (cfg_.tanh_head) {
            h = g.tanh(h);
        }
    }
    return h;
}

std::vector<std::pair<std::string, std::string>> Mlp::arch_header(const std::string& prefix) const {
    std::string widths;
    for (std::size_t i = 0; i < cfg_.widths.size(); ++i) {
        if (i) widths += ",";
        widths += std::to_string(cfg_.widths[i]);
    }
    const char* act = cfg_.activation == Activation::Relu   ? "relu"
                      : cfg_.activation == Activation::Tanh ? "tanh"
                                                            : "silu";
    return {{prefix + ".widths", widths},
            {prefix + ".activation", act},
            {prefix + ".tanh_head", cfg_.tanh_head ? "1" : "0"}};
}

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& header,
                     const ParamSet& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    f << "difo-checkpoint v1\n";
    for (const auto& [k, v] : header) f << k << " = " << v << "\n";
    f << "tensors " << params.count() << "\n";
    for (int i = 0; i < params.count(); ++i) {
        const Tensor& t = params.value(i);
        f << params.name(i) << " " << t.rows() << " " << t.cols() << "\n";
    }
    f << "binary\n";
    for (int i = 0; i < params.count(); ++i) {
        const Tensor& t = params.value(i);
        f.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& expected_header,
                     ParamSet& params) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
    std::string line;
    if (!std::getline(f, line) || line != "difo-checkpoint v1")
        throw std::runtime_error("checkpoint: bad magic in " + path);
    for (const auto& [k, v] : expected_header) {
        if (!std::getline(f, line))
            throw std::runtime_error("checkpoint: truncated header in " + path);
        std::string want = k + " = " + v;
        if (line != want)
            throw std::runtime_error("checkpoint: header mismatch in " + path + ": expected \"" +
                                     want + "\", found \"" + line + "\"");
    }
    if (!std::getline(f, line) || line.rfind("tensors ", 0) != 0)
        throw std::runtime_error("checkpoint: missing tensor directory in " + path);
    int n = std::stoi(line.substr(8));
    if (n != params.count())
        throw std::runtime_error("checkpoint: has " + std::to_string(n) + " tensors, expected " +
                                 std::to_string(params.count()));
    for (int i = 0; i < n; ++i) {
        if (!std::getline(f, line))
            throw std::runtime_error("checkpoint: truncated tensor directory in " + path);
        std::istringstream ss(line);
        std::string name;
        int rows = 0, cols = 0;
        ss >> name >> rows >> cols;
        const Tensor& t = params.value(i);
        if (name != params.name(i) || rows != t.rows() || cols != t.cols())
            throw std::runtime_error("checkpoint: tensor " + std::to_string(i) + " is \"" + line +
                                     "\", expected \"" + params.name(i) + " " +
                                     std::to_string(t.rows()) + " " + std::to_string(t.cols()) +
                                     "\"");
    }
    if (!std::getline(f, line) || line != "binary")
        throw std::runtime_error("checkpoint: missing binary marker in " + path);
    for (int i = 0; i < n; ++i) {
        Tensor& t = params.value(i);
        f.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (f.gcount() != static_cast<std::streamsize>(t.size() * sizeof(double)))
            throw std::runtime_error("checkpoint: truncated parameter data in " + path);
    }
    char extra;
    if (f.read(&extra, 1) && f.gcount() == 1)
        throw std::runtime_error("checkpoint: trailing bytes after parameter data in " + path);
}

}  // namespace difo
