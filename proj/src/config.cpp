#include "difo/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace difo {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

}  // namespace

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

ConfigMap ConfigMap::parse_text(const std::string& text, const std::string& origin) {
    ConfigMap m;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": malformed section header \"" + line + "\"");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": empty section name");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": expected key = value, got \"" + line + "\"");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": key \"" + key +
                                     "\" appears before any [section]");
        m.kv_[section + "." + key] = value;
    }
    return m;
}

void ConfigMap::apply_override(const std::string& spec) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override \"" + spec + "\" is not of the form section.key=value");
    std::string key = trim(spec.substr(0, eq));
    if (key.find('.') == std::string::npos)
        throw std::invalid_argument("override key \"" + key + "\" must be section.key");
    kv_[key] = trim(spec.substr(eq + 1));
}

std::string ConfigMap::get_str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw std::runtime_error("config: missing required key \"" + key + "\"");
    return it->second;
}

std::string ConfigMap::get_str(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double ConfigMap::parse_double(const std::string& key) const {
    const std::string& v = kv_.at(key);
    std::size_t pos = 0;
    double d;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("config: key \"" + key + "\" has non-numeric value \"" + v + "\"");
    }
    if (pos != v.size())
        throw std::runtime_error("config: key \"" + key + "\" has trailing junk in \"" + v + "\"");
    return d;
}

long long ConfigMap::parse_ll(const std::string& key) const {
    const std::string& v = kv_.at(key);
    std::size_t pos = 0;
    long long n;
    try {
        n = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("config: key \"" + key + "\" has non-integer value \"" + v + "\"");
    }
    if (pos != v.size())
        throw std::runtime_error("config: key \"" + key + "\" has trailing junk in \"" + v + "\"");
    return n;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    return has(key) ? parse_double(key) : fallback;
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
    return has(key) ? static_cast<int>(parse_ll(key)) : fallback;
}

long long ConfigMap::get_ll(const std::string& key, long long fallback) const {
    return has(key) ? parse_ll(key) : fallback;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = kv_.at(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::runtime_error("config: key \"" + key + "\" must be true/false, got \"" + v + "\"");
}

std::vector<int> ConfigMap::get_int_list(const std::string& key, std::vector<int> fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = kv_.at(key);
    std::vector<int> out;
    std::istringstream in(v);
    std::string part;
    while (std::getline(in, part, ',')) {
        part = trim(part);
        try {
            std::size_t pos = 0;
            out.push_back(std::stoi(part, &pos));
            if (pos != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw std::runtime_error("config: key \"" + key + "\" has non-integer entry \"" + part +
                                     "\"");
        }
    }
    if (out.empty())
        throw std::runtime_error("config: key \"" + key + "\" is an empty list");
    return out;
}

std::string ConfigMap::to_text() const {
    std::string out, section;
    for (const auto& [key, value] : kv_) {
        std::size_t dot = key.find('.');
        std::string sec = key.substr(0, dot);
        if (sec != section) {
            if (!out.empty()) out += "\n";
            out += "[" + sec + "]\n";
            section = sec;
        }
        out += key.substr(dot + 1) + " = " + value + "\n";
    }
    return out;
}

TrainConfig TrainConfig::from_map(const ConfigMap& m) {
    TrainConfig c;
    c.env_name = m.get_str("train.env");
    c.variant = parse_variant(m.get_str("train.variant"));
    c.total_env_steps = m.get_ll("train.total_env_steps", c.total_env_steps);
    c.rollout_steps = m.get_int("train.rollout_steps", c.rollout_steps);
    c.disc_updates_per_round = m.get_int("train.disc_updates_per_round", c.disc_updates_per_round);
    c.disc_warmup_rounds = m.get_int("train.disc_warmup_rounds", c.disc_warmup_rounds);
    c.eval_every = m.get_ll("train.eval_every", c.eval_every);
    c.eval_episodes = m.get_int("train.eval_episodes", c.eval_episodes);
    c.seed = static_cast<unsigned long long>(m.get_ll("train.seed", 0));
    c.na_pretrain_steps = m.get_int("train.na_pretrain_steps", c.na_pretrain_steps);
    c.env_action_noise = m.get_double("train.env_action_noise", c.env_action_noise);
    c.expert_dataset = m.get_str("train.expert_dataset");
    c.out_dir = m.get_str("train.out", "");
    c.value_hidden = m.get_int_list("train.value_hidden", c.value_hidden);
    c.policy.hidden = m.get_int_list("train.policy_hidden", c.policy.hidden);
    c.policy.logstd_init = m.get_double("train.logstd_init", c.policy.logstd_init);

    c.disc.variant = c.variant;
    c.disc.lambda_sigma = m.get_double("discriminator.lambda_sigma", c.disc.lambda_sigma);
    c.disc.lambda_mse = m.get_double("discriminator.lambda_mse", c.disc.lambda_mse);
    c.disc.lambda_bce = m.get_double("discriminator.lambda_bce", c.disc.lambda_bce);
    c.disc.mse_on_agent = m.get_bool("discriminator.mse_on_agent", c.disc.mse_on_agent);
    c.disc.n_reward_samples = m.get_int("discriminator.n_reward_samples", c.disc.n_reward_samples);
    c.disc.learning_rate = m.get_double("discriminator.learning_rate", c.disc.learning_rate);
    c.disc.batch_size = m.get_int("discriminator.batch_size", c.disc.batch_size);
    c.disc.buffer_capacity = m.get_int("discriminator.buffer_capacity", c.disc.buffer_capacity);
    c.disc.T = m.get_int("discriminator.T", c.disc.T);
    c.disc.beta_start = m.get_double("discriminator.beta_start", c.disc.beta_start);
    c.disc.beta_end = m.get_double("discriminator.beta_end", c.disc.beta_end);
    c.disc.sample_lo = m.get_int("discriminator.sample_lo", c.disc.sample_lo);
    c.disc.sample_hi = m.get_int("discriminator.sample_hi", c.disc.sample_hi);
    c.disc.mse_full_range = m.get_bool("discriminator.mse_full_range", c.disc.mse_full_range);
    c.disc.widths = m.get_int_list("discriminator.widths", c.disc.widths);
    c.disc.emb_dim = m.get_int("discriminator.emb_dim", c.disc.emb_dim);
    c.disc.fourier_bands = m.get_int("discriminator.fourier_bands", c.disc.fourier_bands);
    c.disc.max_grad_norm = m.get_double("discriminator.max_grad_norm", c.disc.max_grad_norm);
    c.disc.gaifo_hidden = m.get_int_list("discriminator.gaifo_hidden", c.disc.gaifo_hidden);

    c.ppo.learning_rate = m.get_double("ppo.learning_rate", c.ppo.learning_rate);
    c.ppo.batch_size = m.get_int("ppo.batch_size", c.ppo.batch_size);
    c.ppo.gamma = m.get_double("ppo.gamma", c.ppo.gamma);
    c.ppo.clip = m.get_double("ppo.clip", c.ppo.clip);
    c.ppo.gae_lambda = m.get_double("ppo.gae_lambda", c.ppo.gae_lambda);
    c.ppo.vf_coef = m.get_double("ppo.vf_coef", c.ppo.vf_coef);
    c.ppo.ent_coef = m.get_double("ppo.ent_coef", c.ppo.ent_coef);
    c.ppo.max_grad_norm = m.get_double("ppo.max_grad_norm", c.ppo.max_grad_norm);
    c.ppo.epochs = m.get_int("ppo.epochs", c.ppo.epochs);
    return c;
}

void TrainConfig::validate() const {
    if (env_name.empty()) throw std::invalid_argument("train: env name is empty");
    if (expert_dataset.empty()) throw std::invalid_argument("train: expert_dataset is empty");
    if (rollout_steps < 1) throw std::invalid_argument("train: rollout_steps must be >= 1");
    if (total_env_steps < 0) throw std::invalid_argument("train: total_env_steps must be >= 0");
    if (total_env_steps > 0 && total_env_steps < rollout_steps)
        throw std::invalid_argument("train: total_env_steps " + std::to_string(total_env_steps) +
                                    " is less than one rollout of " +
                                    std::to_string(rollout_steps));
    if (disc_updates_per_round < 1)
        throw std::invalid_argument("train: disc_updates_per_round must be >= 1");
    if (disc_warmup_rounds < 0)
        throw std::invalid_argument("train: disc_warmup_rounds must be >= 0");
    if (eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
    if (eval_episodes < 1) throw std::invalid_argument("train: eval_episodes must be >= 1");
    if (na_pretrain_steps < 0)
        throw std::invalid_argument("train: na_pretrain_steps must be >= 0");
    disc.validate();
    ppo.validate();
}

ConfigMap TrainConfig::to_map() const {
    ConfigMap m;
    auto fmt = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    m.set("train.env", env_name);
    m.set("train.variant", variant_name(variant));
    m.set("train.total_env_steps", std::to_string(total_env_steps));
    m.set("train.rollout_steps", std::to_string(rollout_steps));
    m.set("train.disc_updates_per_round", std::to_string(disc_updates_per_round));
    m.set("train.disc_warmup_rounds", std::to_string(disc_warmup_rounds));
    m.set("train.eval_every", std::to_string(eval_every));
    m.set("train.eval_episodes", std::to_string(eval_episodes));
    m.set("train.seed", std::to_string(seed));
    m.set("train.na_pretrain_steps", std::to_string(na_pretrain_steps));
    m.set("train.env_action_noise", fmt(env_action_noise));
    m.set("train.expert_dataset", expert_dataset);
    m.set("train.out", out_dir);
    m.set("train.value_hidden", join_ints(value_hidden));
    m.set("train.policy_hidden", join_ints(policy.hidden));
    m.set("train.logstd_init", fmt(policy.logstd_init));

    m.set("discriminator.lambda_sigma", fmt(disc.lambda_sigma));
    m.set("discriminator.lambda_mse", fmt(disc.lambda_mse));
    m.set("discriminator.lambda_bce", fmt(disc.lambda_bce));
    m.set("discriminator.mse_on_agent", disc.mse_on_agent ? "true" : "false");
    m.set("discriminator.n_reward_samples", std::to_string(disc.n_reward_samples));
    m.set("discriminator.learning_rate", fmt(disc.learning_rate));
    m.set("discriminator.batch_size", std::to_string(disc.batch_size));
    m.set("discriminator.buffer_capacity", std::to_string(disc.buffer_capacity));
    m.set("discriminator.T", std::to_string(disc.T));
    m.set("discriminator.beta_start", fmt(disc.beta_start));
    m.set("discriminator.beta_end", fmt(disc.beta_end));
    m.set("discriminator.sample_lo", std::to_string(disc.sample_lo));
    m.set("discriminator.sample_hi", std::to_string(disc.sample_hi));
    m.set("discriminator.mse_full_range", disc.mse_full_range ? "true" : "false");
    m.set("discriminator.widths", join_ints(disc.widths));
    m.set("discriminator.emb_dim", std::to_string(disc.emb_dim));
    m.set("discriminator.fourier_bands", std::to_string(disc.fourier_bands));
    m.set("discriminator.max_grad_norm", fmt(disc.max_grad_norm));
    m.set("discriminator.gaifo_hidden", join_ints(disc.gaifo_hidden));

    m.set("ppo.learning_rate", fmt(ppo.learning_rate));
    m.set("ppo.batch_size", std::to_string(ppo.batch_size));
    m.set("ppo.gamma", fmt(ppo.gamma));
    m.set("ppo.clip", fmt(ppo.clip));
    m.set("ppo.gae_lambda", fmt(ppo.gae_lambda));
    m.set("ppo.vf_coef", fmt(ppo.vf_coef));
    m.set("ppo.ent_coef", fmt(ppo.ent_coef));
    m.set("ppo.max_grad_norm", fmt(ppo.max_grad_norm));
    m.set("ppo.epochs", std::to_string(ppo.epochs));
    return m;
}

}  // namespace difo
