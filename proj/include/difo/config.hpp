#pragma once

#include <map>
#include <string>
#include <vector>

#include "difo/discriminator.hpp"
#include "difo/policy.hpp"
#include "difo/ppo.hpp"

namespace difo {

// Flat "section.key" -> value view of an INI-style config file: `key = value`
// lines under `[section]` headers, `#` starts a comment, later duplicates win.
class ConfigMap {
  public:
    static ConfigMap parse_file(const std::string& path);
    static ConfigMap parse_text(const std::string& text, const std::string& origin);

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    // Accepts "section.key=value"; malformed specs are errors.
    void apply_override(const std::string& spec);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_str(const std::string& key) const;  // throws when absent
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    long long get_ll(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;

    // INI text with keys grouped back under their sections, sorted; parseable
    // by parse_text. Written next to run outputs so a run is reproducible from
    // its own directory.
    std::string to_text() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

  private:
    double parse_double(const std::string& key) const;
    long long parse_ll(const std::string& key) const;

    std::map<std::string, std::string> kv_;
};

// Everything one training run needs; every field is addressable from the
// config file ([train], [discriminator], [ppo] sections) and by --override.
struct TrainConfig {
    std::string env_name;
    Variant variant = Variant::Difo;
    long long total_env_steps = 0;
    int rollout_steps = 2048;
    int disc_updates_per_round = 4;
    int disc_warmup_rounds = 10;  // discriminator-only rounds before PPO starts
    long long eval_every = 8192;
    int eval_episodes = 50;
    unsigned long long seed = 0;
    int na_pretrain_steps = 20000;
    double env_action_noise = 0.0;
    std::string expert_dataset;
    std::string out_dir;
    std::vector<int> value_hidden = {64, 64};
    DiscriminatorConfig disc;
    PpoConfig ppo;
    PolicyConfig policy;

    static TrainConfig from_map(const ConfigMap& m);
    void validate() const;
    ConfigMap to_map() const;  // resolved values, including every default
};

}  // namespace difo
