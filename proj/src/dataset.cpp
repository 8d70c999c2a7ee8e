#include "difo/dataset.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace difo {

namespace {

// Records are written as raw little-endian words; this code assumes a
// little-endian host, which covers every supported build target.
void write_f32(std::ofstream& f, float v) { f.write(reinterpret_cast<const char*>(&v), 4); }
void write_u32(std::ofstream& f, std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }

float read_f32(std::ifstream& f, const std::string& path) {
    float v;
    f.read(reinterpret_cast<char*>(&v), 4);
    if (f.gcount() != 4) throw std::runtime_error("dataset: truncated transition data in " + path);
    return v;
}

std::uint32_t read_u32(std::ifstream& f, const std::string& path) {
    std::uint32_t v;
    f.read(reinterpret_cast<char*>(&v), 4);
    if (f.gcount() != 4) throw std::runtime_error("dataset: truncated boundary data in " + path);
    return v;
}

}  // namespace

void save_dataset(const std::string& path, const ExpertDataset& ds) {
    if (static_cast<int>(ds.boundaries.size()) != ds.n_trajectories)
        throw std::invalid_argument("save_dataset: boundary count does not match n_trajectories");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("dataset: cannot open for writing: " + path);
    f.write("DIFO", 4);
    char version = 1;
    f.write(&version, 1);
    nlohmann::json header = {{"env", ds.env_name},
                             {"state_dim", ds.state_dim},
                             {"n_transitions", ds.size()},
                             {"n_trajectories", ds.n_trajectories},
                             {"seed", ds.seed}};
    std::string line = header.dump();
    f.write(line.data(), static_cast<std::streamsize>(line.size()));
    f.put('\n');
    for (const Transition& tr : ds.transitions) {
        for (double v : tr.s) write_f32(f, static_cast<float>(v));
        for (double v : tr.s_next) write_f32(f, static_cast<float>(v));
    }
    for (int b : ds.boundaries) write_u32(f, static_cast<std::uint32_t>(b));
    if (!f) throw std::runtime_error("dataset: write failed: " + path);
}

ExpertDataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("dataset: cannot open: " + path);
    char magic[4];
    f.read(magic, 4);
    if (f.gcount() != 4 || std::string(magic, 4) != "DIFO")
        throw std::runtime_error("dataset: bad magic in " + path);
    char version;
    f.read(&version, 1);
    if (f.gcount() != 1 || version != 1)
        throw std::runtime_error("dataset: unsupported version in " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("dataset: missing header in " + path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("dataset: malformed header in " + path + ": " + e.what());
    }
    ExpertDataset ds;
    try {
        ds.env_name = header.at("env").get<std::string>();
        ds.state_dim = header.at("state_dim").get<int>();
        ds.n_trajectories = header.at("n_trajectories").get<int>();
        ds.seed = header.at("seed").get<unsigned long long>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("dataset: header field missing in " + path + ": " + e.what());
    }
    int n = header.at("n_transitions").get<int>();
    if (ds.state_dim < 1 || n < 0 || ds.n_trajectories < 0)
        throw std::runtime_error("dataset: invalid header values in " + path);
    ds.transitions.reserve(n);
    for (int i = 0; i < n; ++i) {
        Transition tr;
        tr.s.resize(ds.state_dim);
        tr.s_next.resize(ds.state_dim);
        for (int c = 0; c < ds.state_dim; ++c) tr.s[c] = read_f32(f, path);
        for (int c = 0; c < ds.state_dim; ++c) tr.s_next[c] = read_f32(f, path);
        ds.transitions.push_back(std::move(tr));
    }
    int prev = 0;
    for (int i = 0; i < ds.n_trajectories; ++i) {
        int b = static_cast<int>(read_u32(f, path));
        if (b <= prev || b > n)
            throw std::runtime_error("dataset: non-increasing trajectory boundary in " + path);
        ds.boundaries.push_back(b);
        prev = b;
    }
    if (!ds.boundaries.empty() && ds.boundaries.back() != n)
        throw std::runtime_error("dataset: boundaries do not cover all transitions in " + path);
    char extra;
    if (f.read(&extra, 1) && f.gcount() == 1)
        throw std::runtime_error("dataset: trailing bytes in " + path);
    return ds;
}

}  // namespace difo
