#pragma once

#include <string>

#include "difo/env.hpp"

namespace difo {

// Binary dataset format: magic "DIFO", version byte 1, one UTF-8 JSON header
// line {env, state_dim, n_transitions, n_trajectories, seed} terminated by \n,
// then n_transitions records of 2 * state_dim little-endian float32 (s then
// s_next), then n_trajectories little-endian uint32 trajectory end indices.
// Truncation or magic mismatch is a hard read error; save(load(f)) is
// byte-identical to f.
void save_dataset(const std::string& path, const ExpertDataset& ds);
ExpertDataset load_dataset(const std::string& path);

}  // namespace difo
