#pragma once

#include <string>

#include "vadd/adam.hpp"
#include "vadd/param_store.hpp"

namespace vadd::ad {

// Checkpoint container: magic "VADD", format version u32, entry count u32,
// then per entry: name length u32 + UTF-8 name, rank u32, extents (u64 each),
// raw little-endian f64 data. The optimizer state lives in a sibling file
// (same layout, with the Adam step counter after the version word); moment
// buffers are stored as entries named "m.<param>" / "v.<param>".

inline constexpr uint32_t kCheckpointVersion = 1;

void save_params(const std::string& path, const ParamStore& params);
void load_params(const std::string& path, ParamStore& params); // merges/overwrites by name

std::string optimizer_path(const std::string& checkpoint_path);
void save_optimizer(const std::string& path, const AdamState& state);
void load_optimizer(const std::string& path, AdamState& state);

} // namespace vadd::ad
