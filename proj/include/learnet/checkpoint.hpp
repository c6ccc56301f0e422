#pragma once

#include <cstdint>
#include <string>

#include "learnet/graph.hpp"

namespace learnet {

// Binary checkpoint, platform-independent little-endian layout:
//   magic "LRNT", u16 version, u64 graph digest, u32 record count,
//   records of (u16 name length, name bytes, u8 rank, u32 dims..., f32 payload).
// Records are written in lexicographic key order.
void save_checkpoint(const ModelParams& params, uint64_t graph_digest,
                     const std::string& path);

// Loads and verifies magic, version and digest; the distinct CheckpointError
// subclasses report which check failed. No partial model is ever returned.
ModelParams load_checkpoint(const std::string& path, uint64_t expected_digest);

// Digest recorded in the file, for diagnostics.
uint64_t checkpoint_digest(const std::string& path);

}  // namespace learnet
