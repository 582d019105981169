#pragma once

#include <cstdint>
#include <string>

#include "kgrec/ingest.hpp"
#include "kgrec/model.hpp"

namespace kgrec {

/// Decoded checkpoint: the trained parameters plus the exact configuration
/// and data fingerprint they were trained under.
struct Checkpoint {
  ModelConfig config;
  std::uint64_t idmap_digest = 0;
  ModelParams params;
};

/// Order-insensitive 64-bit FNV-1a digest over the sorted keys of each id
/// class. Two id maps over the same key sets digest identically regardless
/// of assignment order.
std::uint64_t idmap_digest(const IdMaps& idmaps);

/// Binary little-endian layout, bit-exact on round trip:
///   "KGR1" | u32 version=1
///   config: embed_dim i64, num_hops i64, leaky_slope f64, learning_rate f64,
///           epochs i64, neg_ratio i64, neighbor_cap i64, test_fraction f64,
///           seed i64, optimizer u8 (0 sgd, 1 adam),
///           attention u8 (0 softmax, 1 uniform)
///   idmap digest u64
///   counts: num_nodes u64, embed_dim u64, num_hops u64
///   f64 arrays: embeddings row-major, W_1..W_L row-major, a_1..a_L
void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     std::uint64_t idmap_digest, const std::string& path);

/// Throws CheckpointError with a distinct kind on bad magic, unsupported
/// version, truncation/size mismatch, or inconsistent shape counts.
Checkpoint load_checkpoint(const std::string& path);

/// load_checkpoint plus a shape check against the caller's expected config
/// (embed_dim/num_hops); mismatch throws CheckpointError::Kind::shape_mismatch.
Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected);

/// Digest comparison for a freshly loaded data directory; mismatch throws
/// CheckpointError::Kind::digest_mismatch.
void verify_checkpoint_digest(const Checkpoint& checkpoint, std::uint64_t current_digest);

}  // namespace kgrec
