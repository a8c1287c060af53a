#pragma once

#include <cstdint>
#include <filesystem>

#include "implicit_recon/geometry.hpp"
#include "implicit_recon/network.hpp"

namespace irecon {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// A trained network plus the coordinate map it was trained under.
struct Checkpoint {
    NetworkConfig config;
    Params params;
    /// Original coordinates -> network input coordinates.
    AffineMap normalization;
};

/// Binary little-endian layout:
///   "IRCKPT\0\0"  magic (8 bytes)
///   u32 version
///   u32 kind, u64 input_dim, output_dim, hidden_layers, width, skip_period, seed
///   f64 scale, f64 offset[3]
///   u64 parameter count, then f64 values in flattened layer order
///   (row-major W then b per layer)
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// Throws FileNotFound, BadCheckpoint (magic, version, or size mismatch).
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace irecon
