#pragma once

#include <cstdint>
#include <filesystem>

#include "latentcd/denoiser.hpp"
#include "latentcd/tensor.hpp"

namespace latentcd {

// Flat little-endian tensor container, all integers explicit-width LE:
//   u32 magic "LCDT", u32 version, u32 tensor_count
//   per tensor: u32 name_len, name bytes, u32 rank, u64 dims[rank],
//               u32 dtype (1 = float64), payload (row-major f64)
//   trailer: u64 FNV-1a hash of every byte before it
// Writes go to a temp file in the same directory and are renamed into place,
// so a crash never leaves a truncated checkpoint behind. load verifies magic,
// version, dtype and the content hash and throws IoError on any mismatch.
inline constexpr std::uint32_t kTensorMagic = 0x5444434cu;   // "LCDT"
inline constexpr std::uint32_t kLatentsMagic = 0x4c44434cu;  // "LCDL"
inline constexpr std::uint32_t kContainerVersion = 1;

void save_tensors(const std::filesystem::path& path, const TensorList& tensors);
TensorList load_tensors(const std::filesystem::path& path);

// The stored (and re-verified) trailer hash.
std::uint64_t checkpoint_content_hash(const std::filesystem::path& path);

// Model checkpoints are tensor containers with a leading "meta.config" tensor
// carrying the architecture, so load_model can rebuild the exact network.
void save_model(const std::filesystem::path& path, const DenoiserModel& m);
DenoiserModel load_model(const std::filesystem::path& path);

// Latent matrix container ("LCDL"): u64 n, u64 dim, u32 dtype, payload,
// u64 FNV-1a trailer.
void save_latents(const std::filesystem::path& path, const std::vector<Vec>& rows,
                  int dim);
std::pair<std::vector<Vec>, int> load_latents(const std::filesystem::path& path);

// Whole-file hash (used for provenance lines in sidecar metadata).
std::uint64_t file_fnv1a(const std::filesystem::path& path);

}  // namespace latentcd
