#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "pdg/autodiff.hpp"

namespace pdg {

/// Missing, corrupt or incompatible checkpoint file.
class CheckpointError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Training snapshot: parameters with Adam moments, iteration counter,
/// master seed and named scalar metadata (input normalization constants).
///
/// Binary layout (native little-endian):
///   "PDGCKPT\0" | u32 version | u64 iteration | u64 seed | u64 adam_step
///   | u32 n_meta  { u32 len, name bytes, f64 value }
///   | u32 n_param { u32 len, name bytes, u32 rows, u32 cols, f64 value[], f64 m[], f64 v[] }
/// Column-major data; doubles are written bit-for-bit.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    std::uint64_t iteration = 0;
    std::uint64_t seed = 0;
    ad::ParameterStore params;
    std::map<std::string, double> metadata;
};

void save_checkpoint(const Checkpoint &ckpt, const std::filesystem::path &path);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path &path);

} // namespace pdg
