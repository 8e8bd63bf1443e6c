/**
 * @file checkpoint.hpp
 * @brief Versioned binary checkpoint container.
 *
 * Layout (all integers and floats little-endian):
 *
 *   magic        8 bytes  "AHPCKPT\0"
 *   version      u32      = 1
 *   header_len   u64
 *   header       header_len bytes of UTF-8 JSON (run config, model profile,
 *                epoch, validation metrics, config hash)
 *   n_params     u32
 *   n_params x { name_len u32, name bytes, rows u64, cols u64, rows*cols f64 }
 *   n_optim      u32
 *   n_optim  x { name_len u32, name bytes, step u64, beta1 f64, beta2 f64, eps f64,
 *                n_entries u32,
 *                n_entries x { name_len u32, name bytes, rows u64, cols u64,
 *                              first moment rows*cols f64, second moment rows*cols f64 } }
 */
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "ahp/adam.hpp"
#include "ahp/matrix.hpp"

namespace ahp {

struct CheckpointFile {
  std::string header_json;
  std::map<std::string, Matrix> params;
  std::map<std::string, AdamState> optimizers;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const CheckpointFile& ck);
CheckpointFile decode_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& ck);
CheckpointFile read_checkpoint(const std::filesystem::path& path);

}  // namespace ahp
