#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mgr/gcn.hpp"
#include "mgr/trainer.hpp"

namespace mgr {

/// Model checkpoint ("MGRP" container, little-endian):
///   char[4] "MGRP", u32 version = 1,
///   u32 config length, config JSON bytes (the effective TrainConfig plus
///   a "class_names" array),
///   u32 tensor count, then per tensor
///   u16 name length, name bytes, u32 rows, u32 cols, rows*cols f64 row-major.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  TrainConfig config;
  std::vector<std::string> class_names;
  ModelParams params;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& context = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mgr
