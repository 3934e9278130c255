#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shotwright/autograd.hpp"
#include "shotwright/error.hpp"

namespace shotwright {

struct CheckpointEntry {
  std::string name;
  Tensor value;
};

/// File layout: the line `shotwright-ckpt v1`, the line `entries <n>`, then
/// per entry a line `<name> <rank> <dim>...` followed by the values as raw
/// little-endian IEEE-754 doubles.
void write_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params);
std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path);

/// Copies entries into parameters by name. A missing entry or a shape
/// mismatch throws, naming the parameter.
void assign_parameters(const std::vector<CheckpointEntry>& entries, std::span<Parameter* const> params);

}  // namespace shotwright
