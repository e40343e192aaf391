#pragma once

#include <filesystem>

#include "lrta/nn/parameter.hpp"

namespace lrta::nn {

// Archive layout (all integers little-endian):
//   "LRTACKPT" | u32 version | u64 count |
//   count x ( u32 name_len | name | u32 ndim | ndim x u64 dim | f64 payload, row-major )

void save_parameters(const std::filesystem::path& path, const ParameterStore& store);

/// Overwrites the values of `store` from the archive. Every parameter in the
/// store must be present with an identical shape, else VersioningError.
void load_parameters(const std::filesystem::path& path, ParameterStore& store);

}  // namespace lrta::nn
