#pragma once

#include <filesystem>
#include <vector>

#include "subdetector/encoder/layers.hpp"

namespace subdetector {

// Binary layout, little-endian: magic "SUBDCKPT", u32 version, u64 count, then per
// entry u64 name length, name bytes, u64 rank, u64 dims[rank], f64 data[prod(dims)].
void save_checkpoint(const std::filesystem::path& path, const ParamList& params);
std::vector<grad::TrainableParam> read_checkpoint(const std::filesystem::path& path);

// Copies stored values into `params` by name. Throws DataError on a missing
// entry or a shape mismatch.
void load_checkpoint(const std::filesystem::path& path, const ParamList& params);

}  // namespace subdetector
