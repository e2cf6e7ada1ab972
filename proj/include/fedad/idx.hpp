#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedad/dataset.hpp"

namespace fedad {

// Reads an IDX image/label file pair (big-endian headers, magic 0x00000803 for
// images and 0x00000801 for labels). Pixels are scaled to [0,1] by /255 and
// flattened row-major, one image per row.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes the dataset back out in IDX format. Feature values are expected in
// [0,1] and are quantized to bytes. Used for fixtures and round-trip checks.
void write_idx(const LabeledDataset& dataset, const std::string& images_path,
               const std::string& labels_path);

} // namespace fedad
