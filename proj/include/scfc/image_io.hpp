#pragma once

#include <string>
#include <vector>

#include "scfc/image.hpp"

namespace scfc {

// --- IDX container (the MNIST distribution format) -------------------------
// Images: magic 0x00000803, big-endian u32 count/rows/cols, unsigned bytes.
// Labels: magic 0x00000801, big-endian u32 count, unsigned bytes.
// Pixels are scaled to [0,1] by /255; label i attaches to image i.
std::vector<Image> load_idx(const std::string& images_path, const std::string& labels_path);
void save_idx(const std::string& images_path, const std::string& labels_path,
              const std::vector<Image>& images);

// --- PGM (binary P5) --------------------------------------------------------
Image load_pgm(const std::string& path);
void save_pgm(const std::string& path, const Image& img);

// --- PNG (8-bit grayscale; RGB/alpha inputs are converted by Rec.601 luma) --
Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& img);

// Dispatch on extension (.pgm/.png, case-insensitive).
Image load_image_file(const std::string& path);
bool has_image_extension(const std::string& path);

}  // namespace scfc
