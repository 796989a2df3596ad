#pragma once

// Seeded image fixtures shared across test binaries.

#include <filesystem>
#include <string>

#include "scfc/image.hpp"
#include "scfc/rng.hpp"

namespace scfc::testing {

inline Image noise_image(Rng& rng, std::size_t width, std::size_t height, const std::string& id,
                         double lo = 0.0, double hi = 1.0) {
    Image img(width, height);
    img.id = id;
    for (double& p : img.pixels) p = rng.uniform(lo, hi);
    return img;
}

// Smooth structured image: a soft disc on a gradient background, jittered by
// the rng. Gives SSIM something with actual local structure.
inline Image blob_image(Rng& rng, std::size_t width, std::size_t height, const std::string& id) {
    Image img(width, height);
    img.id = id;
    const double cx = rng.uniform(0.3, 0.7) * static_cast<double>(width);
    const double cy = rng.uniform(0.3, 0.7) * static_cast<double>(height);
    const double radius = rng.uniform(0.15, 0.3) * static_cast<double>(width);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            const double d = std::sqrt(dx * dx + dy * dy);
            const double background = 0.2 + 0.3 * static_cast<double>(x) / static_cast<double>(width);
            const double disc = d < radius ? 0.6 * (1.0 - d / radius) : 0.0;
            img.at(y, x) = std::clamp(background + disc, 0.0, 1.0);
        }
    }
    return img;
}

inline std::string data_dir() { return SCFC_TEST_DATA_DIR; }

inline std::string digits_images_path() { return data_dir() + "/digits/digits-images-idx3-ubyte"; }
inline std::string digits_labels_path() { return data_dir() + "/digits/digits-labels-idx1-ubyte"; }

// Fresh per-test scratch directory under the build tree.
inline std::string scratch_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::path(SCFC_TEST_TMP_DIR) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace scfc::testing
