#include "scfc/filters.hpp"

#include <algorithm>
#include <vector>

namespace scfc {

Image median_filter(const Image& img, std::size_t k) {
    if (k % 2 == 0) throw ScfcError(ErrorCode::InvalidArgument, "median window must be odd");
    if (k > img.width || k > img.height)
        throw ScfcError(ErrorCode::InvalidArgument, "median window " + std::to_string(k) +
                                                        " exceeds image " + std::to_string(img.width) +
                                                        "x" + std::to_string(img.height));
    if (k == 1) return img;

    Image out = img;
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k) / 2;
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(img.width);
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(img.height);
    std::vector<double> window(k * k);
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            std::size_t n = 0;
            for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
                const std::ptrdiff_t sy = std::clamp(y + dy, std::ptrdiff_t{0}, h - 1);
                for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
                    const std::ptrdiff_t sx = std::clamp(x + dx, std::ptrdiff_t{0}, w - 1);
                    window[n++] = img.at(sy, sx);
                }
            }
            auto mid = window.begin() + static_cast<std::ptrdiff_t>(n / 2);
            std::nth_element(window.begin(), mid, window.begin() + static_cast<std::ptrdiff_t>(n));
            out.at(y, x) = *mid;
        }
    }
    return out;
}

Image maxpool_degrade(const Image& img, const DegradeSpec& spec) {
    spec.check_against(img);
    if (spec.window == 1) return img;

    Image out = img;
    const std::size_t w = img.width, h = img.height, win = spec.window;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double best = img.at(y, x);
            for (std::size_t dy = 0; dy < win; ++dy) {
                const std::size_t sy = std::min(y + dy, h - 1);
                for (std::size_t dx = 0; dx < win; ++dx) {
                    const std::size_t sx = std::min(x + dx, w - 1);
                    best = std::max(best, img.at(sy, sx));
                }
            }
            out.at(y, x) = best;
        }
    }
    return out;
}

}  // namespace scfc
