#include "scfc/image.hpp"

namespace scfc {

Image resize_nearest(const Image& img, std::size_t new_width, std::size_t new_height) {
    if (new_width == 0 || new_height == 0)
        throw ScfcError(ErrorCode::InvalidArgument, "resize target must be positive");
    if (img.width == new_width && img.height == new_height) return img;
    Image out(new_width, new_height);
    out.id = img.id;
    out.label = img.label;
    out.source_path = img.source_path;
    for (std::size_t y = 0; y < new_height; ++y) {
        const std::size_t sy = y * img.height / new_height;
        for (std::size_t x = 0; x < new_width; ++x) {
            const std::size_t sx = x * img.width / new_width;
            out.at(y, x) = img.at(sy, sx);
        }
    }
    return out;
}

double luma601(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

}  // namespace scfc
