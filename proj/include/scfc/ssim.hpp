#pragma once

#include "scfc/image.hpp"

namespace scfc {

// Structural similarity over sliding uniform windows (stride 1), averaged
// across all window positions. Dynamic range L = 1.0, C1 = (0.01*L)^2,
// C2 = (0.03*L)^2. The window is 8x8, clamped to the image side if smaller.
// Result lies in [-1, 1]; ssim(x, x) == 1.
double ssim(const Image& a, const Image& b);

// Change detector for the streaming support set: true iff ssim(prev, next)
// drops below the threshold, i.e. the new frame differs enough to keep.
bool ssim_change(const Image& prev, const Image& next, double threshold);

constexpr std::size_t kSsimWindow = 8;

}  // namespace scfc
