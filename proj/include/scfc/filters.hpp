#pragma once

#include "scfc/image.hpp"

namespace scfc {

// Sliding-window maximum ("privacy degradation"). Window 1 is the identity.
struct DegradeSpec {
    std::size_t window = 1;

    void check_against(const Image& img) const {
        if (window < 1)
            throw ScfcError(ErrorCode::InvalidArgument, "degrade window must be >= 1");
        if (window > img.width || window > img.height)
            throw ScfcError(ErrorCode::InvalidArgument,
                            "degrade window " + std::to_string(window) + " exceeds image " +
                                std::to_string(img.width) + "x" + std::to_string(img.height));
    }
};

// k x k median with edge replication; k must be odd and fit the image.
Image median_filter(const Image& img, std::size_t k);

// out(x,y) = max over the window anchored at (x,y), reads clamped at the
// borders. Same output size as the input; pointwise monotone in the window.
Image maxpool_degrade(const Image& img, const DegradeSpec& spec);

}  // namespace scfc
