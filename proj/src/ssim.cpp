#include "scfc/ssim.hpp"

#include <algorithm>

namespace scfc {

double ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw ScfcError(ErrorCode::ShapeMismatch, "ssim inputs differ in size: " + std::to_string(a.width) +
                                                      "x" + std::to_string(a.height) + " vs " +
                                                      std::to_string(b.width) + "x" +
                                                      std::to_string(b.height));
    constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2 with L = 1
    constexpr double kC2 = 0.03 * 0.03;  // (K2*L)^2

    const std::size_t win = std::min({kSsimWindow, a.width, a.height});
    const std::size_t ny = a.height - win + 1;
    const std::size_t nx = a.width - win + 1;
    const double inv_n = 1.0 / static_cast<double>(win * win);

    double total = 0.0;
    for (std::size_t wy = 0; wy < ny; ++wy) {
        for (std::size_t wx = 0; wx < nx; ++wx) {
            double sum_a = 0.0, sum_b = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;
            for (std::size_t y = 0; y < win; ++y) {
                const double* pa = &a.pixels[(wy + y) * a.width + wx];
                const double* pb = &b.pixels[(wy + y) * b.width + wx];
                for (std::size_t x = 0; x < win; ++x) {
                    sum_a += pa[x];
                    sum_b += pb[x];
                    sum_aa += pa[x] * pa[x];
                    sum_bb += pb[x] * pb[x];
                    sum_ab += pa[x] * pb[x];
                }
            }
            const double mu_a = sum_a * inv_n;
            const double mu_b = sum_b * inv_n;
            const double var_a = sum_aa * inv_n - mu_a * mu_a;
            const double var_b = sum_bb * inv_n - mu_b * mu_b;
            const double cov = sum_ab * inv_n - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
                     ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
        }
    }
    return total / static_cast<double>(ny * nx);
}

bool ssim_change(const Image& prev, const Image& next, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ScfcError(ErrorCode::InvalidArgument, "ssim change threshold must lie in (0,1)");
    return ssim(prev, next) < threshold;
}

}  // namespace scfc
