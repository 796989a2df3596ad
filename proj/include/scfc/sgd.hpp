#pragma once

#include <cstdint>

#include "scfc/layers.hpp"

namespace scfc {

struct SgdConfig {
    double learning_rate = 0.01;
    std::size_t minibatch_size = 32;  // M
    double l2_lambda = 1e-4;          // L2 strength, weights only
    std::uint64_t seed = 0;

    // Run-level validation. sgd_step itself tolerates learning_rate == 0
    // (a no-op step), which the training loop never configures but tests use.
    void validate() const {
        if (learning_rate <= 0.0)
            throw ScfcError(ErrorCode::InvalidArgument, "learning_rate must be > 0");
        if (minibatch_size < 1)
            throw ScfcError(ErrorCode::InvalidArgument, "minibatch_size must be >= 1");
        if (l2_lambda < 0.0)
            throw ScfcError(ErrorCode::InvalidArgument, "l2_lambda must be >= 0");
    }
};

// One descent step over the stack's accumulated gradients:
//   w <- w - lr * (grad + 2*lambda*w)   for weight groups
//   b <- b - lr * grad                  for bias groups
// Refuses the whole step (no partial updates) if any gradient is non-finite.
void sgd_step(LayerStack& stack, const SgdConfig& cfg);

}  // namespace scfc
