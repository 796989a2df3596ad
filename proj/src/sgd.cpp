#include "scfc/sgd.hpp"

namespace scfc {

void sgd_step(LayerStack& stack, const SgdConfig& cfg) {
    if (cfg.l2_lambda < 0.0)
        throw ScfcError(ErrorCode::InvalidArgument, "l2_lambda must be >= 0");
    auto groups = stack.params();
    for (const auto& group : groups) {
        if (!group.grad->all_finite())
            throw ScfcError(ErrorCode::NonFiniteValue, "non-finite gradient in " + group.name + ", step refused");
    }
    for (auto& group : groups) {
        const double lr = cfg.learning_rate;
        const double decay = group.regularized ? 2.0 * cfg.l2_lambda : 0.0;
        for (std::size_t i = 0; i < group.value->size(); ++i) {
            double& w = group.value->data[i];
            w -= lr * (group.grad->data[i] + decay * w);
        }
    }
    stack.invalidate_internal_tape();
}

}  // namespace scfc
