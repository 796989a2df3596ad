#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"
#include "scfc/checkpoint.hpp"
#include "scfc/layers.hpp"
#include "scfc/sgd.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace scfc;
using namespace scfc::testing;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

std::vector<double> snapshot_weights(LayerStack& stack) {
    std::vector<double> all;
    for (const auto& group : stack.params())
        all.insert(all.end(), group.value->data.begin(), group.value->data.end());
    return all;
}

// Scalar probe loss: fixed random combination of the stack outputs.
double weighted_output(LayerStack& stack, const Tensor& input, const Tensor& coeffs) {
    const Tensor out = stack.forward(input);
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) loss += coeffs[i] * out[i];
    return loss;
}

void check_stack_gradients(LayerStack& stack, const Tensor& input, Rng& rng, double tolerance = 1e-4) {
    const Tensor out_probe = stack.forward(input);
    const Tensor coeffs = random_tensor(rng, out_probe.shape);

    auto loss = [&]() { return weighted_output(stack, input, coeffs); };

    Tensor input_copy = input;
    StackTape tape = stack.make_tape();
    Tensor analytic_input_grad;
    auto compute = [&]() {
        stack.zero_grads();
        stack.forward(input_copy, tape);
        analytic_input_grad = stack.backward(tape, coeffs);
    };

    CHECK(max_gradient_error(stack.params(), loss, compute) < tolerance);

    // Input gradients through the same probe.
    compute();
    double worst = 0.0;
    for (std::size_t i = 0; i < input_copy.size(); ++i) {
        auto input_loss = [&]() { return weighted_output(stack, input_copy, coeffs); };
        const double fd = finite_difference(input_copy.data[i], input_loss);
        worst = std::max(worst, relative_error(analytic_input_grad[i], fd));
    }
    CHECK(worst < tolerance);
}

}  // namespace

TEST_CASE("tensor rejects mismatched shape and data") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), ScfcError);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.all_finite());
}

TEST_CASE("conv2d forward matches the hand-computed 3x3 ramp example") {
    LayerStack stack;
    stack.set_input_shape({1, 3, 3});
    auto conv = std::make_unique<Conv2d>(1, 1, 2);
    conv->weights.data = {1.0, 0.0, 0.0, 1.0};
    conv->bias.fill(0.0);
    stack.add(std::move(conv));

    const Tensor in({1, 3, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8});
    const Tensor out = stack.forward(in);
    CHECK(out.shape == std::vector<std::size_t>{1, 2, 2});
    CHECK(out.data == std::vector<double>{4, 6, 10, 12});
}

TEST_CASE("identity dense layer returns its input exactly") {
    LayerStack stack;
    auto dense = std::make_unique<Dense>(4, 4);
    for (std::size_t i = 0; i < 4; ++i) dense->weights.at2(i, i) = 1.0;
    stack.add(std::move(dense));

    const Tensor v({4}, {0.5, -1.25, 3.0, 0.0});
    CHECK(stack.forward(v).data == v.data);
}

TEST_CASE("zero-weight stack yields 0.5 everywhere after sigmoid") {
    LayerStack stack;
    stack.add(std::make_unique<Dense>(6, 3));  // zero-initialized by default
    stack.add(std::make_unique<Sigmoid>());
    Rng rng(7);
    const Tensor out = stack.forward(random_tensor(rng, {6}));
    for (double v : out.data) CHECK(v == 0.5);
}

TEST_CASE("forward reports the offending layer on shape mismatch") {
    LayerStack stack;
    stack.add(std::make_unique<Relu>());
    stack.add(std::make_unique<Dense>(4, 2));
    try {
        stack.forward(Tensor({3}, {1, 2, 3}));
        FAIL("expected a shape error");
    } catch (const ScfcError& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
}

TEST_CASE("backward without a prior forward is rejected") {
    LayerStack stack;
    stack.add(std::make_unique<Dense>(3, 2));
    try {
        stack.backward(Tensor({2}, {1, 1}));
        FAIL("expected a cache error");
    } catch (const ScfcError& e) {
        CHECK(e.code() == ErrorCode::NoForwardCache);
    }

    // ... and a weight update invalidates the cached forward.
    Rng rng(3);
    stack.init_weights(rng);
    stack.forward_train(random_tensor(rng, {3}));
    sgd_step(stack, SgdConfig{});
    CHECK_THROWS_AS(stack.backward(Tensor({2}, {1, 1})), ScfcError);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
    Rng rng(11);
    LayerStack stack;
    stack.add(std::make_unique<Dense>(5, 4));
    stack.add(std::make_unique<Relu>());
    stack.add(std::make_unique<Dense>(4, 2));
    stack.init_weights(rng);

    stack.zero_grads();
    stack.forward_train(random_tensor(rng, {5}));
    stack.backward(Tensor({2}));
    for (const auto& group : stack.params())
        for (double g : group.grad->data) CHECK(g == 0.0);
}

TEST_CASE("linear layer with loss sum(y) has dL/dW = outer(1, x)") {
    LayerStack stack;
    auto dense = std::make_unique<Dense>(3, 2);
    Dense* raw = dense.get();
    stack.add(std::move(dense));
    Rng rng(5);
    for (double& w : raw->weights.data) w = rng.uniform(-1, 1);

    const Tensor x({3}, {0.4, -1.1, 2.5});
    stack.zero_grads();
    stack.forward_train(x);
    stack.backward(Tensor({2}, {1.0, 1.0}));  // d(sum y)/dy = 1

    for (std::size_t o = 0; o < 2; ++o)
        for (std::size_t i = 0; i < 3; ++i) CHECK(raw->grad_weights.at2(o, i) == doctest::Approx(x[i]));
    for (std::size_t o = 0; o < 2; ++o) CHECK(raw->grad_bias[o] == doctest::Approx(1.0));
}

TEST_CASE("per-layer finite-difference gradient checks") {
    Rng rng(20260808);

    SUBCASE("conv2d") {
        LayerStack stack;
        stack.add(std::make_unique<Conv2d>(2, 3, 2));
        stack.init_weights(rng);
        check_stack_gradients(stack, random_tensor(rng, {2, 4, 5}), rng);
    }
    SUBCASE("dense") {
        LayerStack stack;
        stack.add(std::make_unique<Dense>(6, 4));
        stack.init_weights(rng);
        check_stack_gradients(stack, random_tensor(rng, {6}), rng);
    }
    SUBCASE("relu") {
        LayerStack stack;
        stack.add(std::make_unique<Relu>());
        // keep activations away from the kink so the FD step cannot cross it
        check_stack_gradients(stack, random_tensor(rng, {7}, 0.05, 1.0), rng);
    }
    SUBCASE("sigmoid") {
        LayerStack stack;
        stack.add(std::make_unique<Sigmoid>());
        check_stack_gradients(stack, random_tensor(rng, {5}), rng);
    }
    SUBCASE("conv2d with stride 2") {
        LayerStack stack;
        stack.add(std::make_unique<Conv2d>(1, 2, 2, 2));
        stack.init_weights(rng);
        check_stack_gradients(stack, random_tensor(rng, {1, 6, 6}), rng);
    }
    SUBCASE("maxpool") {
        LayerStack stack;
        stack.add(std::make_unique<MaxPool2x2>());
        // well-separated values so the argmax is stable under the FD step
        Tensor in({1, 4, 4});
        for (std::size_t i = 0; i < in.size(); ++i) in[i] = 0.01 * static_cast<double>(i * i);
        check_stack_gradients(stack, in, rng);
    }
    SUBCASE("maxpool drops the odd trailing row and column") {
        LayerStack stack;
        stack.add(std::make_unique<MaxPool2x2>());
        Tensor in({1, 5, 5});
        for (std::size_t i = 0; i < in.size(); ++i) in[i] = 0.013 * static_cast<double>(i * i % 37);
        CHECK(stack.forward(in).shape == std::vector<std::size_t>{1, 2, 2});
        check_stack_gradients(stack, in, rng);
    }
    SUBCASE("flatten plus dense") {
        LayerStack stack;
        stack.add(std::make_unique<Flatten>());
        stack.add(std::make_unique<Dense>(12, 3));
        stack.init_weights(rng);
        check_stack_gradients(stack, random_tensor(rng, {3, 2, 2}), rng);
    }
    SUBCASE("two conv blocks end to end") {
        LayerStack stack;
        stack.set_input_shape({1, 10, 10});
        stack.add(std::make_unique<Conv2d>(1, 4, 3));
        stack.add(std::make_unique<Relu>());
        stack.add(std::make_unique<MaxPool2x2>());
        stack.add(std::make_unique<Conv2d>(4, 6, 3));
        stack.add(std::make_unique<Relu>());
        stack.add(std::make_unique<Flatten>());
        stack.add(std::make_unique<Dense>(24, 8));
        stack.add(std::make_unique<Sigmoid>());
        stack.init_weights(rng);
        check_stack_gradients(stack, random_tensor(rng, {1, 10, 10}, 0.0, 1.0), rng);
    }
}

TEST_CASE("sgd_step applies the update rule") {
    auto make_single_weight_stack = [](double w0) {
        LayerStack stack;
        auto dense = std::make_unique<Dense>(1, 1);
        dense->weights[0] = w0;
        stack.add(std::move(dense));
        return stack;
    };

    SUBCASE("lr = 0 leaves weights unchanged") {
        LayerStack stack = make_single_weight_stack(0.7);
        stack.params()[0].grad->data[0] = 42.0;
        SgdConfig cfg;
        cfg.learning_rate = 0.0;
        sgd_step(stack, cfg);
        CHECK(stack.params()[0].value->data[0] == 0.7);
    }
    SUBCASE("lambda = 0 is a plain gradient step") {
        LayerStack stack = make_single_weight_stack(1.0);
        stack.params()[0].grad->data[0] = 0.25;
        SgdConfig cfg;
        cfg.learning_rate = 0.1;
        cfg.l2_lambda = 0.0;
        sgd_step(stack, cfg);
        CHECK(stack.params()[0].value->data[0] == doctest::Approx(1.0 - 0.1 * 0.25).epsilon(1e-15));
    }
    SUBCASE("decay arithmetic: w=1, grad=0, lambda=0.1, lr=0.5 -> 0.9") {
        LayerStack stack = make_single_weight_stack(1.0);
        SgdConfig cfg;
        cfg.learning_rate = 0.5;
        cfg.l2_lambda = 0.1;
        sgd_step(stack, cfg);
        CHECK(stack.params()[0].value->data[0] == doctest::Approx(0.9).epsilon(1e-15));
    }
    SUBCASE("biases are not decayed") {
        LayerStack stack;
        auto dense = std::make_unique<Dense>(1, 1);
        dense->bias[0] = 1.0;
        stack.add(std::move(dense));
        SgdConfig cfg;
        cfg.learning_rate = 0.5;
        cfg.l2_lambda = 0.1;
        sgd_step(stack, cfg);
        CHECK(stack.params()[1].value->data[0] == 1.0);
    }
}

TEST_CASE("sgd_step refuses non-finite gradients and names the layer") {
    Rng rng(9);
    LayerStack stack;
    stack.add(std::make_unique<Dense>(2, 2));
    stack.add(std::make_unique<Dense>(2, 1));
    stack.init_weights(rng);
    const std::vector<double> before = snapshot_weights(stack);

    stack.params()[2].grad->data[0] = std::numeric_limits<double>::quiet_NaN();  // layer1 weights
    try {
        sgd_step(stack, SgdConfig{});
        FAIL("expected the step to be refused");
    } catch (const ScfcError& e) {
        CHECK(e.code() == ErrorCode::NonFiniteValue);
        CHECK(std::string(e.what()).find("layer1") != std::string::npos);
    }
    CHECK(snapshot_weights(stack) == before);  // refused means untouched
}

TEST_CASE("pure decay strictly shrinks the weight norm") {
    Rng rng(13);
    LayerStack stack;
    stack.add(std::make_unique<Dense>(4, 4));
    stack.init_weights(rng);

    SgdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.l2_lambda = 0.05;
    auto norm = [&]() {
        double n = 0.0;
        for (const auto& group : stack.params())
            for (double w : group.value->data) n += w * w;
        return n;
    };
    double previous = norm();
    for (int step = 0; step < 5; ++step) {
        stack.zero_grads();
        sgd_step(stack, cfg);
        const double current = norm();
        CHECK(current < previous);
        previous = current;
    }
}

TEST_CASE("identical seeds give bit-identical weight trajectories") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        LayerStack stack;
        stack.set_input_shape({1, 6, 6});
        stack.add(std::make_unique<Conv2d>(1, 2, 3));
        stack.add(std::make_unique<Relu>());
        stack.add(std::make_unique<Flatten>());
        stack.add(std::make_unique<Dense>(32, 1));
        stack.add(std::make_unique<Sigmoid>());
        stack.init_weights(rng);

        SgdConfig cfg;
        cfg.learning_rate = 0.05;
        cfg.l2_lambda = 1e-3;
        for (int step = 0; step < 12; ++step) {
            const Tensor in = random_tensor(rng, {1, 6, 6}, 0.0, 1.0);
            stack.zero_grads();
            stack.forward_train(in);
            stack.backward(Tensor({1}, {1.0}));
            sgd_step(stack, cfg);
        }
        return stack;
    };
    LayerStack a = run(99), b = run(99), c = run(100);
    CHECK(snapshot_weights(a) == snapshot_weights(b));
    CHECK(snapshot_weights(a) != snapshot_weights(c));
}

TEST_CASE("weights are identical before and after a forward-only pass") {
    Rng rng(17);
    LayerStack stack;
    stack.add(std::make_unique<Dense>(8, 3));
    stack.add(std::make_unique<Sigmoid>());
    stack.init_weights(rng);
    const std::vector<double> before = snapshot_weights(stack);
    for (int i = 0; i < 3; ++i) stack.forward(random_tensor(rng, {8}));
    CHECK(snapshot_weights(stack) == before);
}

TEST_CASE("sigmoid outputs stay strictly inside (0,1) on realistic activations") {
    Rng rng(23);
    LayerStack stack;
    stack.add(std::make_unique<Dense>(10, 6));
    stack.add(std::make_unique<Sigmoid>());
    stack.init_weights(rng);
    for (int i = 0; i < 20; ++i) {
        const Tensor out = stack.forward(random_tensor(rng, {10}));
        for (double v : out.data) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("checkpoint round-trip restores bit-identical weights and config") {
    Rng rng(31);
    LayerStack stack;
    stack.set_input_shape({1, 8, 8});
    stack.add(std::make_unique<Conv2d>(1, 3, 3));
    stack.add(std::make_unique<Relu>());
    stack.add(std::make_unique<MaxPool2x2>());
    stack.add(std::make_unique<Flatten>());
    stack.add(std::make_unique<Dense>(27, 5));
    stack.add(std::make_unique<Sigmoid>());
    stack.init_weights(rng);

    SgdConfig cfg;
    cfg.learning_rate = 0.125;
    cfg.minibatch_size = 7;
    cfg.l2_lambda = 3e-4;
    cfg.seed = 4242;

    const std::string path = scratch_dir("ckpt") + "/stack.bin";
    save_stack_file(path, stack, cfg);

    LayerStack loaded;
    SgdConfig loaded_cfg;
    load_stack_file(path, loaded, loaded_cfg);

    CHECK(snapshot_weights(loaded) == snapshot_weights(stack));
    CHECK(loaded_cfg.learning_rate == cfg.learning_rate);
    CHECK(loaded_cfg.minibatch_size == cfg.minibatch_size);
    CHECK(loaded_cfg.l2_lambda == cfg.l2_lambda);
    CHECK(loaded_cfg.seed == cfg.seed);

    const Tensor probe = random_tensor(rng, {1, 8, 8}, 0.0, 1.0);
    CHECK(stack.forward(probe).data == loaded.forward(probe).data);

    SUBCASE("corrupt magic is rejected") {
        std::ofstream bad(path, std::ios::binary);
        bad << "NOTACKPT";
        bad.close();
        LayerStack scratch;
        SgdConfig scratch_cfg;
        CHECK_THROWS_AS(load_stack_file(path, scratch, scratch_cfg), ScfcError);
    }
}
