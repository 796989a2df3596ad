#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "scfc/siamese.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace scfc;
using namespace scfc::testing;

namespace {

SiameseModel tiny_model(std::uint64_t seed, double lambda = 0.0) {
    Rng rng(seed);
    return SiameseModel::build(12, 12, lambda, rng);
}

LabeledPair pair_of(const Image& a, const Image& b, int y) { return LabeledPair{&a, &b, y}; }

std::vector<double> all_weights(SiameseModel& model) {
    std::vector<double> out;
    for (const auto& group : model.params())
        out.insert(out.end(), group.value->data.begin(), group.value->data.end());
    return out;
}

void zero_head(SiameseModel& model) {
    for (auto& group : model.head().params()) group.value->fill(0.0);
}

// ---------------------------------------------------------------------------
// Independent scalar re-implementation of the whole pair forward pass, built
// on nested vectors and plain loops, reading only the model's weight tensors.
// ---------------------------------------------------------------------------

using Grid = std::vector<std::vector<std::vector<double>>>;  // [channel][y][x]

Grid conv_ref(const Grid& in, const Tensor& w, const Tensor& b, std::size_t k) {
    const std::size_t in_ch = in.size(), h = in[0].size(), wdt = in[0][0].size();
    const std::size_t out_ch = b.size();
    Grid out(out_ch, std::vector<std::vector<double>>(h - k + 1, std::vector<double>(wdt - k + 1)));
    for (std::size_t oc = 0; oc < out_ch; ++oc)
        for (std::size_t y = 0; y + k <= h; ++y)
            for (std::size_t x = 0; x + k <= wdt; ++x) {
                double acc = b[oc];
                for (std::size_t ic = 0; ic < in_ch; ++ic)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx)
                            acc += w.data[((oc * in_ch + ic) * k + ky) * k + kx] * in[ic][y + ky][x + kx];
                out[oc][y][x] = acc;
            }
    return out;
}

Grid relu_ref(Grid in) {
    for (auto& ch : in)
        for (auto& row : ch)
            for (double& v : row) v = v > 0 ? v : 0;
    return in;
}

Grid pool_ref(const Grid& in) {
    const std::size_t h = in[0].size() / 2, w = in[0][0].size() / 2;
    Grid out(in.size(), std::vector<std::vector<double>>(h, std::vector<double>(w)));
    for (std::size_t c = 0; c < in.size(); ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                out[c][y][x] = std::max({in[c][2 * y][2 * x], in[c][2 * y][2 * x + 1],
                                         in[c][2 * y + 1][2 * x], in[c][2 * y + 1][2 * x + 1]});
    return out;
}

std::vector<double> dense_ref(const std::vector<double>& in, const Tensor& w, const Tensor& b,
                              bool relu) {
    std::vector<double> out(b.size());
    for (std::size_t o = 0; o < out.size(); ++o) {
        double acc = b[o];
        for (std::size_t i = 0; i < in.size(); ++i) acc += w.data[o * in.size() + i] * in[i];
        out[o] = relu && acc < 0 ? 0 : acc;
    }
    return out;
}

double reference_forward_pair(SiameseModel& model, const Image& ia, const Image& ib) {
    auto grab_conv = [&](std::size_t layer) -> const Conv2d& {
        return dynamic_cast<const Conv2d&>(model.encoder().layer(layer));
    };
    auto grab_dense = [&](LayerStack& stack, std::size_t layer) -> const Dense& {
        return dynamic_cast<const Dense&>(stack.layer(layer));
    };

    auto embed = [&](const Image& img) {
        Grid g(1, std::vector<std::vector<double>>(img.height, std::vector<double>(img.width)));
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width; ++x) g[0][y][x] = img.at(y, x);
        g = pool_ref(relu_ref(conv_ref(g, grab_conv(0).weights, grab_conv(0).bias, 3)));
        g = pool_ref(relu_ref(conv_ref(g, grab_conv(3).weights, grab_conv(3).bias, 3)));
        std::vector<double> flat;
        for (const auto& ch : g)
            for (const auto& row : ch) flat.insert(flat.end(), row.begin(), row.end());
        flat = dense_ref(flat, grab_dense(model.encoder(), 7).weights, grab_dense(model.encoder(), 7).bias,
                         true);
        return dense_ref(flat, grab_dense(model.encoder(), 9).weights, grab_dense(model.encoder(), 9).bias,
                         true);
    };

    const std::vector<double> ea = embed(ia), eb = embed(ib);
    std::vector<double> merged(ea.size());
    for (std::size_t i = 0; i < ea.size(); ++i) merged[i] = std::fabs(ea[i] - eb[i]);
    merged = dense_ref(merged, grab_dense(model.head(), 0).weights, grab_dense(model.head(), 0).bias, true);
    merged = dense_ref(merged, grab_dense(model.head(), 2).weights, grab_dense(model.head(), 2).bias, false);
    return 1.0 / (1.0 + std::exp(-merged[0]));
}

}  // namespace

TEST_CASE("forward_pair with a zeroed head is exactly 0.5") {
    SiameseModel model = tiny_model(1);
    zero_head(model);
    Rng rng(2);
    const Image x = noise_image(rng, 12, 12, "x");
    CHECK(model.forward_pair(x, x) == 0.5);
    CHECK(model.forward_pair(x, noise_image(rng, 12, 12, "y")) == 0.5);
}

TEST_CASE("forward_pair is bit-exactly symmetric") {
    SiameseModel model = tiny_model(3);
    Rng rng(4);
    for (int i = 0; i < 10; ++i) {
        const Image a = noise_image(rng, 12, 12, "a");
        const Image b = blob_image(rng, 12, 12, "b");
        CHECK(model.forward_pair(a, b) == model.forward_pair(b, a));
    }
}

TEST_CASE("forward_pair matches an independent scalar re-implementation") {
    SiameseModel model = tiny_model(5);
    Rng rng(6);
    for (int i = 0; i < 5; ++i) {
        const Image a = noise_image(rng, 12, 12, "a");
        const Image b = blob_image(rng, 12, 12, "b");
        CHECK(model.forward_pair(a, b) ==
              doctest::Approx(reference_forward_pair(model, a, b)).epsilon(1e-12));
    }
}

TEST_CASE("forward_pair rejects images that were not resized upstream") {
    SiameseModel model = tiny_model(7);
    Rng rng(8);
    const Image wrong = noise_image(rng, 9, 9, "wrong");
    try {
        model.forward_pair(wrong, wrong);
        FAIL("expected shape error");
    } catch (const ScfcError& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
}

TEST_CASE("pair_loss hits the textbook values") {
    Rng rng(9);
    const Image a = noise_image(rng, 12, 12, "a");
    const Image b = noise_image(rng, 12, 12, "b");

    SUBCASE("p = 0.5 gives ln 2 for either label") {
        SiameseModel model = tiny_model(10, 0.0);
        zero_head(model);
        CHECK(pair_loss(model, pair_of(a, b, 1)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        CHECK(pair_loss(model, pair_of(a, b, 0)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("y = 1 with p near 1 drives the loss to 0") {
        SiameseModel model = tiny_model(11, 0.0);
        zero_head(model);
        dynamic_cast<Dense&>(model.head().layer(2)).bias[0] = 20.0;  // p = sigmoid(20)
        CHECK(pair_loss(model, pair_of(a, b, 1)) < 1e-6);
    }
    SUBCASE("y = 0 at p = 0.8 costs -ln 0.2") {
        SiameseModel model = tiny_model(12, 0.0);
        zero_head(model);
        dynamic_cast<Dense&>(model.head().layer(2)).bias[0] = std::log(4.0);  // sigmoid = 0.8
        CHECK(pair_loss(model, pair_of(a, b, 0)) == doctest::Approx(-std::log(0.2)).epsilon(1e-9));
    }
}

TEST_CASE("pair_loss gradients match finite differences over every weight") {
    SiameseModel model = tiny_model(13, 1e-3);  // lambda > 0 exercises the L2 term
    Rng rng(14);
    const Image a = noise_image(rng, 12, 12, "a", 0.0, 1.0);
    const Image b = blob_image(rng, 12, 12, "b");
    const LabeledPair pair = pair_of(a, b, 1);

    auto loss = [&]() { return pair_loss(model, pair); };
    auto compute = [&]() { pair_loss(model, pair); };
    CHECK(max_gradient_error(model.params(), loss, compute) < 1e-4);

    const LabeledPair negative = pair_of(a, b, 0);
    auto loss_neg = [&]() { return pair_loss(model, negative); };
    auto compute_neg = [&]() { pair_loss(model, negative); };
    CHECK(max_gradient_error(model.params(), loss_neg, compute_neg) < 1e-4);
}

TEST_CASE("loss never drops below the regularization floor") {
    SiameseModel model = tiny_model(15, 5e-3);
    Rng rng(16);
    for (int i = 0; i < 10; ++i) {
        const Image a = noise_image(rng, 12, 12, "a");
        const Image b = blob_image(rng, 12, 12, "b");
        const double floor = model.l2_lambda() * model.weight_l2();
        const double loss = pair_loss(model, pair_of(a, b, i % 2));
        CHECK(floor >= 0.0);
        CHECK(loss >= floor);
    }
}

TEST_CASE("train_minibatch with lr = 0 reports loss but leaves the model alone") {
    SiameseModel model = tiny_model(17, 1e-4);
    Rng rng(18);
    const Image a = noise_image(rng, 12, 12, "a");
    const Image b = blob_image(rng, 12, 12, "b");
    const std::vector<double> before = all_weights(model);

    SgdConfig cfg;
    cfg.learning_rate = 0.0;
    const double loss = train_minibatch(model, {pair_of(a, b, 1)}, cfg);
    CHECK(loss > 0.0);
    CHECK(all_weights(model) == before);
}

TEST_CASE("a duplicated batch equals the single-pair gradient step") {
    Rng rng(19);
    const Image a = noise_image(rng, 12, 12, "a");
    const Image b = blob_image(rng, 12, 12, "b");
    SgdConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.l2_lambda = 1e-4;

    SiameseModel single = tiny_model(20, 1e-4);
    SiameseModel batched = tiny_model(20, 1e-4);
    REQUIRE(all_weights(single) == all_weights(batched));

    const double single_loss = train_minibatch(single, {pair_of(a, b, 1)}, cfg);
    const double batched_loss = train_minibatch(batched, {pair_of(a, b, 1), pair_of(a, b, 1)}, cfg);
    CHECK(batched_loss == single_loss);  // (L+L)/2 recovers L exactly

    // The mean of identical gradients is the single gradient; accumulation
    // order differs, so equality holds to the last few ulps, not bitwise.
    const std::vector<double> ws = all_weights(single);
    const std::vector<double> wb = all_weights(batched);
    for (std::size_t i = 0; i < ws.size(); ++i) CHECK(relative_error(ws[i], wb[i]) < 1e-12);
}

TEST_CASE("repeated steps on one pair almost always reduce the loss") {
    SiameseModel model = tiny_model(21, 0.0);
    Rng rng(22);
    const Image a = blob_image(rng, 12, 12, "a");
    const Image b = noise_image(rng, 12, 12, "b");
    SgdConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.l2_lambda = 0.0;

    int decreases = 0;
    double previous = train_minibatch(model, {pair_of(a, b, 0)}, cfg);
    for (int step = 1; step < 50; ++step) {
        const double current = train_minibatch(model, {pair_of(a, b, 0)}, cfg);
        if (current < previous) ++decreases;
        previous = current;
    }
    CHECK(decreases >= 44);  // 45 of 50 steps counting the first
}

TEST_CASE("train_minibatch rejects an empty batch") {
    SiameseModel model = tiny_model(23);
    CHECK_THROWS_AS(train_minibatch(model, {}, SgdConfig{}), ScfcError);
}

TEST_CASE("the two encoder passes share one weight store") {
    SiameseModel model = tiny_model(24);
    // Identity, not approximate equality: there is exactly one encoder stack,
    // and its parameter tensors appear exactly once in the model's params.
    std::vector<const Tensor*> seen;
    for (const auto& group : model.params()) {
        for (const Tensor* t : seen) CHECK(t != group.value);
        seen.push_back(group.value);
    }
    CHECK(&model.encoder() == &model.encoder());

    Rng rng(25);
    const Image x = noise_image(rng, 12, 12, "x");
    CHECK(model.embed(x).data == model.embed(x).data);
    // |e - e| = 0, and a freshly built head has zero biases: exact 0.5.
    CHECK(model.forward_pair(x, x) == 0.5);
}

TEST_CASE("model checkpoint round-trip preserves behavior bit-identically") {
    SiameseModel model = tiny_model(26, 2e-4);
    Rng rng(27);
    const Image a = noise_image(rng, 12, 12, "a");
    const Image b = blob_image(rng, 12, 12, "b");

    SgdConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.seed = 99;
    const std::string path = scratch_dir("model_ckpt") + "/model.bin";
    model.save(path, cfg);

    SgdConfig loaded_cfg;
    SiameseModel loaded = SiameseModel::load(path, loaded_cfg);
    CHECK(loaded.input_width() == 12);
    CHECK(loaded.input_height() == 12);
    CHECK(loaded.l2_lambda() == model.l2_lambda());
    CHECK(loaded_cfg.seed == 99);
    CHECK(all_weights(loaded) == all_weights(model));
    CHECK(loaded.forward_pair(a, b) == model.forward_pair(a, b));

    SUBCASE("corrupt magic is rejected") {
        std::ofstream bad(path, std::ios::binary);
        bad << "12345678";
        bad.close();
        SgdConfig scratch;
        CHECK_THROWS_AS(SiameseModel::load(path, scratch), ScfcError);
    }
}
