#include "scfc/siamese.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace scfc {

namespace {

constexpr char kModelMagic[8] = {'S', 'C', 'F', 'C', 'M', 'D', 'L', '1'};
constexpr std::uint8_t kPolaritySimilarity = 1;

}  // namespace

SiameseModel SiameseModel::build(std::size_t input_width, std::size_t input_height, double l2_lambda,
                                 Rng& rng) {
    if (input_width < 12 || input_height < 12)
        throw ScfcError(ErrorCode::InvalidArgument,
                        "encoder input must be at least 12x12 for two conv+pool blocks");
    SiameseModel model;
    model.input_width_ = input_width;
    model.input_height_ = input_height;
    model.l2_lambda_ = l2_lambda;

    model.encoder_.set_input_shape({1, input_height, input_width});
    model.encoder_.add(std::make_unique<Conv2d>(1, 8, 3));
    model.encoder_.add(std::make_unique<Relu>());
    model.encoder_.add(std::make_unique<MaxPool2x2>());
    model.encoder_.add(std::make_unique<Conv2d>(8, 16, 3));
    model.encoder_.add(std::make_unique<Relu>());
    model.encoder_.add(std::make_unique<MaxPool2x2>());
    model.encoder_.add(std::make_unique<Flatten>());
    const std::size_t flat = Tensor::element_count(model.encoder_.output_shape());
    model.encoder_.add(std::make_unique<Dense>(flat, 64));
    model.encoder_.add(std::make_unique<Relu>());
    model.encoder_.add(std::make_unique<Dense>(64, kEmbeddingDim));
    model.encoder_.add(std::make_unique<Relu>());

    model.head_.set_input_shape({kEmbeddingDim});
    model.head_.add(std::make_unique<Dense>(kEmbeddingDim, 32));
    model.head_.add(std::make_unique<Relu>());
    model.head_.add(std::make_unique<Dense>(32, 1));
    model.head_.add(std::make_unique<Sigmoid>());

    model.encoder_.init_weights(rng);
    model.head_.init_weights(rng);
    return model;
}

Tensor SiameseModel::image_tensor(const Image& img) const {
    if (img.width != input_width_ || img.height != input_height_)
        throw ScfcError(ErrorCode::ShapeMismatch, "image " + img.id + " is " + std::to_string(img.width) +
                                                      "x" + std::to_string(img.height) + ", encoder wants " +
                                                      std::to_string(input_width_) + "x" +
                                                      std::to_string(input_height_) +
                                                      " (resize upstream)");
    return img.to_tensor();
}

Tensor SiameseModel::embed(const Image& img) const { return encoder_.forward(image_tensor(img)); }

double SiameseModel::head_probability(const Tensor& e1, const Tensor& e2) const {
    if (!e1.same_shape(e2) || e1.size() != kEmbeddingDim)
        throw ScfcError(ErrorCode::ShapeMismatch, "embeddings must both be length " +
                                                      std::to_string(kEmbeddingDim));
    Tensor merged({kEmbeddingDim});
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) merged[i] = std::fabs(e1[i] - e2[i]);
    const double p = head_.forward(merged)[0];
    return std::clamp(p, 1e-12, 1.0 - 1e-12);  // keep the open-interval contract
}

double SiameseModel::forward_pair(const Image& a, const Image& b) const {
    return head_probability(embed(a), embed(b));
}

double SiameseModel::weight_l2() {
    double total = 0.0;
    for (const auto& group : params())
        if (group.regularized)
            for (double w : group.value->data) total += w * w;
    return total;
}

std::vector<ParamGroup> SiameseModel::params() {
    std::vector<ParamGroup> groups;
    for (auto& g : encoder_.params()) groups.push_back({"encoder." + g.name, g.regularized, g.value, g.grad});
    for (auto& g : head_.params()) groups.push_back({"head." + g.name, g.regularized, g.value, g.grad});
    return groups;
}

void SiameseModel::zero_grads() {
    encoder_.zero_grads();
    head_.zero_grads();
}

void SiameseModel::scale_grads(double factor) {
    encoder_.scale_grads(factor);
    head_.scale_grads(factor);
}

void SiameseModel::save(const std::string& path, const SgdConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ScfcError(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    out.write(kModelMagic, sizeof(kModelMagic));
    out.put(static_cast<char>(kPolaritySimilarity));
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(input_width_),
                                   static_cast<std::uint32_t>(input_height_)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(&l2_lambda_), sizeof(double));
    save_stack(out, encoder_, cfg);
    save_stack(out, head_, cfg);
    if (!out) throw ScfcError(ErrorCode::IoFailure, "write failed for " + path);
}

SiameseModel SiameseModel::load(const std::string& path, SgdConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScfcError(ErrorCode::IoFailure, "cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (in.gcount() != 8 || std::memcmp(magic, kModelMagic, 8) != 0)
        throw ScfcError(ErrorCode::BadMagic, path + " is not a model checkpoint");
    const int polarity = in.get();
    if (polarity != kPolaritySimilarity)
        throw ScfcError(ErrorCode::BadFormat, path + " carries an unknown probability polarity");

    SiameseModel model;
    std::uint32_t dims[2];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    in.read(reinterpret_cast<char*>(&model.l2_lambda_), sizeof(double));
    if (!in) throw ScfcError(ErrorCode::TruncatedFile, path + " ends inside the model header");
    model.input_width_ = dims[0];
    model.input_height_ = dims[1];
    load_stack(in, model.encoder_, cfg);
    SgdConfig head_cfg;
    load_stack(in, model.head_, head_cfg);
    return model;
}

// ---------------------------------------------------------------------------
// Loss and training
// ---------------------------------------------------------------------------

namespace {

double cross_entropy(double p, int y) {
    const double pc = std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    return -(y * std::log(pc) + (1 - y) * std::log(1.0 - pc));
}

// d(cross_entropy)/dp of the clamped loss; zero in the clamped flats.
double cross_entropy_grad(double p, int y) {
    if (p <= kProbabilityEpsilon || p >= 1.0 - kProbabilityEpsilon) return 0.0;
    return (p - y) / (p * (1.0 - p));
}

}  // namespace

double accumulate_pair_gradients(SiameseModel& model, const LabeledPair& pair) {
    if (!pair.first || !pair.second)
        throw ScfcError(ErrorCode::InvalidArgument, "labeled pair is missing an image");

    LayerStack& encoder = model.encoder();
    LayerStack& head = model.head();

    StackTape tape_a = encoder.make_tape();
    StackTape tape_b = encoder.make_tape();
    StackTape tape_h = head.make_tape();

    auto checked_tensor = [&](const Image& img) {
        if (img.width != model.input_width() || img.height != model.input_height())
            throw ScfcError(ErrorCode::ShapeMismatch,
                            "image " + img.id + " does not match the encoder input (resize upstream)");
        return img.to_tensor();
    };
    const Tensor e_a = encoder.forward(checked_tensor(*pair.first), tape_a);
    const Tensor e_b = encoder.forward(checked_tensor(*pair.second), tape_b);

    Tensor merged({SiameseModel::kEmbeddingDim});
    for (std::size_t i = 0; i < merged.size(); ++i) merged[i] = std::fabs(e_a[i] - e_b[i]);
    const double p = head.forward(merged, tape_h)[0];

    const double loss = cross_entropy(p, pair.y) + model.l2_lambda() * model.weight_l2();

    Tensor grad_p({1});
    grad_p[0] = cross_entropy_grad(p, pair.y);
    const Tensor grad_merged = head.backward(tape_h, grad_p);

    Tensor grad_a({SiameseModel::kEmbeddingDim});
    Tensor grad_b({SiameseModel::kEmbeddingDim});
    for (std::size_t i = 0; i < grad_merged.size(); ++i) {
        const double diff = e_a[i] - e_b[i];
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        grad_a[i] = grad_merged[i] * sign;
        grad_b[i] = -grad_a[i];
    }
    encoder.backward(tape_a, grad_a);
    encoder.backward(tape_b, grad_b);
    return loss;
}

double pair_loss(SiameseModel& model, const LabeledPair& pair) {
    model.zero_grads();
    const double loss = accumulate_pair_gradients(model, pair);
    for (auto& group : model.params())
        if (group.regularized)
            for (std::size_t i = 0; i < group.value->size(); ++i)
                group.grad->data[i] += 2.0 * model.l2_lambda() * group.value->data[i];
    return loss;
}

double train_minibatch(SiameseModel& model, const std::vector<LabeledPair>& pairs, const SgdConfig& cfg) {
    if (pairs.empty()) throw ScfcError(ErrorCode::EmptySet, "cannot train on an empty minibatch");
    model.zero_grads();
    double loss_sum = 0.0;
    for (const auto& pair : pairs) loss_sum += accumulate_pair_gradients(model, pair);
    model.scale_grads(1.0 / static_cast<double>(pairs.size()));
    sgd_step(model.encoder(), cfg);
    sgd_step(model.head(), cfg);
    return loss_sum / static_cast<double>(pairs.size());
}

}  // namespace scfc
