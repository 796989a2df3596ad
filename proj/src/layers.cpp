#include "scfc/layers.hpp"

#include <algorithm>
#include <cmath>

namespace scfc {

namespace {

void require_rank3(const std::vector<std::size_t>& shape, const char* who) {
    if (shape.size() != 3)
        throw ScfcError(ErrorCode::ShapeMismatch,
                        std::string(who) + " expects a {channels,height,width} input, got rank " +
                            std::to_string(shape.size()));
}

}  // namespace

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2x2: return "maxpool2x2";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Dense: return "dense";
        case LayerKind::Sigmoid: return "sigmoid";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Conv2d, valid padding
// ---------------------------------------------------------------------------

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t ksize, std::size_t stride)
    : weights({out_channels, in_channels, ksize, ksize}),
      bias({out_channels}),
      grad_weights({out_channels, in_channels, ksize, ksize}),
      grad_bias({out_channels}),
      in_channels_(in_channels),
      out_channels_(out_channels),
      ksize_(ksize),
      stride_(stride) {
    if (ksize == 0 || stride == 0)
        throw ScfcError(ErrorCode::InvalidArgument, "conv2d kernel size and stride must be positive");
}

std::vector<std::size_t> Conv2d::output_shape(const std::vector<std::size_t>& in) const {
    require_rank3(in, "conv2d");
    if (in[0] != in_channels_)
        throw ScfcError(ErrorCode::ShapeMismatch, "conv2d expects " + std::to_string(in_channels_) +
                                                      " input channels, got " + std::to_string(in[0]));
    if (in[1] < ksize_ || in[2] < ksize_)
        throw ScfcError(ErrorCode::ShapeMismatch, "conv2d kernel " + std::to_string(ksize_) +
                                                      " exceeds input " + std::to_string(in[1]) + "x" +
                                                      std::to_string(in[2]));
    return {out_channels_, (in[1] - ksize_) / stride_ + 1, (in[2] - ksize_) / stride_ + 1};
}

Tensor Conv2d::forward(const Tensor& in, LayerCache* cache) const {
    Tensor out(output_shape(in.shape));
    const std::size_t oh = out.shape[1], ow = out.shape[2];
    for (std::size_t oc = 0; oc < out_channels_; ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = bias[oc];
                for (std::size_t ic = 0; ic < in_channels_; ++ic) {
                    const double* wrow = &weights.data[((oc * in_channels_ + ic) * ksize_) * ksize_];
                    for (std::size_t ky = 0; ky < ksize_; ++ky) {
                        const double* irow = &in.data[(ic * in.shape[1] + oy * stride_ + ky) * in.shape[2] +
                                                      ox * stride_];
                        const double* wk = wrow + ky * ksize_;
                        for (std::size_t kx = 0; kx < ksize_; ++kx) acc += wk[kx] * irow[kx];
                    }
                }
                out.at3(oc, oy, ox) = acc;
            }
        }
    }
    if (cache) {
        cache->saved = in;
        cache->valid = true;
    }
    return out;
}

Tensor Conv2d::backward(const LayerCache& cache, const Tensor& grad_out) {
    if (!cache.valid) throw ScfcError(ErrorCode::NoForwardCache, "conv2d backward without prior forward");
    const Tensor& in = cache.saved;
    Tensor grad_in(in.shape);
    const std::size_t oh = grad_out.shape[1], ow = grad_out.shape[2];
    for (std::size_t oc = 0; oc < out_channels_; ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double g = grad_out.at3(oc, oy, ox);
                grad_bias[oc] += g;
                for (std::size_t ic = 0; ic < in_channels_; ++ic) {
                    double* gwrow = &grad_weights.data[((oc * in_channels_ + ic) * ksize_) * ksize_];
                    const double* wrow = &weights.data[((oc * in_channels_ + ic) * ksize_) * ksize_];
                    for (std::size_t ky = 0; ky < ksize_; ++ky) {
                        const std::size_t iy = oy * stride_ + ky;
                        const double* irow = &in.data[(ic * in.shape[1] + iy) * in.shape[2] + ox * stride_];
                        double* girow = &grad_in.data[(ic * in.shape[1] + iy) * in.shape[2] + ox * stride_];
                        double* gwk = gwrow + ky * ksize_;
                        const double* wk = wrow + ky * ksize_;
                        for (std::size_t kx = 0; kx < ksize_; ++kx) {
                            gwk[kx] += g * irow[kx];
                            girow[kx] += g * wk[kx];
                        }
                    }
                }
            }
        }
    }
    return grad_in;
}

void Conv2d::collect_params(std::vector<ParamGroup>& out, const std::string& prefix) {
    out.push_back({prefix + ".weights", true, &weights, &grad_weights});
    out.push_back({prefix + ".bias", false, &bias, &grad_bias});
}

void Conv2d::zero_grads() {
    grad_weights.fill(0.0);
    grad_bias.fill(0.0);
}

void Conv2d::init_weights(Rng& rng) {
    const double fan_in = static_cast<double>(in_channels_ * ksize_ * ksize_);
    const double fan_out = static_cast<double>(out_channels_ * ksize_ * ksize_);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : weights.data) w = rng.uniform(-bound, bound);
    bias.fill(0.0);
}

// ---------------------------------------------------------------------------
// Relu
// ---------------------------------------------------------------------------

Tensor Relu::forward(const Tensor& in, LayerCache* cache) const {
    Tensor out = in;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    if (cache) {
        cache->saved = in;
        cache->valid = true;
    }
    return out;
}

Tensor Relu::backward(const LayerCache& cache, const Tensor& grad_out) {
    if (!cache.valid) throw ScfcError(ErrorCode::NoForwardCache, "relu backward without prior forward");
    Tensor grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.size(); ++i)
        if (cache.saved[i] <= 0.0) grad_in[i] = 0.0;
    return grad_in;
}

// ---------------------------------------------------------------------------
// MaxPool2x2, stride 2; odd trailing row/column is dropped
// ---------------------------------------------------------------------------

std::vector<std::size_t> MaxPool2x2::output_shape(const std::vector<std::size_t>& in) const {
    require_rank3(in, "maxpool2x2");
    if (in[1] < 2 || in[2] < 2)
        throw ScfcError(ErrorCode::ShapeMismatch, "maxpool2x2 needs at least 2x2 spatial input");
    return {in[0], in[1] / 2, in[2] / 2};
}

Tensor MaxPool2x2::forward(const Tensor& in, LayerCache* cache) const {
    Tensor out(output_shape(in.shape));
    std::vector<std::size_t> argmax(out.size());
    const std::size_t oh = out.shape[1], ow = out.shape[2];
    for (std::size_t c = 0; c < out.shape[0]; ++c) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::size_t best_idx = (c * in.shape[1] + 2 * oy) * in.shape[2] + 2 * ox;
                double best = in.data[best_idx];
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = (c * in.shape[1] + 2 * oy + dy) * in.shape[2] + 2 * ox + dx;
                        if (in.data[idx] > best) {  // first max wins on ties
                            best = in.data[idx];
                            best_idx = idx;
                        }
                    }
                }
                const std::size_t o = (c * oh + oy) * ow + ox;
                out.data[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
    if (cache) {
        cache->saved = Tensor(in.shape);  // only the shape is needed on the way back
        cache->indices = std::move(argmax);
        cache->valid = true;
    }
    return out;
}

Tensor MaxPool2x2::backward(const LayerCache& cache, const Tensor& grad_out) {
    if (!cache.valid) throw ScfcError(ErrorCode::NoForwardCache, "maxpool2x2 backward without prior forward");
    Tensor grad_in(cache.saved.shape);
    for (std::size_t o = 0; o < grad_out.size(); ++o) grad_in.data[cache.indices[o]] += grad_out.data[o];
    return grad_in;
}

// ---------------------------------------------------------------------------
// Flatten
// ---------------------------------------------------------------------------

std::vector<std::size_t> Flatten::output_shape(const std::vector<std::size_t>& in) const {
    return {Tensor::element_count(in)};
}

Tensor Flatten::forward(const Tensor& in, LayerCache* cache) const {
    Tensor out({in.size()}, in.data);
    if (cache) {
        cache->saved = Tensor(in.shape);
        cache->valid = true;
    }
    return out;
}

Tensor Flatten::backward(const LayerCache& cache, const Tensor& grad_out) {
    if (!cache.valid) throw ScfcError(ErrorCode::NoForwardCache, "flatten backward without prior forward");
    return Tensor(cache.saved.shape, grad_out.data);
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

Dense::Dense(std::size_t in_features, std::size_t out_features)
    : weights({out_features, in_features}),
      bias({out_features}),
      grad_weights({out_features, in_features}),
      grad_bias({out_features}),
      in_features_(in_features),
      out_features_(out_features) {}

std::vector<std::size_t> Dense::output_shape(const std::vector<std::size_t>& in) const {
    if (in.size() != 1 || in[0] != in_features_)
        throw ScfcError(ErrorCode::ShapeMismatch,
                        "dense expects a flat {" + std::to_string(in_features_) + "} input");
    return {out_features_};
}

Tensor Dense::forward(const Tensor& in, LayerCache* cache) const {
    Tensor out(output_shape(in.shape));
    for (std::size_t o = 0; o < out_features_; ++o) {
        const double* wrow = &weights.data[o * in_features_];
        double acc = bias[o];
        for (std::size_t i = 0; i < in_features_; ++i) acc += wrow[i] * in[i];
        out[o] = acc;
    }
    if (cache) {
        cache->saved = in;
        cache->valid = true;
    }
    return out;
}

Tensor Dense::backward(const LayerCache& cache, const Tensor& grad_out) {
    if (!cache.valid) throw ScfcError(ErrorCode::NoForwardCache, "dense backward without prior forward");
    const Tensor& in = cache.saved;
    Tensor grad_in(in.shape);
    for (std::size_t o = 0; o < out_features_; ++o) {
        const double g = grad_out[o];
        grad_bias[o] += g;
        double* gwrow = &grad_weights.data[o * in_features_];
        const double* wrow = &weights.data[o * in_features_];
        for (std::size_t i = 0; i < in_features_; ++i) {
            gwrow[i] += g * in[i];
            grad_in[i] += g * wrow[i];
        }
    }
    return grad_in;
}

void Dense::collect_params(std::vector<ParamGroup>& out, const std::string& prefix) {
    out.push_back({prefix + ".weights", true, &weights, &grad_weights});
    out.push_back({prefix + ".bias", false, &bias, &grad_bias});
}

void Dense::zero_grads() {
    grad_weights.fill(0.0);
    grad_bias.fill(0.0);
}

void Dense::init_weights(Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in_features_ + out_features_));
    for (double& w : weights.data) w = rng.uniform(-bound, bound);
    bias.fill(0.0);
}

// ---------------------------------------------------------------------------
// Sigmoid
// ---------------------------------------------------------------------------

Tensor Sigmoid::forward(const Tensor& in, LayerCache* cache) const {
    Tensor out = in;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    if (cache) {
        cache->saved = out;
        cache->valid = true;
    }
    return out;
}

Tensor Sigmoid::backward(const LayerCache& cache, const Tensor& grad_out) {
    if (!cache.valid) throw ScfcError(ErrorCode::NoForwardCache, "sigmoid backward without prior forward");
    Tensor grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.size(); ++i) {
        const double p = cache.saved[i];
        grad_in[i] *= p * (1.0 - p);
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// LayerStack
// ---------------------------------------------------------------------------

void LayerStack::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

std::vector<std::size_t> LayerStack::output_shape() const {
    std::vector<std::size_t> shape = input_shape_;
    for (const auto& layer : layers_) shape = layer->output_shape(shape);
    return shape;
}

StackTape LayerStack::make_tape() const {
    StackTape tape;
    tape.slots.resize(layers_.size());
    return tape;
}

void LayerStack::check_input(const Tensor& input) const {
    if (!input_shape_.empty() && input.shape != input_shape_)
        throw ScfcError(ErrorCode::ShapeMismatch, "stack expects input " +
                                                      Tensor(input_shape_).shape_string() + ", got " +
                                                      input.shape_string());
}

Tensor LayerStack::forward(const Tensor& input) const {
    check_input(input);
    Tensor x = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        try {
            x = layers_[i]->forward(x, nullptr);
        } catch (const ScfcError& e) {
            throw ScfcError(e.code(), "layer " + std::to_string(i) + " (" +
                                          layer_kind_name(layers_[i]->kind()) + "): " + e.what());
        }
    }
    if (!x.all_finite())
        throw ScfcError(ErrorCode::NonFiniteValue, "stack forward produced a non-finite activation");
    return x;
}

Tensor LayerStack::forward(const Tensor& input, StackTape& tape) const {
    check_input(input);
    if (tape.slots.size() != layers_.size()) tape.slots.resize(layers_.size());
    Tensor x = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        try {
            x = layers_[i]->forward(x, &tape.slots[i]);
        } catch (const ScfcError& e) {
            throw ScfcError(e.code(), "layer " + std::to_string(i) + " (" +
                                          layer_kind_name(layers_[i]->kind()) + "): " + e.what());
        }
    }
    tape.valid = true;
    if (!x.all_finite())
        throw ScfcError(ErrorCode::NonFiniteValue, "stack forward produced a non-finite activation");
    return x;
}

Tensor LayerStack::forward_train(const Tensor& input) {
    internal_tape_ = make_tape();
    return forward(input, internal_tape_);
}

Tensor LayerStack::backward(const Tensor& grad_out) {
    if (!internal_tape_.valid)
        throw ScfcError(ErrorCode::NoForwardCache,
                        "backward requires a forward pass since the last weight update");
    return backward(internal_tape_, grad_out);
}

Tensor LayerStack::backward(const StackTape& tape, const Tensor& grad_out) {
    if (!tape.valid)
        throw ScfcError(ErrorCode::NoForwardCache,
                        "backward requires a forward pass since the last weight update");
    Tensor g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        try {
            g = layers_[i]->backward(tape.slots[i], g);
        } catch (const ScfcError& e) {
            throw ScfcError(e.code(), "layer " + std::to_string(i) + " (" +
                                          layer_kind_name(layers_[i]->kind()) + "): " + e.what());
        }
    }
    if (!g.all_finite())
        throw ScfcError(ErrorCode::NonFiniteValue, "stack backward produced a non-finite gradient");
    return g;
}

std::vector<ParamGroup> LayerStack::params() {
    std::vector<ParamGroup> groups;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        layers_[i]->collect_params(groups, "layer" + std::to_string(i) + "." +
                                               layer_kind_name(layers_[i]->kind()));
    return groups;
}

void LayerStack::zero_grads() {
    for (auto& layer : layers_) layer->zero_grads();
}

void LayerStack::scale_grads(double factor) {
    for (auto& group : params())
        for (double& g : group.grad->data) g *= factor;
}

void LayerStack::init_weights(Rng& rng) {
    for (auto& layer : layers_) layer->init_weights(rng);
}

std::size_t LayerStack::param_count() {
    std::size_t n = 0;
    for (auto& group : params()) n += group.value->size();
    return n;
}

}  // namespace scfc
