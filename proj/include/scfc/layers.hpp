#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scfc/rng.hpp"
#include "scfc/tensor.hpp"

namespace scfc {

enum class LayerKind : std::uint8_t {
    Conv2d = 1,
    Relu = 2,
    MaxPool2x2 = 3,
    Flatten = 4,
    Dense = 5,
    Sigmoid = 6,
};

const char* layer_kind_name(LayerKind kind);

// Per-call activation cache. Layers decide what goes in; a tape of these is
// what makes forward reentrant (two siamese passes can be in flight on the
// same weights before either backward runs).
struct LayerCache {
    Tensor saved;
    std::vector<std::size_t> indices;  // argmax routing for maxpool
    bool valid = false;
};

struct StackTape {
    std::vector<LayerCache> slots;
    bool valid = false;
};

// One mutable weight group (weights or biases of one layer). Biases are
// exempt from L2 decay.
struct ParamGroup {
    std::string name;
    bool regularized = false;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
};

class Layer {
  public:
    virtual ~Layer() = default;
    virtual LayerKind kind() const = 0;
    virtual std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const = 0;
    // cache may be null for inference-only calls.
    virtual Tensor forward(const Tensor& in, LayerCache* cache) const = 0;
    // Accumulates parameter gradients (+=) and returns the input gradient.
    virtual Tensor backward(const LayerCache& cache, const Tensor& grad_out) = 0;
    virtual void collect_params(std::vector<ParamGroup>& /*out*/, const std::string& /*prefix*/) {}
    virtual void zero_grads() {}
    virtual void init_weights(Rng& /*rng*/) {}
};

class Conv2d final : public Layer {
  public:
    Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t ksize, std::size_t stride = 1);

    LayerKind kind() const override { return LayerKind::Conv2d; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override;
    Tensor forward(const Tensor& in, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out) override;
    void collect_params(std::vector<ParamGroup>& out, const std::string& prefix) override;
    void zero_grads() override;
    void init_weights(Rng& rng) override;

    std::size_t in_channels() const { return in_channels_; }
    std::size_t out_channels() const { return out_channels_; }
    std::size_t ksize() const { return ksize_; }
    std::size_t stride() const { return stride_; }

    Tensor weights;  // {out, in, k, k}
    Tensor bias;     // {out}
    Tensor grad_weights;
    Tensor grad_bias;

  private:
    std::size_t in_channels_, out_channels_, ksize_, stride_;
};

class Relu final : public Layer {
  public:
    LayerKind kind() const override { return LayerKind::Relu; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return in; }
    Tensor forward(const Tensor& in, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out) override;
};

class MaxPool2x2 final : public Layer {
  public:
    LayerKind kind() const override { return LayerKind::MaxPool2x2; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override;
    Tensor forward(const Tensor& in, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out) override;
};

class Flatten final : public Layer {
  public:
    LayerKind kind() const override { return LayerKind::Flatten; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override;
    Tensor forward(const Tensor& in, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out) override;
};

class Dense final : public Layer {
  public:
    Dense(std::size_t in_features, std::size_t out_features);

    LayerKind kind() const override { return LayerKind::Dense; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override;
    Tensor forward(const Tensor& in, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out) override;
    void collect_params(std::vector<ParamGroup>& out, const std::string& prefix) override;
    void zero_grads() override;
    void init_weights(Rng& rng) override;

    std::size_t in_features() const { return in_features_; }
    std::size_t out_features() const { return out_features_; }

    Tensor weights;  // {out, in}
    Tensor bias;     // {out}
    Tensor grad_weights;
    Tensor grad_bias;

  private:
    std::size_t in_features_, out_features_;
};

class Sigmoid final : public Layer {
  public:
    LayerKind kind() const override { return LayerKind::Sigmoid; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return in; }
    Tensor forward(const Tensor& in, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out) override;
};

// Ordered layer pipeline with shape validation at construction time.
// forward() is const and reentrant; backward/sgd need exclusive access.
class LayerStack {
  public:
    LayerStack() = default;
    LayerStack(const LayerStack&) = delete;
    LayerStack& operator=(const LayerStack&) = delete;
    LayerStack(LayerStack&&) = default;
    LayerStack& operator=(LayerStack&&) = default;

    void set_input_shape(std::vector<std::size_t> shape) { input_shape_ = std::move(shape); }
    const std::vector<std::size_t>& input_shape() const { return input_shape_; }
    std::vector<std::size_t> output_shape() const;

    void add(std::unique_ptr<Layer> layer);
    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

    StackTape make_tape() const;

    Tensor forward(const Tensor& input) const;
    Tensor forward(const Tensor& input, StackTape& tape) const;
    // Convenience single-tape flow: forward_train caches inside the stack,
    // backward consumes that cache. A weight update invalidates it.
    Tensor forward_train(const Tensor& input);
    Tensor backward(const Tensor& grad_out);
    Tensor backward(const StackTape& tape, const Tensor& grad_out);

    std::vector<ParamGroup> params();
    void zero_grads();
    void scale_grads(double factor);
    void init_weights(Rng& rng);
    std::size_t param_count();

    void invalidate_internal_tape() { internal_tape_.valid = false; }

  private:
    void check_input(const Tensor& input) const;

    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<std::size_t> input_shape_;
    StackTape internal_tape_;
};

}  // namespace scfc
