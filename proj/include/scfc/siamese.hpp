#pragma once

#include <string>

#include "scfc/checkpoint.hpp"
#include "scfc/fewshot.hpp"
#include "scfc/image.hpp"
#include "scfc/layers.hpp"
#include "scfc/sgd.hpp"

namespace scfc {

// Pairwise similarity classifier: one shared convolutional encoder applied to
// both images, joined by an elementwise |e1 - e2| merge into a small dense
// head ending in a sigmoid. p is a similarity score: near 1 means same class.
// The merge makes forward_pair(a, b) == forward_pair(b, a) bit-exactly.
class SiameseModel {
  public:
    static constexpr std::size_t kEmbeddingDim = 32;

    // Encoder: conv 8@3x3 + relu + maxpool2x2, conv 16@3x3 + relu + maxpool2x2,
    // flatten, dense 64 + relu, dense 32 + relu. Head: dense 32 + relu,
    // dense 1, sigmoid. Weights are Glorot-uniform from `rng`.
    static SiameseModel build(std::size_t input_width, std::size_t input_height, double l2_lambda,
                              Rng& rng);

    std::size_t input_width() const { return input_width_; }
    std::size_t input_height() const { return input_height_; }
    double l2_lambda() const { return l2_lambda_; }
    void set_l2_lambda(double v) { l2_lambda_ = v; }

    LayerStack& encoder() { return encoder_; }
    LayerStack& head() { return head_; }

    // Read-only and reentrant; the E-step fans these out across workers.
    Tensor embed(const Image& img) const;
    double head_probability(const Tensor& e1, const Tensor& e2) const;
    double forward_pair(const Image& a, const Image& b) const;

    double weight_l2();
    std::vector<ParamGroup> params();
    void zero_grads();
    void scale_grads(double factor);

    void save(const std::string& path, const SgdConfig& cfg);
    static SiameseModel load(const std::string& path, SgdConfig& cfg);

  private:
    SiameseModel() = default;

    Tensor image_tensor(const Image& img) const;

    LayerStack encoder_;
    LayerStack head_;
    double l2_lambda_ = 0.0;
    std::size_t input_width_ = 0;
    std::size_t input_height_ = 0;
};

// Cross-entropy gradients for one pair, accumulated (+=) into the model's
// gradient buffers; returns the Eq-style loss value (clamped cross-entropy
// plus lambda * ||w||^2). Does not touch weights.
double accumulate_pair_gradients(SiameseModel& model, const LabeledPair& pair);

// Standalone loss+gradient evaluation: zeroes gradients first and includes
// the 2*lambda*w regularization term in the returned gradients, so they are
// the exact derivatives of the returned loss.
double pair_loss(SiameseModel& model, const LabeledPair& pair);

// One minibatch descent step on the mean pair gradient. L2 decay is applied
// exactly once, inside sgd_step. Returns the pre-step mean loss.
double train_minibatch(SiameseModel& model, const std::vector<LabeledPair>& pairs, const SgdConfig& cfg);

constexpr double kProbabilityEpsilon = 1e-7;  // loss-side clamp so log never sees 0

}  // namespace scfc
