#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ptl/homography.hpp"
#include "ptl/image_tensor.hpp"
#include "ptl/pt_layer.hpp"
#include "ptl/sampling.hpp"

namespace ptl {

// p <- p - lr * g
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

struct AdamState {
    std::size_t step = 0;
    std::vector<double> m1;
    std::vector<double> m2;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam(std::size_t n, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Bias-corrected Adam update in place. Moment buffers are sized on first use.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct ImagePair {
    ImageTensor distorted;
    ImageTensor original;
};

struct TrainConfig {
    std::size_t epochs = 500;
    double lr = 1e-3;
    KernelSpec kernel = KernelSpec::bilinear();
    std::size_t layer_count = 2;
    std::uint64_t seed = 0;
    bool exact_identity_init = false;
    GradReduction reduction = GradReduction::mean;
    // Optimise in units where a unit step moves pixels by a comparable amount
    // for every parameter: translations scaled by L, projective terms by 1/L,
    // L = max(H, W).
    bool precondition = true;
    // When set, the report includes the corner reprojection error.
    std::optional<Homography> true_distortion;
};

/// Stack of single-TM PT layers applied in order: layers[0] sees the input.
struct RectifierModel {
    std::vector<PTLayer> layers;

    ImageTensor apply(const ImageTensor& input) const;
    // The sampling map of the whole stack, t_1 * t_2 * ... * t_L.
    Homography composite() const;
};

struct TrainReport {
    std::vector<double> loss_trace;  // MSE before each epoch's update
    double final_loss = 0.0;         // MSE after the last update
    Homography composite = Homography::identity();
    std::optional<double> corner_error;  // pixels
};

// Full-batch Adam on every TM parameter of a layer_count-deep stack.
std::pair<RectifierModel, TrainReport> train_rectifier(std::span<const ImagePair> pairs, const TrainConfig& config);

struct MultiviewReport {
    std::vector<double> loss_trace;
    double final_loss = 0.0;
};

// One layer with m_count TMs (identity jitter from config.seed), every output
// block regressed onto the original image.
std::pair<PTLayer, MultiviewReport> train_multiview(std::span<const ImagePair> pairs, const TrainConfig& config,
                                                    std::size_t m_count);

// Max distance between image corners and their image under `sampling_map`.
double corner_error(const Homography& sampling_map, std::size_t width, std::size_t height);

// "epoch,mse" header then one row per epoch.
std::string loss_trace_csv(std::span<const double> trace);

}  // namespace ptl
