#pragma once

// Differentiable glass-segmentation surrogate.
//
// Input features per color channel c (stacked feature-major, index f*C + c):
//   f0 = s0 / max(s0)   f1 = rho   f2 = rho cos 2phi = s1/s0   f3 = rho sin 2phi = s2/s0
// Network: standardize -> conv3x3(4C->12) -> tanh -> conv3x3(12->12) -> tanh
//          -> conv3x3(12->1) -> sigmoid, zero padding, stride 1.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "polatk/image.hpp"

namespace polatk {

struct FeatureStack {
  int width = 0;
  int height = 0;
  int count = 0;  // 4 * channels
  std::vector<double> data;  // count planes, row-major

  FeatureStack() = default;
  FeatureStack(int w, int h, int n) : width(w), height(h), count(n), data(static_cast<std::size_t>(w) * h * n, 0.0) {}
  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  std::span<double> plane(int f) { return {data.data() + f * pixels(), pixels()}; }
  std::span<const double> plane(int f) const { return {data.data() + f * pixels(), pixels()}; }
};

inline constexpr double kFeatureDarkS0 = 1e-12;

FeatureStack features_from_stokes(const StokesImage& stokes);

/// Chain rule through features_from_stokes: returns dL/dS given dL/dF.
StokesImage features_backward(const StokesImage& stokes, const FeatureStack& grad);

struct ConvLayer {
  int cin = 0;
  int cout = 0;
  std::vector<double> w;  // [cout][cin][3][3]
  std::vector<double> b;  // [cout]
  bool operator==(const ConvLayer&) const = default;
};

class SurrogateSegModel {
 public:
  static constexpr int kHidden = 12;

  SurrogateSegModel() = default;
  /// Zero weights, identity standardization.
  explicit SurrogateSegModel(int color_channels);

  int color_channels() const { return channels_; }
  int input_features() const { return 4 * channels_; }

  std::vector<double> mu;  // per input feature
  std::vector<double> sd;  // per input feature, > 0
  ConvLayer layers[3];

  /// Trainable parameters only (weights then bias, layer by layer).
  std::size_t parameter_count() const;
  std::vector<double> flatten_parameters() const;
  void assign_parameters(std::span<const double> p);

  /// Full serialized vector: mu, sd, then trainable parameters.
  std::vector<float> to_floats() const;
  static SurrogateSegModel from_floats(int color_channels, std::span<const float> v);

  void round_to_float();
  bool operator==(const SurrogateSegModel&) const = default;

 private:
  int channels_ = 0;
};

/// Intermediate activations kept for the backward pass.
struct SegTrace {
  int width = 0;
  int height = 0;
  std::vector<double> a0, a1, a2;  // padded planes: standardized input, hidden 1, hidden 2
  std::vector<double> prob;        // H*W
};

std::vector<double> seg_forward(const SurrogateSegModel& model, const FeatureStack& features, SegTrace* trace = nullptr);

/// Gradient of a scalar functional w.r.t. features, given upstream dL/dprob.
/// When `param_grad` is non-null it receives dL/dparameters in flatten order.
FeatureStack seg_grad(const SurrogateSegModel& model, const SegTrace& trace, std::span<const double> upstream,
                      std::vector<double>* param_grad = nullptr);

/// Same as seg_grad but starting from dL/dlogit.
FeatureStack seg_grad_logit(const SurrogateSegModel& model, const SegTrace& trace, std::span<const double> dlogit,
                            std::vector<double>* param_grad = nullptr);

struct TrainSample {
  FeatureStack features;
  Mask label;
};

struct TrainConfig {
  double learning_rate = 1.0;
  int max_iters = 150;
  /// Stop when the loss improved by less than this (relative) over `plateau_window` iterations.
  double plateau_tol = 1e-4;
  int plateau_window = 20;
  std::uint64_t seed = 0;
  /// Per-sample gradients on worker threads, reduced in fixed order.
  bool parallel = false;
  int threads = 0;  // 0 = hardware concurrency
  double sd_floor = 0.02;
};

struct TrainResult {
  SurrogateSegModel model;
  std::vector<double> loss_history;
  bool early_stopped = false;
};

/// Mean pixel-wise BCE over all samples, minimized by plain gradient descent.
/// Throws NumericError on a non-finite loss.
TrainResult seg_train(const std::vector<TrainSample>& samples, int color_channels, const TrainConfig& config,
                      const std::function<void(int, double)>& progress = {});

/// Mean BCE of the model on the samples (natural log).
double seg_bce(const SurrogateSegModel& model, const std::vector<TrainSample>& samples);

void save_model(const std::filesystem::path& dir, const SurrogateSegModel& model);
SurrogateSegModel load_model(const std::filesystem::path& dir);

}  // namespace polatk
