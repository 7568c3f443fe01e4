#pragma once

// Whitebox grid attack on the segmentation surrogate.
//
// Each g x g cell of the image owns a logit vector w over the K candidates.
// The attacked image is
//   S_ae(p) = sum_i softmax(w / tau)_i (S_i(p) - S_b(p)) + S_b*(p)
// and w is moved by plain gradient ascent on an untargeted flipping loss.
// Quantization picks the argmax candidate per cell, which maps back to a
// projector drive level.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "polatk/image.hpp"
#include "polatk/metrics.hpp"
#include "polatk/projector.hpp"
#include "polatk/scene.hpp"
#include "polatk/surrogate.hpp"

namespace polatk {

inline constexpr int kSupportedGrids[] = {8, 16, 32};
bool is_supported_grid(int g);

struct GridLayout {
  int grid = 8;
  int cells_x = 0;
  int cells_y = 0;

  static GridLayout for_dims(Dims dims, int grid);
  int cells() const { return cells_x * cells_y; }
  bool operator==(const GridLayout&) const = default;
};

struct AttackWeights {
  GridLayout layout;
  int k = 0;
  std::vector<double> w;  // [cell][k]

  static AttackWeights zeros(GridLayout layout, int k);
  double* cell(int c) { return w.data() + static_cast<std::size_t>(c) * k; }
  const double* cell(int c) const { return w.data() + static_cast<std::size_t>(c) * k; }
  bool operator==(const AttackWeights&) const = default;
};

/// softmax(w / tau) of one cell, shifted by the max for stability.
void softmax_coefficients(const double* w, int k, double tau, double* out);

struct EotConfig {
  bool enabled = false;
  double noise_sigma = 0.005;
  double blur_sigma = 1.0;
  double bg_scale_min = 0.9;
  double bg_scale_max = 1.1;
  int samples = 4;

  void validate() const;
};

struct AttackConfig {
  double tau = 0.2;
  double alpha = 10.0;
  int iters = 100;
  double lambda = 1.0;
  int grid = 8;
  EotConfig eot;
  std::uint64_t seed = 0;
  /// Evaluate EOT samples on worker threads; reduction order stays fixed.
  bool parallel = false;

  void validate() const;
};

/// Per-cell candidate index.
struct Perturbation {
  GridLayout layout;
  std::vector<int> index;
  bool operator==(const Perturbation&) const = default;
};

/// Difference basis D_i = S_i - S_b and the background added back.
struct ComposeBasis {
  std::vector<StokesImage> diffs;
  StokesImage background_star;
};

ComposeBasis make_basis(const CandidateSet& cs);
ComposeBasis make_basis(const CandidateSet& cs, const StokesImage& background_star);

StokesImage compose_adversarial(const AttackWeights& weights, const CandidateSet& cs, double tau,
                                const StokesImage& background_star);
StokesImage compose(const AttackWeights& weights, const ComposeBasis& basis, double tau);

/// dL/dw given dL/dS_ae.
AttackWeights compose_backward(const AttackWeights& weights, const ComposeBasis& basis, double tau,
                               const StokesImage& grad);

struct LossResult {
  double value = 0.0;
  double bce = 0.0;
  double flip = 0.0;
  std::vector<double> grad;  // dL/dpred
};

inline constexpr double kProbClamp = 1e-7;

/// L = BCE(pred, y) + lambda * L_E with the class-balanced term
///   L_E = -[mean_{y=0} log(1 - p) + mean_{y=1} log p],
/// probabilities clamped to [1e-7, 1 - 1e-7] (zero gradient where clamped).
/// Larger L means a more fooled model. An empty class drops its L_E term.
LossResult adversarial_loss(std::span<const double> pred, const Mask& y, double lambda);

/// Loss of the full chain weights -> compose -> features -> model -> loss,
/// and optionally its gradient w.r.t. the weights.
double attack_objective(const AttackWeights& weights, const ComposeBasis& basis, const SurrogateSegModel& model,
                        const Mask& y, double tau, double lambda, AttackWeights* grad = nullptr,
                        std::vector<double>* prob = nullptr);

/// A degraded view of a candidate set: every image passes through degrade()
/// and the background added back is scaled by r ~ U(bg_scale_min, bg_scale_max).
struct EotView {
  CandidateSet cs;
  StokesImage background_star;
  double scale = 1.0;
};

EotView eot_sample(const CandidateSet& cs, const EotConfig& config, std::uint64_t seed);

struct IterationRecord {
  int iteration = 0;
  double loss = 0.0;
  double iou = 0.0;
  double ber = 0.0;
};

struct AttackResult {
  std::vector<AttackWeights> weights;  // state at the start of each iteration, plus the final state
  std::vector<IterationRecord> records;
  bool aborted = false;  // non-finite loss
};

/// Gradient ascent from zero logits. IoU/BER per iteration are measured on the
/// undegraded soft composition.
AttackResult attack_optimize(const CandidateSet& cs, const SurrogateSegModel& model, const Mask& y,
                             const AttackConfig& config,
                             const std::function<void(const IterationRecord&)>& progress = {});

/// Per-cell argmax, ties to the lowest index.
Perturbation quantize(const AttackWeights& weights);

Perturbation random_perturbation(int k, GridLayout layout, std::uint64_t seed);

/// Shared drive level per pixel across channels.
ProjectionPattern expand_pattern(const Perturbation& p, const std::vector<int>& values, Dims dims);

/// Digital world: each cell copies its selected captured candidate.
StokesImage compose_quantized(const Perturbation& p, const CandidateSet& cs);

struct PhysicalOptions {
  bool degrade = false;
  double noise_sigma = 0.005;
  double blur_sigma = 1.0;
  double bg_scale_min = 0.9;
  double bg_scale_max = 1.1;
  std::uint64_t seed = 0;
};

/// Physical world: re-renders the pattern through projector and scene,
/// adds r * S_b and optionally degrades. With degrade off, r = 1.
StokesImage apply_physical(const Perturbation& p, const SceneModel& scene, const ProjectorModel& projector,
                           const CandidateSet& cs, const PhysicalOptions& options = {});

SegMetrics evaluate_stokes(const SurrogateSegModel& model, const StokesImage& s, const Mask& y);

}  // namespace polatk
