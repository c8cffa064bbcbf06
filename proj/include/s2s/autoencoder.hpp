#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <utility>
#include <vector>

#include "s2s/embedding.hpp"
#include "s2s/silhouette.hpp"

namespace s2s {

struct AeConfig {
  int resolution = 512;  // square input, divisible by 32 (five 2x poolings)
  int channels = 32;     // filters per conv layer
};

struct TrainConfig {
  int batch_size = 32;
  int epochs = 50;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

/// Mean over pixels of -[q log p + (1-q) log(1-p)] with p clamped to
/// [1e-7, 1 - 1e-7]. Minimized, non-negative.
double bce_loss(const GrayImage& prediction, const Silhouette& target);

/// |a - b| / max(|a| + |b|, 1e-4): the gradient-check comparison metric.
/// Zero for identical values.
double relative_discrepancy(double a, double b);

/// Convolutional autoencoder: five 3x3 conv + batch-norm + leaky-ReLU +
/// 2x2 max-pool encoder stages, a fully connected projection to the 256-d
/// latent, then five nearest-neighbor-upsample + conv + batch-norm + ReLU
/// decoder stages and a sigmoid 1x1 conv head. Double precision throughout;
/// gradients are hand-derived reverse mode.
class Autoencoder {
 public:
  Autoencoder(const AeConfig& config, std::uint64_t seed);
  ~Autoencoder();
  Autoencoder(Autoencoder&&) noexcept;
  Autoencoder& operator=(Autoencoder&&) noexcept;

  const AeConfig& config() const;
  std::size_t parameter_count() const;

  /// Inference mode (batch-norm running statistics); reentrant.
  EmbeddingVector encode(const Silhouette& image) const;
  std::vector<EmbeddingVector> encode_batch(const std::vector<Silhouette>& images) const;
  GrayImage decode(const EmbeddingVector& z) const;

  /// Two-view reconstruction objective: BCE(front) + BCE(side) through one
  /// shared autoencoder, evaluated with batch statistics.
  double pair_loss(const SilhouettePair& pair);

  /// The two BCE terms of pair_loss, (front, side).
  std::pair<double, double> view_losses(const SilhouettePair& pair);

  /// Analytic d(pair_loss)/d(final-layer bias): sum over views of mean(p - q).
  double head_bias_gradient(const SilhouettePair& pair);

  /// Adam with bias correction; returns per-epoch mean losses. Bit-for-bit
  /// reproducible for a fixed seed. Aborts on NaN naming the epoch/batch.
  std::vector<double> train(const std::vector<SilhouettePair>& dataset, const TrainConfig& cfg);

  /// Max relative discrepancy between analytic and central finite-difference
  /// gradients of pair_loss over `samples` randomly drawn parameters.
  double max_grad_discrepancy(const SilhouettePair& pair, int samples, std::uint64_t seed,
                              double step = 1e-4);

  /// Checkpoint: magic S2SAE01, resolution, layer count, float32 tensors in
  /// declaration order.
  void save(const std::filesystem::path& path) const;
  static Autoencoder load(const std::filesystem::path& path);

 private:
  struct Net;
  explicit Autoencoder(std::unique_ptr<Net> net);
  std::unique_ptr<Net> net_;
};

/// Fresh parameters (seeded from cfg.seed) plus a training run.
std::pair<Autoencoder, std::vector<double>> train_autoencoder(
    const std::vector<SilhouettePair>& dataset, const AeConfig& acfg, const TrainConfig& tcfg);

}  // namespace s2s
