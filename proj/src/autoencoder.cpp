#include "s2s/autoencoder.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include "s2s/io_util.hpp"
#include "s2s/rng.hpp"

namespace s2s {

namespace {

using Matrix = Eigen::MatrixXd;  // feature maps: channels x (H*W), col-major
using Batch = std::vector<Matrix>;

constexpr double kLeakySlope = 0.01;  // encoder activations; decoder uses plain ReLU
constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
constexpr double kBceEps = 1e-7;
constexpr int kStages = 5;

struct Param {
  Matrix value, grad, adam_m, adam_v;
  std::vector<int> dims;  // logical tensor shape for the checkpoint

  void init(Eigen::Index rows, Eigen::Index cols, std::vector<int> shape) {
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
    adam_m.setZero(rows, cols);
    adam_v.setZero(rows, cols);
    dims = std::move(shape);
  }
};

// ---- spatial primitives ----------------------------------------------------

void im2col(const Matrix& x, int H, int W, int k, Matrix& cols) {
  const int C = static_cast<int>(x.rows());
  cols.setZero(static_cast<Eigen::Index>(C) * k * k, static_cast<Eigen::Index>(H) * W);
  const int half = k / 2;
  for (int c = 0; c < C; ++c) {
    for (int ky = -half; ky <= half; ++ky) {
      for (int kx = -half; kx <= half; ++kx) {
        const int r = c * k * k + (ky + half) * k + (kx + half);
        const int x0 = std::max(0, -kx), x1 = std::min(W, W - kx);
        if (x1 <= x0) continue;
        for (int y = 0; y < H; ++y) {
          const int yy = y + ky;
          if (yy < 0 || yy >= H) continue;
          cols.row(r).segment(static_cast<Eigen::Index>(y) * W + x0, x1 - x0) =
              x.row(c).segment(static_cast<Eigen::Index>(yy) * W + x0 + kx, x1 - x0);
        }
      }
    }
  }
}

void col2im_add(const Matrix& cols, int H, int W, int k, Matrix& dx) {
  const int C = static_cast<int>(dx.rows());
  const int half = k / 2;
  for (int c = 0; c < C; ++c) {
    for (int ky = -half; ky <= half; ++ky) {
      for (int kx = -half; kx <= half; ++kx) {
        const int r = c * k * k + (ky + half) * k + (kx + half);
        const int x0 = std::max(0, -kx), x1 = std::min(W, W - kx);
        if (x1 <= x0) continue;
        for (int y = 0; y < H; ++y) {
          const int yy = y + ky;
          if (yy < 0 || yy >= H) continue;
          dx.row(c).segment(static_cast<Eigen::Index>(yy) * W + x0 + kx, x1 - x0) +=
              cols.row(r).segment(static_cast<Eigen::Index>(y) * W + x0, x1 - x0);
        }
      }
    }
  }
}

// ---- layers ----------------------------------------------------------------

struct Conv {
  int in_ch = 0, out_ch = 0, ksize = 3, H = 0, W = 0;
  Param weight;  // out_ch x (in_ch * k^2)
  Param bias;    // out_ch x 1

  void configure(int in, int out, int k, int h, int w) {
    in_ch = in, out_ch = out, ksize = k, H = h, W = w;
    weight.init(out, static_cast<Eigen::Index>(in) * k * k, {out, in, k, k});
    bias.init(out, 1, {out});
  }

  void apply(const Batch& in, Batch& out, Batch* x_cache) const {
    out.resize(in.size());
    Matrix cols;
    for (std::size_t s = 0; s < in.size(); ++s) {
      if (ksize == 1) {
        out[s].noalias() = weight.value * in[s];
      } else {
        im2col(in[s], H, W, ksize, cols);
        out[s].noalias() = weight.value * cols;
      }
      out[s].colwise() += bias.value.col(0);
    }
    if (x_cache) *x_cache = in;
  }

  void backward(const Batch& x_cache, const Batch& dy, Batch& dx) {
    dx.resize(dy.size());
    Matrix cols, dcols;
    for (std::size_t s = 0; s < dy.size(); ++s) {
      if (ksize == 1) {
        weight.grad.noalias() += dy[s] * x_cache[s].transpose();
        dx[s].noalias() = weight.value.transpose() * dy[s];
      } else {
        im2col(x_cache[s], H, W, ksize, cols);
        weight.grad.noalias() += dy[s] * cols.transpose();
        dcols.noalias() = weight.value.transpose() * dy[s];
        dx[s].setZero(in_ch, static_cast<Eigen::Index>(H) * W);
        col2im_add(dcols, H, W, ksize, dx[s]);
      }
      bias.grad.col(0) += dy[s].rowwise().sum();
    }
  }
};

struct BnCache {
  Batch xhat;
  Eigen::ArrayXd inv_std;
};

struct BatchNorm {
  int channels = 0;
  Param gamma, beta;  // channels x 1
  Eigen::VectorXd running_mean, running_var;

  void configure(int c) {
    channels = c;
    gamma.init(c, 1, {c});
    gamma.value.setOnes();
    beta.init(c, 1, {c});
    running_mean.setZero(c);
    running_var.setOnes(c);
  }

  void apply_infer(Batch& x) const {
    const Eigen::ArrayXd scale =
        gamma.value.col(0).array() / (running_var.array() + kBnEps).sqrt();
    const Eigen::VectorXd shift =
        (beta.value.col(0).array() - running_mean.array() * scale).matrix();
    for (Matrix& m : x) {
      m.array().colwise() *= scale;
      m.colwise() += shift;
    }
  }

  // Batch statistics (biased variance); optional cache and running update.
  void apply_batch(Batch& x, BnCache* cache, bool update_running) {
    const double count = static_cast<double>(x.size()) * static_cast<double>(x[0].cols());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(channels);
    for (const Matrix& m : x) mean += m.rowwise().sum();
    mean /= count;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(channels);
    for (Matrix& m : x) {
      m.colwise() -= mean;
      var += m.array().square().matrix().rowwise().sum();
    }
    var /= count;
    const Eigen::ArrayXd inv_std = (var.array() + kBnEps).rsqrt();
    if (cache) {
      cache->inv_std = inv_std;
      cache->xhat.resize(x.size());
    }
    for (std::size_t s = 0; s < x.size(); ++s) {
      x[s].array().colwise() *= inv_std;
      if (cache) cache->xhat[s] = x[s];
      x[s].array().colwise() *= gamma.value.col(0).array();
      x[s].colwise() += beta.value.col(0);
    }
    if (update_running) {
      running_mean = (1.0 - kBnMomentum) * running_mean + kBnMomentum * mean;
      running_var = (1.0 - kBnMomentum) * running_var + kBnMomentum * var;
    }
  }

  // dy -> dx in place.
  void backward(Batch& dy, const BnCache& cache) {
    const double count = static_cast<double>(dy.size()) * static_cast<double>(dy[0].cols());
    Eigen::VectorXd sum_dxhat = Eigen::VectorXd::Zero(channels);
    Eigen::VectorXd sum_dxhat_xhat = Eigen::VectorXd::Zero(channels);
    for (std::size_t s = 0; s < dy.size(); ++s) {
      gamma.grad.col(0) += dy[s].cwiseProduct(cache.xhat[s]).rowwise().sum();
      beta.grad.col(0) += dy[s].rowwise().sum();
      dy[s].array().colwise() *= gamma.value.col(0).array();  // dy is now dxhat
      sum_dxhat += dy[s].rowwise().sum();
      sum_dxhat_xhat += dy[s].cwiseProduct(cache.xhat[s]).rowwise().sum();
    }
    const Eigen::VectorXd m1 = sum_dxhat / count;
    const Eigen::ArrayXd m2 = sum_dxhat_xhat.array() / count;
    for (std::size_t s = 0; s < dy.size(); ++s) {
      dy[s].colwise() -= m1;
      dy[s].array() -= cache.xhat[s].array().colwise() * m2;
      dy[s].array().colwise() *= cache.inv_std;
    }
  }
};

// Derivative factor is 1 above zero and `slope` below; cached for backward.
void act_forward(Batch& x, double slope, Batch* factor_cache) {
  if (factor_cache) factor_cache->resize(x.size());
  for (std::size_t s = 0; s < x.size(); ++s) {
    if (factor_cache) {
      Matrix f = x[s].unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
      x[s] = x[s].cwiseProduct(f);
      (*factor_cache)[s] = std::move(f);
    } else {
      x[s] = x[s].cwiseMax(slope * x[s]);
    }
  }
}

void act_backward(Batch& dy, const Batch& factor_cache) {
  for (std::size_t s = 0; s < dy.size(); ++s) dy[s] = dy[s].cwiseProduct(factor_cache[s]);
}

struct PoolCache {
  std::vector<Eigen::MatrixXi> argmax;  // linear input pixel index per output pixel
};

struct MaxPool {
  int channels = 0, H = 0, W = 0;  // input dims

  void configure(int c, int h, int w) { channels = c, H = h, W = w; }

  void apply(const Batch& in, Batch& out, PoolCache* cache) const {
    const int oh = H / 2, ow = W / 2;
    out.resize(in.size());
    if (cache) cache->argmax.resize(in.size());
    for (std::size_t s = 0; s < in.size(); ++s) {
      out[s].resize(channels, static_cast<Eigen::Index>(oh) * ow);
      if (cache) cache->argmax[s].resize(channels, static_cast<Eigen::Index>(oh) * ow);
      const Matrix& x = in[s];
      for (int c = 0; c < channels; ++c) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            const int base = 2 * oy * W + 2 * ox;
            const int cand[4] = {base, base + 1, base + W, base + W + 1};
            int best = cand[0];
            double best_v = x(c, cand[0]);
            for (int i = 1; i < 4; ++i) {
              if (x(c, cand[i]) > best_v) {
                best_v = x(c, cand[i]);
                best = cand[i];
              }
            }
            out[s](c, oy * ow + ox) = best_v;
            if (cache) cache->argmax[s](c, oy * ow + ox) = best;
          }
        }
      }
    }
  }

  void backward(const Batch& dy, const PoolCache& cache, Batch& dx) const {
    const int oh = H / 2, ow = W / 2;
    dx.resize(dy.size());
    for (std::size_t s = 0; s < dy.size(); ++s) {
      dx[s].setZero(channels, static_cast<Eigen::Index>(H) * W);
      for (int c = 0; c < channels; ++c) {
        for (int p = 0; p < oh * ow; ++p) {
          dx[s](c, cache.argmax[s](c, p)) += dy[s](c, p);
        }
      }
    }
  }
};

struct Upsample {
  int channels = 0, H = 0, W = 0;  // input dims; output is 2H x 2W

  void configure(int c, int h, int w) { channels = c, H = h, W = w; }

  void apply(const Batch& in, Batch& out) const {
    const int ow = 2 * W;
    out.resize(in.size());
    for (std::size_t s = 0; s < in.size(); ++s) {
      out[s].resize(channels, static_cast<Eigen::Index>(2 * H) * ow);
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          const auto v = in[s].col(y * W + x);
          out[s].col((2 * y) * ow + 2 * x) = v;
          out[s].col((2 * y) * ow + 2 * x + 1) = v;
          out[s].col((2 * y + 1) * ow + 2 * x) = v;
          out[s].col((2 * y + 1) * ow + 2 * x + 1) = v;
        }
      }
    }
  }

  void backward(const Batch& dy, Batch& dx) const {
    const int ow = 2 * W;
    dx.resize(dy.size());
    for (std::size_t s = 0; s < dy.size(); ++s) {
      dx[s].resize(channels, static_cast<Eigen::Index>(H) * W);
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          dx[s].col(y * W + x) = dy[s].col((2 * y) * ow + 2 * x) +
                                 dy[s].col((2 * y) * ow + 2 * x + 1) +
                                 dy[s].col((2 * y + 1) * ow + 2 * x) +
                                 dy[s].col((2 * y + 1) * ow + 2 * x + 1);
        }
      }
    }
  }
};

struct Dense {
  int in_dim = 0, out_dim = 0;
  Param weight;  // out x in
  Param bias;    // out x 1

  void configure(int in, int out) {
    in_dim = in, out_dim = out;
    weight.init(out, in, {out, in});
    bias.init(out, 1, {out});
  }

  // Samples are columns: x is in_dim x N, result out_dim x N.
  Matrix apply(const Matrix& x, Matrix* x_cache) const {
    if (x_cache) *x_cache = x;
    Matrix y = weight.value * x;
    y.colwise() += bias.value.col(0);
    return y;
  }

  Matrix backward(const Matrix& x_cache, const Matrix& dy) {
    weight.grad.noalias() += dy * x_cache.transpose();
    bias.grad.col(0) += dy.rowwise().sum();
    return weight.value.transpose() * dy;
  }
};

double bce_mean(const Matrix& p, const Matrix& q) {
  const auto pc = p.array().min(1.0 - kBceEps).max(kBceEps);
  return -(q.array() * pc.log() + (1.0 - q.array()) * (1.0 - pc).log()).mean();
}

Matrix silhouette_to_map(const Silhouette& s) {
  Matrix m(1, static_cast<Eigen::Index>(s.width) * s.height);
  for (Eigen::Index i = 0; i < m.cols(); ++i) m(0, i) = s.pixels[i] ? 1.0 : 0.0;
  return m;
}

}  // namespace

double bce_loss(const GrayImage& prediction, const Silhouette& target) {
  if (prediction.width != target.width || prediction.height != target.height) {
    throw std::invalid_argument("bce_loss: dimension mismatch");
  }
  Matrix p(1, prediction.pixels.size());
  p.row(0) = prediction.pixels.matrix().transpose();
  return bce_mean(p, silhouette_to_map(target));
}

// ---- the network -----------------------------------------------------------

struct Autoencoder::Net {
  AeConfig cfg;
  int bottom = 0;    // resolution / 32
  int flat_dim = 0;  // channels * bottom^2
  long adam_step = 0;

  std::array<Conv, kStages> enc_conv;
  std::array<BatchNorm, kStages> enc_bn;
  std::array<MaxPool, kStages> enc_pool;
  Dense fc_enc, fc_dec;
  std::array<Upsample, kStages> dec_up;
  std::array<Conv, kStages> dec_conv;
  std::array<BatchNorm, kStages> dec_bn;
  Conv head;  // 1x1 conv + sigmoid

  std::vector<Param*> params;  // trainable tensors, declaration order

  struct Tape {
    std::array<Batch, kStages> enc_conv_x, enc_act_f;
    std::array<BnCache, kStages> enc_bn;
    std::array<PoolCache, kStages> enc_pool;
    Matrix flat_x, z;
    std::array<Batch, kStages> dec_conv_x, dec_act_f;
    std::array<BnCache, kStages> dec_bn;
    Batch head_x;
    Batch probs;
  };

  explicit Net(const AeConfig& config, std::uint64_t seed) : cfg(config) {
    if (cfg.resolution < 32 || cfg.resolution % 32 != 0) {
      throw std::invalid_argument("autoencoder resolution must be a positive multiple of 32");
    }
    if (cfg.channels < 1) throw std::invalid_argument("autoencoder needs at least 1 channel");
    bottom = cfg.resolution / 32;
    flat_dim = cfg.channels * bottom * bottom;

    int size = cfg.resolution;
    for (int l = 0; l < kStages; ++l) {
      enc_conv[l].configure(l == 0 ? 1 : cfg.channels, cfg.channels, 3, size, size);
      enc_bn[l].configure(cfg.channels);
      enc_pool[l].configure(cfg.channels, size, size);
      size /= 2;
    }
    fc_enc.configure(flat_dim, kEmbeddingDims);
    fc_dec.configure(kEmbeddingDims, flat_dim);
    size = bottom;
    for (int l = 0; l < kStages; ++l) {
      dec_up[l].configure(cfg.channels, size, size);
      dec_conv[l].configure(cfg.channels, cfg.channels, 3, 2 * size, 2 * size);
      dec_bn[l].configure(cfg.channels);
      size *= 2;
    }
    head.configure(cfg.channels, 1, 1, cfg.resolution, cfg.resolution);

    for (int l = 0; l < kStages; ++l) {
      params.push_back(&enc_conv[l].weight);
      params.push_back(&enc_conv[l].bias);
      params.push_back(&enc_bn[l].gamma);
      params.push_back(&enc_bn[l].beta);
    }
    params.push_back(&fc_enc.weight);
    params.push_back(&fc_enc.bias);
    params.push_back(&fc_dec.weight);
    params.push_back(&fc_dec.bias);
    for (int l = 0; l < kStages; ++l) {
      params.push_back(&dec_conv[l].weight);
      params.push_back(&dec_conv[l].bias);
      params.push_back(&dec_bn[l].gamma);
      params.push_back(&dec_bn[l].beta);
    }
    params.push_back(&head.weight);
    params.push_back(&head.bias);

    init_weights(seed);
  }

  void init_weights(std::uint64_t seed) {
    Rng rng(seed);
    auto xavier = [&rng](Param& p, double fan_in, double fan_out) {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (Eigen::Index i = 0; i < p.value.size(); ++i) {
        p.value.data()[i] = limit * (2.0 * rng.uniform() - 1.0);
      }
    };
    for (int l = 0; l < kStages; ++l) {
      xavier(enc_conv[l].weight, enc_conv[l].in_ch * 9.0, enc_conv[l].out_ch * 9.0);
    }
    xavier(fc_enc.weight, flat_dim, kEmbeddingDims);
    xavier(fc_dec.weight, kEmbeddingDims, flat_dim);
    for (int l = 0; l < kStages; ++l) {
      xavier(dec_conv[l].weight, dec_conv[l].in_ch * 9.0, dec_conv[l].out_ch * 9.0);
    }
    xavier(head.weight, cfg.channels, 1.0);
  }

  void zero_grads() {
    for (Param* p : params) p->grad.setZero();
  }

  // Forward with batch statistics. tape == nullptr skips caches (loss only).
  Batch forward_batch(const Batch& inputs, bool update_running, Tape* tape) {
    Batch a = inputs, b;
    for (int l = 0; l < kStages; ++l) {
      enc_conv[l].apply(a, b, tape ? &tape->enc_conv_x[l] : nullptr);
      enc_bn[l].apply_batch(b, tape ? &tape->enc_bn[l] : nullptr, update_running);
      act_forward(b, kLeakySlope, tape ? &tape->enc_act_f[l] : nullptr);
      enc_pool[l].apply(b, a, tape ? &tape->enc_pool[l] : nullptr);
    }
    const auto n = static_cast<Eigen::Index>(a.size());
    Matrix flat(flat_dim, n);
    for (Eigen::Index s = 0; s < n; ++s) {
      flat.col(s) = Eigen::Map<const Eigen::VectorXd>(a[s].data(), flat_dim);
    }
    const Matrix z = fc_enc.apply(flat, tape ? &tape->flat_x : nullptr);
    const Matrix f = fc_dec.apply(z, tape ? &tape->z : nullptr);
    a.resize(n);
    for (Eigen::Index s = 0; s < n; ++s) {
      a[s] = Eigen::Map<const Matrix>(f.col(s).data(), cfg.channels,
                                      static_cast<Eigen::Index>(bottom) * bottom);
    }
    for (int l = 0; l < kStages; ++l) {
      dec_up[l].apply(a, b);
      dec_conv[l].apply(b, a, tape ? &tape->dec_conv_x[l] : nullptr);
      dec_bn[l].apply_batch(a, tape ? &tape->dec_bn[l] : nullptr, update_running);
      act_forward(a, 0.0, tape ? &tape->dec_act_f[l] : nullptr);
    }
    head.apply(a, b, tape ? &tape->head_x : nullptr);
    for (Matrix& m : b) m = (1.0 + (-m.array()).exp()).inverse().matrix();
    if (tape) tape->probs = b;
    return b;
  }

  // dlogits: per-sample (p - q) * w, sigmoid fused with BCE.
  void backward_batch(Tape& tape, const Batch& dlogits) {
    Batch a, b = dlogits;
    head.backward(tape.head_x, b, a);
    for (int l = kStages - 1; l >= 0; --l) {
      act_backward(a, tape.dec_act_f[l]);
      dec_bn[l].backward(a, tape.dec_bn[l]);
      dec_conv[l].backward(tape.dec_conv_x[l], a, b);
      dec_up[l].backward(b, a);
    }
    const auto n = static_cast<Eigen::Index>(a.size());
    Matrix dflat(flat_dim, n);
    for (Eigen::Index s = 0; s < n; ++s) {
      dflat.col(s) = Eigen::Map<const Eigen::VectorXd>(a[s].data(), flat_dim);
    }
    const Matrix dz = fc_dec.backward(tape.z, dflat);
    const Matrix dx = fc_enc.backward(tape.flat_x, dz);
    a.resize(n);
    for (Eigen::Index s = 0; s < n; ++s) {
      a[s] = Eigen::Map<const Matrix>(dx.col(s).data(), cfg.channels,
                                      static_cast<Eigen::Index>(bottom) * bottom);
    }
    for (int l = kStages - 1; l >= 0; --l) {
      enc_pool[l].backward(a, tape.enc_pool[l], b);
      act_backward(b, tape.enc_act_f[l]);
      enc_bn[l].backward(b, tape.enc_bn[l]);
      enc_conv[l].backward(tape.enc_conv_x[l], b, a);
    }
  }

  void adam_update(const TrainConfig& cfg_t) {
    ++adam_step;
    const double bc1 = 1.0 - std::pow(cfg_t.adam_beta1, static_cast<double>(adam_step));
    const double bc2 = 1.0 - std::pow(cfg_t.adam_beta2, static_cast<double>(adam_step));
    for (Param* p : params) {
      p->adam_m = cfg_t.adam_beta1 * p->adam_m + (1.0 - cfg_t.adam_beta1) * p->grad;
      p->adam_v = cfg_t.adam_beta2 * p->adam_v + (1.0 - cfg_t.adam_beta2) * p->grad.cwiseProduct(p->grad);
      p->value.array() -= cfg_t.learning_rate * (p->adam_m.array() / bc1) /
                          ((p->adam_v.array() / bc2).sqrt() + cfg_t.adam_eps);
    }
  }

  // Inference paths: running statistics, no caches, const.
  Eigen::VectorXd encode_one(const Matrix& image) const {
    Batch a{image}, b;
    for (int l = 0; l < kStages; ++l) {
      enc_conv[l].apply(a, b, nullptr);
      enc_bn[l].apply_infer(b);
      act_forward(b, kLeakySlope, nullptr);
      enc_pool[l].apply(b, a, nullptr);
    }
    const Eigen::Map<const Eigen::VectorXd> flat(a[0].data(), flat_dim);
    return fc_enc.weight.value * flat + fc_enc.bias.value.col(0);
  }

  Matrix decode_one(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd f = fc_dec.weight.value * z + fc_dec.bias.value.col(0);
    Batch a{Eigen::Map<const Matrix>(f.data(), cfg.channels,
                                     static_cast<Eigen::Index>(bottom) * bottom)};
    Batch b;
    for (int l = 0; l < kStages; ++l) {
      dec_up[l].apply(a, b);
      dec_conv[l].apply(b, a, nullptr);
      dec_bn[l].apply_infer(a);
      act_forward(a, 0.0, nullptr);
    }
    head.apply(a, b, nullptr);
    return (1.0 + (-b[0].array()).exp()).inverse().matrix();
  }

  void check_pair(const SilhouettePair& pair) const {
    if (pair.front.width != cfg.resolution || pair.front.height != cfg.resolution ||
        pair.side.width != cfg.resolution || pair.side.height != cfg.resolution) {
      throw std::invalid_argument("silhouette pair does not match the configured resolution " +
                                  std::to_string(cfg.resolution));
    }
  }
};

// ---- public API ------------------------------------------------------------

Autoencoder::Autoencoder(const AeConfig& config, std::uint64_t seed)
    : net_(std::make_unique<Net>(config, seed)) {}
Autoencoder::Autoencoder(std::unique_ptr<Net> net) : net_(std::move(net)) {}
Autoencoder::~Autoencoder() = default;
Autoencoder::Autoencoder(Autoencoder&&) noexcept = default;
Autoencoder& Autoencoder::operator=(Autoencoder&&) noexcept = default;

const AeConfig& Autoencoder::config() const { return net_->cfg; }

std::size_t Autoencoder::parameter_count() const {
  std::size_t n = 0;
  for (const Param* p : net_->params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

EmbeddingVector Autoencoder::encode(const Silhouette& image) const {
  if (image.width != net_->cfg.resolution || image.height != net_->cfg.resolution) {
    throw std::invalid_argument("encode: image is " + std::to_string(image.width) + "x" +
                                std::to_string(image.height) + ", expected " +
                                std::to_string(net_->cfg.resolution) + " square");
  }
  return net_->encode_one(silhouette_to_map(image));
}

std::vector<EmbeddingVector> Autoencoder::encode_batch(
    const std::vector<Silhouette>& images) const {
  std::vector<EmbeddingVector> out;
  out.reserve(images.size());
  for (const Silhouette& img : images) out.push_back(encode(img));
  return out;
}

GrayImage Autoencoder::decode(const EmbeddingVector& z) const {
  if (!z.allFinite()) throw std::invalid_argument("decode: non-finite latent vector");
  GrayImage img;
  img.width = img.height = net_->cfg.resolution;
  const Matrix p = net_->decode_one(z);
  img.pixels = p.row(0).transpose().array();
  return img;
}

double Autoencoder::pair_loss(const SilhouettePair& pair) {
  const auto [front, side] = view_losses(pair);
  return front + side;
}

std::pair<double, double> Autoencoder::view_losses(const SilhouettePair& pair) {
  net_->check_pair(pair);
  const Batch inputs{silhouette_to_map(pair.front), silhouette_to_map(pair.side)};
  const Batch probs = net_->forward_batch(inputs, /*update_running=*/false, nullptr);
  return {bce_mean(probs[0], inputs[0]), bce_mean(probs[1], inputs[1])};
}

double Autoencoder::head_bias_gradient(const SilhouettePair& pair) {
  net_->check_pair(pair);
  const Batch inputs{silhouette_to_map(pair.front), silhouette_to_map(pair.side)};
  const Batch probs = net_->forward_batch(inputs, /*update_running=*/false, nullptr);
  return (probs[0] - inputs[0]).mean() + (probs[1] - inputs[1]).mean();
}

double relative_discrepancy(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), 1e-4);
}

std::vector<double> Autoencoder::train(const std::vector<SilhouettePair>& dataset,
                                       const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.learning_rate < 0.0) throw std::invalid_argument("train: negative learning rate");
  for (const SilhouettePair& pair : dataset) net_->check_pair(pair);

  const int n = static_cast<int>(dataset.size());
  const double pixel_count = static_cast<double>(net_->cfg.resolution) * net_->cfg.resolution;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(cfg.seed);

  std::vector<double> history;
  history.reserve(cfg.epochs);
  Net::Tape tape;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    int pairs_done = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int b = std::min(cfg.batch_size, n - start);
      Batch inputs(2 * b);
      for (int i = 0; i < b; ++i) {
        inputs[i] = silhouette_to_map(dataset[order[start + i]].front);
        inputs[b + i] = silhouette_to_map(dataset[order[start + i]].side);
      }
      const Batch probs = net_->forward_batch(inputs, /*update_running=*/true, &tape);

      double front_loss = 0.0, side_loss = 0.0;
      for (int i = 0; i < b; ++i) {
        front_loss += bce_mean(probs[i], inputs[i]);
        side_loss += bce_mean(probs[b + i], inputs[b + i]);
      }
      const double batch_loss = (front_loss + side_loss) / b;
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(start / cfg.batch_size));
      }
      loss_sum += batch_loss * b;
      pairs_done += b;

      net_->zero_grads();
      Batch dlogits(2 * b);
      const double w = 1.0 / (pixel_count * b);
      for (int i = 0; i < 2 * b; ++i) dlogits[i] = (probs[i] - inputs[i]) * w;
      net_->backward_batch(tape, dlogits);
      net_->adam_update(cfg);
    }
    history.push_back(loss_sum / pairs_done);
  }
  return history;
}

double Autoencoder::max_grad_discrepancy(const SilhouettePair& pair, int samples,
                                         std::uint64_t seed, double step) {
  net_->check_pair(pair);
  const Batch inputs{silhouette_to_map(pair.front), silhouette_to_map(pair.side)};
  const double w = 1.0 / (static_cast<double>(inputs[0].cols()));

  auto loss_now = [&]() {
    const Batch probs = net_->forward_batch(inputs, false, nullptr);
    return bce_mean(probs[0], inputs[0]) + bce_mean(probs[1], inputs[1]);
  };

  // analytic gradients
  net_->zero_grads();
  Net::Tape tape;
  const Batch probs = net_->forward_batch(inputs, false, &tape);
  Batch dlogits(2);
  for (int i = 0; i < 2; ++i) dlogits[i] = (probs[i] - inputs[i]) * w;
  net_->backward_batch(tape, dlogits);

  std::size_t total = 0;
  for (const Param* p : net_->params) total += static_cast<std::size_t>(p->value.size());
  if (samples < 1) throw std::invalid_argument("max_grad_discrepancy: samples must be >= 1");

  Rng rng(seed);
  std::set<std::size_t> chosen;
  while (chosen.size() < std::min<std::size_t>(samples, total)) {
    chosen.insert(rng.integer(total));
  }

  double worst = 0.0;
  for (std::size_t flat : chosen) {
    std::size_t offset = flat;
    Param* param = nullptr;
    for (Param* p : net_->params) {
      if (offset < static_cast<std::size_t>(p->value.size())) {
        param = p;
        break;
      }
      offset -= static_cast<std::size_t>(p->value.size());
    }
    double& theta = param->value.data()[offset];
    const double analytic = param->grad.data()[offset];
    const double original = theta;
    theta = original + step;
    const double up = loss_now();
    theta = original - step;
    const double down = loss_now();
    theta = original;
    const double fd = (up - down) / (2.0 * step);
    // the 1e-4 floor in the metric absorbs finite-difference noise on
    // near-zero entries
    worst = std::max(worst, relative_discrepancy(analytic, fd));
  }
  return worst;
}

// ---- checkpointing ---------------------------------------------------------

namespace {
const char kAeMagic[9] = "S2SAE01\0";
}  // namespace

void Autoencoder::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_magic(out, kAeMagic);
  write_u32(out, static_cast<std::uint32_t>(net_->cfg.resolution));
  write_u32(out, 13);  // layer count: 5 encoder, 2 fully connected, 5 decoder, 1 head

  auto write_tensor = [&out](const Matrix& m, const std::vector<int>& dims) {
    write_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (int d : dims) write_u32(out, static_cast<std::uint32_t>(d));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) write_f32(out, static_cast<float>(m(r, c)));
    }
  };
  auto write_param = [&write_tensor](const Param& p) { write_tensor(p.value, p.dims); };
  auto write_vector = [&out](const Eigen::VectorXd& v) {
    write_u32(out, 1);
    write_u32(out, static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) write_f32(out, static_cast<float>(v[i]));
  };
  auto write_bn = [&](const BatchNorm& bn) {
    write_param(bn.gamma);
    write_param(bn.beta);
    write_vector(bn.running_mean);
    write_vector(bn.running_var);
  };

  for (int l = 0; l < kStages; ++l) {
    write_param(net_->enc_conv[l].weight);
    write_param(net_->enc_conv[l].bias);
    write_bn(net_->enc_bn[l]);
  }
  write_param(net_->fc_enc.weight);
  write_param(net_->fc_enc.bias);
  write_param(net_->fc_dec.weight);
  write_param(net_->fc_dec.bias);
  for (int l = 0; l < kStages; ++l) {
    write_param(net_->dec_conv[l].weight);
    write_param(net_->dec_conv[l].bias);
    write_bn(net_->dec_bn[l]);
  }
  write_param(net_->head.weight);
  write_param(net_->head.bias);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Autoencoder Autoencoder::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  require_magic(in, kAeMagic, "autoencoder checkpoint");
  const int resolution = static_cast<int>(read_u32(in));
  const std::uint32_t layer_count = read_u32(in);
  if (layer_count != 13) {
    throw std::runtime_error("unexpected layer count " + std::to_string(layer_count) +
                             " in checkpoint " + path.string());
  }

  auto read_tensor = [&in, &path](Matrix& target, const std::vector<int>& expected_dims) {
    const std::uint32_t ndims = read_u32(in);
    std::vector<int> dims(ndims);
    for (auto& d : dims) d = static_cast<int>(read_u32(in));
    if (dims != expected_dims) {
      throw std::runtime_error("tensor shape mismatch in checkpoint " + path.string());
    }
    for (Eigen::Index r = 0; r < target.rows(); ++r) {
      for (Eigen::Index c = 0; c < target.cols(); ++c) {
        target(r, c) = static_cast<double>(read_f32(in));
      }
    }
  };
  auto read_vector = [&in, &path](Eigen::VectorXd& v, int expected) {
    const std::uint32_t ndims = read_u32(in);
    if (ndims != 1 || static_cast<int>(read_u32(in)) != expected) {
      throw std::runtime_error("tensor shape mismatch in checkpoint " + path.string());
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = static_cast<double>(read_f32(in));
  };

  // channels come from the first conv weight's shape
  const auto probe_pos = in.tellg();
  const std::uint32_t first_ndims = read_u32(in);
  if (first_ndims != 4) throw std::runtime_error("corrupt checkpoint " + path.string());
  const int channels = static_cast<int>(read_u32(in));
  in.seekg(probe_pos);

  auto net = std::make_unique<Net>(AeConfig{resolution, channels}, /*seed=*/0);
  auto read_bn = [&](BatchNorm& bn) {
    read_tensor(bn.gamma.value, bn.gamma.dims);
    read_tensor(bn.beta.value, bn.beta.dims);
    read_vector(bn.running_mean, bn.channels);
    read_vector(bn.running_var, bn.channels);
  };
  for (int l = 0; l < kStages; ++l) {
    read_tensor(net->enc_conv[l].weight.value, net->enc_conv[l].weight.dims);
    read_tensor(net->enc_conv[l].bias.value, net->enc_conv[l].bias.dims);
    read_bn(net->enc_bn[l]);
  }
  read_tensor(net->fc_enc.weight.value, net->fc_enc.weight.dims);
  read_tensor(net->fc_enc.bias.value, net->fc_enc.bias.dims);
  read_tensor(net->fc_dec.weight.value, net->fc_dec.weight.dims);
  read_tensor(net->fc_dec.bias.value, net->fc_dec.bias.dims);
  for (int l = 0; l < kStages; ++l) {
    read_tensor(net->dec_conv[l].weight.value, net->dec_conv[l].weight.dims);
    read_tensor(net->dec_conv[l].bias.value, net->dec_conv[l].bias.dims);
    read_bn(net->dec_bn[l]);
  }
  read_tensor(net->head.weight.value, net->head.weight.dims);
  read_tensor(net->head.bias.value, net->head.bias.dims);
  return Autoencoder(std::move(net));
}

std::pair<Autoencoder, std::vector<double>> train_autoencoder(
    const std::vector<SilhouettePair>& dataset, const AeConfig& acfg, const TrainConfig& tcfg) {
  Autoencoder ae(acfg, tcfg.seed);
  auto history = ae.train(dataset, tcfg);
  return {std::move(ae), std::move(history)};
}

}  // namespace s2s
