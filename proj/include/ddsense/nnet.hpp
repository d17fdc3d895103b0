#pragma once

// Trainable heatmap backend: a small fully-convolutional network on the
// feature tensor, Gaussian label rendering, Adam training on pixelwise binary
// cross-entropy, and peak extraction from the predicted heatmap.
//
// Tensors are stored as C x (H*W) matrices with row-major spatial flattening
// (index = row * W + col). Everything is templated on the scalar so the
// finite-difference gradient check can run in double while training runs in
// float.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ddsense/detector.hpp"
#include "ddsense/preproc.hpp"

namespace ddsense {

struct ConvSpec {
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 3;  // odd, zero padding keeps "same" geometry before striding
  int stride = 1;
  bool relu = true;
};

struct Architecture {
  std::vector<ConvSpec> layers;

  // Default toy network: 6->16->32->32->1 with stride-2 downsampling in the
  // middle and bilinear upsampling back to input resolution before the head.
  static Architecture toy(int in_channels) {
    Architecture a;
    a.layers = {{in_channels, 16, 3, 1, true},
                {16, 32, 3, 2, true},
                {32, 32, 3, 2, true},
                {32, 1, 3, 1, false}};
    return a;
  }

  int input_channels() const { return layers.front().in_ch; }
  int downsample_factor() const {
    int f = 1;
    for (const auto& l : layers) f *= l.stride;
    return f;
  }
  void validate() const {
    if (layers.empty()) throw ConfigError("Architecture: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.kernel % 2 == 0 || l.kernel < 1 || l.stride < 1 || l.in_ch < 1 || l.out_ch < 1)
        throw ConfigError("Architecture: bad layer spec");
      if (i > 0 && l.in_ch != layers[i - 1].out_ch)
        throw ConfigError("Architecture: channel mismatch between layers");
    }
    if (layers.back().out_ch != 1) throw ConfigError("Architecture: head must emit 1 channel");
  }
};

template <typename Scalar>
struct Network {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Architecture arch;
  std::vector<Mat> weights;  // out_ch x (in_ch * k * k)
  std::vector<Vec> biases;   // out_ch

  static Network he_init(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    Network net;
    net.arch = arch;
    Rng rng(seed);
    for (const auto& l : arch.layers) {
      const int fan_in = l.in_ch * l.kernel * l.kernel;
      const double s = std::sqrt(2.0 / fan_in);
      Mat w(l.out_ch, fan_in);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i)
          w(i, j) = static_cast<Scalar>(s * gaussian(rng));
      net.weights.push_back(std::move(w));
      net.biases.push_back(Vec::Zero(l.out_ch));
    }
    return net;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < weights.size(); ++i)
      n += static_cast<std::size_t>(weights[i].size() + biases[i].size());
    return n;
  }
};

namespace nn {

// im2col for a k x k kernel with zero padding (k-1)/2 and the given stride:
// output is (C*k*k) x (Ho*Wo).
template <typename Mat>
Mat im2col(const Mat& x, int h, int w, int k, int stride) {
  const int c = static_cast<int>(x.rows());
  const int pad = (k - 1) / 2;
  const int ho = (h - 1) / stride + 1;
  const int wo = (w - 1) / stride + 1;
  Mat cols = Mat::Zero(c * k * k, ho * wo);
  for (int ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const int row = (ch * k + ky) * k + kx;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= w) continue;
            cols(row, oy * wo + ox) = x(ch, iy * w + ix);
          }
        }
      }
    }
  }
  return cols;
}

// Adjoint of im2col: scatter-add patch gradients back onto the input layout.
template <typename Mat>
Mat col2im(const Mat& cols, int c, int h, int w, int k, int stride) {
  const int pad = (k - 1) / 2;
  const int ho = (h - 1) / stride + 1;
  const int wo = (w - 1) / stride + 1;
  Mat x = Mat::Zero(c, h * w);
  for (int ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const int row = (ch * k + ky) * k + kx;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= w) continue;
            x(ch, iy * w + ix) += cols(row, oy * wo + ox);
          }
        }
      }
    }
  }
  return x;
}

// 1D linear interpolation matrix mapping n samples to n*f, sample centers at
// (i + 0.5)/n. Shared by the forward pass and its adjoint.
template <typename Mat>
Mat upsample_matrix(int n, int f) {
  Mat m = Mat::Zero(n * f, n);
  for (int i = 0; i < n * f; ++i) {
    const double src = (i + 0.5) / f - 0.5;
    const int i0 = static_cast<int>(std::floor(src));
    const double w1 = src - i0;
    const int a = std::clamp(i0, 0, n - 1);
    const int b = std::clamp(i0 + 1, 0, n - 1);
    m(i, a) += static_cast<typename Mat::Scalar>(1.0 - w1);
    m(i, b) += static_cast<typename Mat::Scalar>(w1);
  }
  return m;
}

}  // namespace nn

// Forward activations kept for backprop.
template <typename Scalar>
struct ForwardTrace {
  using Mat = typename Network<Scalar>::Mat;
  std::vector<Mat> inputs;      // per layer, pre-im2col activations
  std::vector<int> heights, widths;
  Mat logits;                   // 1 x (H*W) at full resolution
};

// Deterministic forward pass to logits (sigmoid applied by the callers).
template <typename Scalar>
typename Network<Scalar>::Mat forward_logits(const Network<Scalar>& net,
                                             const typename Network<Scalar>::Mat& x, int h, int w,
                                             ForwardTrace<Scalar>* trace = nullptr) {
  using Mat = typename Network<Scalar>::Mat;
  if (x.rows() != net.arch.input_channels() || x.cols() != h * w)
    throw ConfigError("forward: input shape does not match architecture");

  Mat a = x;
  int ch = h, cw = w;
  for (std::size_t li = 0; li < net.arch.layers.size(); ++li) {
    const ConvSpec& l = net.arch.layers[li];
    if (trace) {
      trace->inputs.push_back(a);
      trace->heights.push_back(ch);
      trace->widths.push_back(cw);
    }
    Mat cols = nn::im2col(a, ch, cw, l.kernel, l.stride);
    a = net.weights[li] * cols;
    a.colwise() += net.biases[li];
    ch = (ch - 1) / l.stride + 1;
    cw = (cw - 1) / l.stride + 1;
    if (l.relu) a = a.cwiseMax(Scalar(0));
  }

  const int f = net.arch.downsample_factor();
  if (f > 1) {
    const Mat lh = nn::upsample_matrix<Mat>(ch, f);
    const Mat lw = nn::upsample_matrix<Mat>(cw, f);
    Eigen::Map<const Mat> small(a.data(), cw, ch);  // column-major view = row-major (h x w)
    Mat up = (lh * small.transpose() * lw.transpose());
    Mat out(1, up.size());
    for (int i = 0; i < up.rows(); ++i)
      for (int j = 0; j < up.cols(); ++j) out(0, i * up.cols() + j) = up(i, j);
    a = std::move(out);
    ch *= f;
    cw *= f;
  }
  if (ch != h || cw != w)
    throw ConfigError("forward: input size is not divisible by the network stride");
  if (trace) trace->logits = a;
  return a;
}

// Heatmap in [0,1] from the feature tensor.
template <typename Scalar>
RMatrix forward(const Network<Scalar>& net, const typename Network<Scalar>::Mat& x, int h, int w) {
  const auto z = forward_logits(net, x, h, w);
  RMatrix out(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      out(i, j) = 1.0 / (1.0 + std::exp(-static_cast<double>(z(0, i * w + j))));
  if (!out.allFinite()) throw NumericError("forward: non-finite heatmap");
  return out;
}

template <typename Scalar>
typename Network<Scalar>::Mat to_input(const FeatureTensor& ft) {
  using Mat = typename Network<Scalar>::Mat;
  const int h = static_cast<int>(ft.channels.front().rows());
  const int w = static_cast<int>(ft.channels.front().cols());
  Mat x(ft.n_channels(), h * w);
  for (int c = 0; c < ft.n_channels(); ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        x(c, i * w + j) = static_cast<Scalar>(ft.channels[static_cast<std::size_t>(c)](i, j));
  return x;
}

// Max-composited isotropic Gaussian blobs at the fractional bin positions of
// the given (tau, alpha) pairs.
inline RMatrix render_label(const std::vector<std::pair<double, double>>& etas,
                            const RVector& tau_axis, const RVector& alpha_axis,
                            double blob_sigma = 1.5) {
  const int h = static_cast<int>(tau_axis.size());
  const int w = static_cast<int>(alpha_axis.size());
  RMatrix out = RMatrix::Zero(h, w);
  if (etas.empty()) return out;
  const double tau_step = tau_axis(1) - tau_axis(0);
  const double alpha_step = alpha_axis(1) - alpha_axis(0);
  const int reach = static_cast<int>(std::ceil(4.0 * blob_sigma));
  for (const auto& [tau, alpha] : etas) {
    const double ci = (tau - tau_axis(0)) / tau_step;
    const double cj = (alpha - alpha_axis(0)) / alpha_step;
    const int i0 = std::max(0, static_cast<int>(std::floor(ci)) - reach);
    const int i1 = std::min(h - 1, static_cast<int>(std::ceil(ci)) + reach);
    const int j0 = std::max(0, static_cast<int>(std::floor(cj)) - reach);
    const int j1 = std::min(w - 1, static_cast<int>(std::ceil(cj)) + reach);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j) {
        const double d2 = (i - ci) * (i - ci) + (j - cj) * (j - cj);
        out(i, j) = std::max(out(i, j), std::exp(-0.5 * d2 / (blob_sigma * blob_sigma)));
      }
  }
  return out;
}

// Local maxima above threshold with 2-bin non-maximum suppression, parabolic
// sub-bin refinement and mapping to physical units.
inline std::vector<std::pair<double, double>> extract_peaks(const RMatrix& heatmap,
                                                            double threshold,
                                                            const RVector& tau_axis,
                                                            const RVector& alpha_axis) {
  const int h = static_cast<int>(heatmap.rows());
  const int w = static_cast<int>(heatmap.cols());
  struct Peak {
    int i, j;
    double v;
  };
  std::vector<Peak> peaks;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double v = heatmap(i, j);
      if (v <= threshold) continue;
      bool is_max = true;
      for (int di = -1; di <= 1 && is_max; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || ni >= h || nj < 0 || nj >= w) continue;
          const double nv = heatmap(ni, nj);
          if (nv > v || (nv == v && (ni < i || (ni == i && nj < j)))) {
            is_max = false;
            break;
          }
        }
      if (is_max) peaks.push_back({i, j, v});
    }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.v > b.v; });

  std::vector<Peak> kept;
  for (const Peak& p : peaks) {
    bool suppressed = false;
    for (const Peak& q : kept)
      if (std::abs(p.i - q.i) <= 2 && std::abs(p.j - q.j) <= 2) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(p);
  }

  const double tau_step = tau_axis(1) - tau_axis(0);
  const double alpha_step = alpha_axis(1) - alpha_axis(0);
  std::vector<std::pair<double, double>> out;
  out.reserve(kept.size());
  for (const Peak& p : kept) {
    auto [di, dj] = parabolic_refine(heatmap, p.i, p.j);
    out.emplace_back(tau_axis(0) + (p.i + di) * tau_step, alpha_axis(0) + (p.j + dj) * alpha_step);
  }
  return out;
}

// ------------------------------- training --------------------------------

template <typename Scalar>
struct Sample {
  typename Network<Scalar>::Mat x;  // C x (H*W)
  typename Network<Scalar>::Mat t;  // 1 x (H*W), values in [0,1]
  int h = 0, w = 0;
};

struct TrainConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 0;
  double val_fraction = 0.0;  // tail fraction of the dataset held out per-epoch

  void validate() const {
    if (batch_size < 1 || epochs < 1) throw ConfigError("TrainConfig: batch/epochs must be >= 1");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
      throw ConfigError("TrainConfig: val_fraction in [0,1)");
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when no validation split
};

namespace nn {

// Numerically stable mean binary cross-entropy from logits; also emits
// dL/dlogits = (sigmoid(z) - t) / n when grad is non-null.
template <typename Mat>
double bce_with_logits(const Mat& z, const Mat& t, Mat* grad) {
  using Scalar = typename Mat::Scalar;
  const Eigen::Index n = z.size();
  double loss = 0.0;
  if (grad) grad->resize(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zi = static_cast<double>(z(i));
    const double ti = static_cast<double>(t(i));
    loss += std::max(zi, 0.0) - zi * ti + std::log1p(std::exp(-std::abs(zi)));
    if (grad) {
      const double s = 1.0 / (1.0 + std::exp(-zi));
      (*grad)(i) = static_cast<Scalar>((s - ti) / static_cast<double>(n));
    }
  }
  return loss / static_cast<double>(n);
}

}  // namespace nn

// Backpropagation through one sample; accumulates parameter gradients.
template <typename Scalar>
double backprop(const Network<Scalar>& net, const Sample<Scalar>& sample,
                std::vector<typename Network<Scalar>::Mat>& grad_w,
                std::vector<typename Network<Scalar>::Vec>& grad_b) {
  using Mat = typename Network<Scalar>::Mat;
  ForwardTrace<Scalar> trace;
  forward_logits(net, sample.x, sample.h, sample.w, &trace);

  Mat dz;
  const double loss = nn::bce_with_logits(trace.logits, sample.t, &dz);

  // through the upsampler (adjoint of the two interpolation products)
  const int f = net.arch.downsample_factor();
  int ch = sample.h, cw = sample.w;
  for (const auto& l : net.arch.layers) {
    ch = (ch - 1) / l.stride + 1;
    cw = (cw - 1) / l.stride + 1;
  }
  Mat da;
  if (f > 1) {
    const Mat lh = nn::upsample_matrix<Mat>(ch, f);
    const Mat lw = nn::upsample_matrix<Mat>(cw, f);
    Mat dup(sample.h, sample.w);
    for (int i = 0; i < sample.h; ++i)
      for (int j = 0; j < sample.w; ++j) dup(i, j) = dz(0, i * sample.w + j);
    Mat dsmall = lh.transpose() * dup * lw;  // ch x cw
    da.resize(1, ch * cw);
    for (int i = 0; i < ch; ++i)
      for (int j = 0; j < cw; ++j) da(0, i * cw + j) = dsmall(i, j);
  } else {
    da = dz;
  }

  const std::size_t nl = net.arch.layers.size();
  for (std::size_t li = nl; li-- > 0;) {
    const ConvSpec& l = net.arch.layers[li];
    const int hin = trace.heights[li], win = trace.widths[li];
    const Mat cols = nn::im2col(trace.inputs[li], hin, win, l.kernel, l.stride);
    if (l.relu) {
      Mat pre = net.weights[li] * cols;
      pre.colwise() += net.biases[li];
      da = (pre.array() > Scalar(0)).template cast<Scalar>().matrix().cwiseProduct(da);
    }
    grad_w[li].noalias() += da * cols.transpose();
    grad_b[li] += da.rowwise().sum();
    if (li > 0) {
      const Mat dcols = net.weights[li].transpose() * da;
      da = nn::col2im(dcols, l.in_ch, hin, win, l.kernel, l.stride);
    }
  }
  return loss;
}

template <typename Scalar>
struct AdamState {
  using Mat = typename Network<Scalar>::Mat;
  using Vec = typename Network<Scalar>::Vec;
  std::vector<Mat> m_w, v_w;
  std::vector<Vec> m_b, v_b;
  long step = 0;

  explicit AdamState(const Network<Scalar>& net) {
    for (std::size_t i = 0; i < net.weights.size(); ++i) {
      m_w.push_back(Mat::Zero(net.weights[i].rows(), net.weights[i].cols()));
      v_w.push_back(Mat::Zero(net.weights[i].rows(), net.weights[i].cols()));
      m_b.push_back(Vec::Zero(net.biases[i].size()));
      v_b.push_back(Vec::Zero(net.biases[i].size()));
    }
  }

  void update(Network<Scalar>& net, const std::vector<Mat>& gw, const std::vector<Vec>& gb,
              const TrainConfig& cfg) {
    ++step;
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double corr1 = 1.0 - std::pow(b1, step);
    const double corr2 = 1.0 - std::pow(b2, step);
    const double lr = cfg.learning_rate * std::sqrt(corr2) / corr1;
    for (std::size_t i = 0; i < net.weights.size(); ++i) {
      m_w[i] = Scalar(b1) * m_w[i] + Scalar(1 - b1) * gw[i];
      v_w[i] = Scalar(b2) * v_w[i] + Scalar(1 - b2) * gw[i].cwiseProduct(gw[i]);
      net.weights[i] -=
          (Scalar(lr) * m_w[i].array() / (v_w[i].array().sqrt() + Scalar(cfg.adam_eps))).matrix();
      m_b[i] = Scalar(b1) * m_b[i] + Scalar(1 - b1) * gb[i];
      v_b[i] = Scalar(b2) * v_b[i] + Scalar(1 - b2) * gb[i].cwiseProduct(gb[i]);
      net.biases[i] -=
          (Scalar(lr) * m_b[i].array() / (v_b[i].array().sqrt() + Scalar(cfg.adam_eps))).matrix();
    }
  }
};

// Minibatch Adam training on binary cross-entropy heatmap regression.
// Deterministic for a fixed (seed, dataset, config).
template <typename Scalar>
std::vector<EpochStats> train(Network<Scalar>& net, const std::vector<Sample<Scalar>>& dataset,
                              const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw DataError("train: empty dataset");
  using Mat = typename Network<Scalar>::Mat;
  using Vec = typename Network<Scalar>::Vec;

  const std::size_t n_val = static_cast<std::size_t>(cfg.val_fraction * dataset.size());
  const std::size_t n_train = dataset.size() - n_val;
  if (n_train == 0) throw DataError("train: validation split leaves no training data");

  AdamState<Scalar> adam(net);
  Rng shuffle_rng(derive_seed(cfg.seed, 0xadab));
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<EpochStats> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
      const std::size_t stop = std::min(n_train, start + cfg.batch_size);
      std::vector<Mat> gw;
      std::vector<Vec> gb;
      for (std::size_t i = 0; i < net.weights.size(); ++i) {
        gw.push_back(Mat::Zero(net.weights[i].rows(), net.weights[i].cols()));
        gb.push_back(Vec::Zero(net.biases[i].size()));
      }
      double batch_loss = 0.0;
      for (std::size_t s = start; s < stop; ++s)
        batch_loss += backprop(net, dataset[order[s]], gw, gb);
      const Scalar inv = Scalar(1.0 / static_cast<double>(stop - start));
      for (auto& g : gw) g *= inv;
      for (auto& g : gb) g *= inv;
      adam.update(net, gw, gb, cfg);
      epoch_loss += batch_loss;
      seen += stop - start;
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = epoch_loss / static_cast<double>(seen);
    if (!std::isfinite(st.train_loss))
      throw NumericError("train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
    if (n_val > 0) {
      double vl = 0.0;
      for (std::size_t s = n_train; s < dataset.size(); ++s) {
        const auto z = forward_logits(net, dataset[s].x, dataset[s].h, dataset[s].w);
        vl += nn::bce_with_logits(z, dataset[s].t, static_cast<Mat*>(nullptr));
      }
      st.val_loss = vl / static_cast<double>(n_val);
    } else {
      st.val_loss = std::numeric_limits<double>::quiet_NaN();
    }
    history.push_back(st);
  }
  return history;
}

}  // namespace ddsense
