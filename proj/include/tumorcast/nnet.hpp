#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tumorcast/parallel.hpp"

namespace tumorcast {

/// NHWC tensor (n fastest-varying axis is the channel).
template <typename T>
struct Tensor4 {
    int n = 0, h = 0, w = 0, c = 0;
    std::vector<T> data;

    static Tensor4 zeros(int n, int h, int w, int c) {
        return {n, h, w, c, std::vector<T>(std::size_t(n) * h * w * c, T(0))};
    }
    std::size_t size() const { return data.size(); }
    std::size_t index(int ni, int yi, int xi, int ci) const {
        return ((std::size_t(ni) * h + yi) * w + xi) * c + ci;
    }
    T& at(int ni, int yi, int xi, int ci) { return data[index(ni, yi, xi, ci)]; }
    T at(int ni, int yi, int xi, int ci) const { return data[index(ni, yi, xi, ci)]; }
};

enum class LayerKind { conv, relu, maxpool, lrn, fc, dropout };

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    int out_channels = 0;   // conv / fc
    int kernel = 3;         // conv (pad = kernel/2), maxpool window
    int stride = 2;         // maxpool
    double rate = 0.9;      // dropout
    int local_size = 5;     // lrn
    double alpha = 1e-4, beta = 0.75, k = 1.0;
};

struct NetworkSpec {
    int in_h = 17, in_w = 17, in_c = 3;
    double init_std = 0.01;  // Gaussian weight-init standard deviation
    std::vector<LayerSpec> layers;
};

nlohmann::json layer_spec_to_json(const LayerSpec& s);
LayerSpec layer_spec_from_json(const nlohmann::json& j);
nlohmann::json network_spec_to_json(const NetworkSpec& s);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

template <typename T>
struct Param {
    std::vector<T> w, g, mom;
    void init_size(std::size_t n) {
        w.assign(n, T(0));
        g.assign(n, T(0));
        mom.assign(n, T(0));
    }
};

template <typename T>
class Layer {
  public:
    virtual ~Layer() = default;
    virtual void forward(const Tensor4<T>& in, Tensor4<T>& out, bool train) = 0;
    /// Accumulates parameter gradients; din is overwritten.
    virtual void backward(const Tensor4<T>& in, const Tensor4<T>& dout, Tensor4<T>& din) = 0;
    virtual std::vector<Param<T>*> params() { return {}; }
    virtual std::array<int, 3> out_shape(std::array<int, 3> in) const = 0;  // (h,w,c)
    virtual LayerSpec spec() const = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------

template <typename T>
class Conv2D final : public Layer<T> {
  public:
    Conv2D(int kernel, int in_c, int out_c, std::mt19937& rng, double init_std = 0.01)
        : kernel_(kernel), pad_(kernel / 2), in_c_(in_c), out_c_(out_c) {
        weights_.init_size(std::size_t(kernel) * kernel * in_c * out_c);
        bias_.init_size(out_c);
        std::normal_distribution<double> dist(0.0, init_std);
        for (auto& v : weights_.w) v = T(dist(rng));
    }

    void forward(const Tensor4<T>& in, Tensor4<T>& out, bool) override {
        out = Tensor4<T>::zeros(in.n, in.h, in.w, out_c_);
        const int k = kernel_, pad = pad_;
        parallel_for(in.n, [&](int n0, int n1, int) {
            for (int ni = n0; ni < n1; ++ni)
                for (int y = 0; y < in.h; ++y)
                    for (int x = 0; x < in.w; ++x) {
                        T* o = &out.data[out.index(ni, y, x, 0)];
                        for (int co = 0; co < out_c_; ++co) o[co] = bias_.w[co];
                        for (int ky = 0; ky < k; ++ky) {
                            int sy = y + ky - pad;
                            if (sy < 0 || sy >= in.h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                int sx = x + kx - pad;
                                if (sx < 0 || sx >= in.w) continue;
                                const T* src = &in.data[in.index(ni, sy, sx, 0)];
                                const T* wrow = &weights_.w[(std::size_t(ky) * k + kx) * in_c_ * out_c_];
                                for (int ci = 0; ci < in_c_; ++ci) {
                                    T v = src[ci];
                                    const T* wr = wrow + std::size_t(ci) * out_c_;
                                    for (int co = 0; co < out_c_; ++co) o[co] += v * wr[co];
                                }
                            }
                        }
                    }
        });
    }

    void backward(const Tensor4<T>& in, const Tensor4<T>& dout, Tensor4<T>& din) override {
        din = Tensor4<T>::zeros(in.n, in.h, in.w, in_c_);
        const int k = kernel_, pad = pad_;
        const int workers = std::min(worker_count(), std::max(in.n, 1));
        std::vector<std::vector<T>> gw_local(workers), gb_local(workers);
        for (int t = 0; t < workers; ++t) {
            gw_local[t].assign(weights_.w.size(), T(0));
            gb_local[t].assign(bias_.w.size(), T(0));
        }
        parallel_for(in.n, [&](int n0, int n1, int tid) {
            auto& gw = gw_local[tid];
            auto& gb = gb_local[tid];
            for (int ni = n0; ni < n1; ++ni)
                for (int y = 0; y < in.h; ++y)
                    for (int x = 0; x < in.w; ++x) {
                        const T* go = &dout.data[dout.index(ni, y, x, 0)];
                        for (int co = 0; co < out_c_; ++co) gb[co] += go[co];
                        for (int ky = 0; ky < k; ++ky) {
                            int sy = y + ky - pad;
                            if (sy < 0 || sy >= in.h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                int sx = x + kx - pad;
                                if (sx < 0 || sx >= in.w) continue;
                                const T* src = &in.data[in.index(ni, sy, sx, 0)];
                                T* dsrc = &din.data[din.index(ni, sy, sx, 0)];
                                std::size_t wbase = (std::size_t(ky) * k + kx) * in_c_ * out_c_;
                                for (int ci = 0; ci < in_c_; ++ci) {
                                    const T* wr = &weights_.w[wbase + std::size_t(ci) * out_c_];
                                    T* gwr = &gw[wbase + std::size_t(ci) * out_c_];
                                    T v = src[ci];
                                    T acc = T(0);
                                    for (int co = 0; co < out_c_; ++co) {
                                        acc += go[co] * wr[co];
                                        gwr[co] += go[co] * v;
                                    }
                                    dsrc[ci] += acc;
                                }
                            }
                        }
                    }
        });
        // Deterministic reduction in thread order.
        for (int t = 0; t < workers; ++t) {
            for (std::size_t i = 0; i < weights_.g.size(); ++i) weights_.g[i] += gw_local[t][i];
            for (std::size_t i = 0; i < bias_.g.size(); ++i) bias_.g[i] += gb_local[t][i];
        }
    }

    std::vector<Param<T>*> params() override { return {&weights_, &bias_}; }
    std::array<int, 3> out_shape(std::array<int, 3> in) const override {
        if (in[2] != in_c_) throw std::invalid_argument("Conv2D: channel mismatch");
        return {in[0], in[1], out_c_};
    }
    LayerSpec spec() const override {
        LayerSpec s;
        s.kind = LayerKind::conv;
        s.kernel = kernel_;
        s.out_channels = out_c_;
        return s;
    }
    std::string name() const override {
        return "conv" + std::to_string(kernel_) + "x" + std::to_string(kernel_);
    }

  private:
    int kernel_, pad_, in_c_, out_c_;
    Param<T> weights_, bias_;
};

template <typename T>
class ReLU final : public Layer<T> {
  public:
    void forward(const Tensor4<T>& in, Tensor4<T>& out, bool) override {
        out = in;
        for (auto& v : out.data) v = std::max(v, T(0));
    }
    void backward(const Tensor4<T>& in, const Tensor4<T>& dout, Tensor4<T>& din) override {
        din = dout;
        for (std::size_t i = 0; i < din.data.size(); ++i)
            if (in.data[i] <= T(0)) din.data[i] = T(0);
    }
    std::array<int, 3> out_shape(std::array<int, 3> in) const override { return in; }
    LayerSpec spec() const override { return {.kind = LayerKind::relu}; }
    std::string name() const override { return "relu"; }
};

template <typename T>
class MaxPool2D final : public Layer<T> {
  public:
    MaxPool2D(int window = 3, int stride = 2) : window_(window), stride_(stride) {}

    static int out_extent(int in, int window, int stride) {
        return (in - window + stride - 1) / stride + 1;
    }

    void forward(const Tensor4<T>& in, Tensor4<T>& out, bool) override {
        int oh = out_extent(in.h, window_, stride_), ow = out_extent(in.w, window_, stride_);
        out = Tensor4<T>::zeros(in.n, oh, ow, in.c);
        argmax_.assign(out.size(), 0);
        for (int ni = 0; ni < in.n; ++ni)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    int y0 = oy * stride_, x0 = ox * stride_;
                    int y1 = std::min(y0 + window_, in.h), x1 = std::min(x0 + window_, in.w);
                    for (int ci = 0; ci < in.c; ++ci) {
                        T best = in.at(ni, y0, x0, ci);
                        std::size_t besti = in.index(ni, y0, x0, ci);
                        for (int y = y0; y < y1; ++y)
                            for (int x = x0; x < x1; ++x) {
                                T v = in.at(ni, y, x, ci);
                                if (v > best) {
                                    best = v;
                                    besti = in.index(ni, y, x, ci);
                                }
                            }
                        std::size_t oi = out.index(ni, oy, ox, ci);
                        out.data[oi] = best;
                        argmax_[oi] = besti;
                    }
                }
    }

    void backward(const Tensor4<T>& in, const Tensor4<T>& dout, Tensor4<T>& din) override {
        din = Tensor4<T>::zeros(in.n, in.h, in.w, in.c);
        for (std::size_t i = 0; i < dout.data.size(); ++i) din.data[argmax_[i]] += dout.data[i];
    }
    std::array<int, 3> out_shape(std::array<int, 3> in) const override {
        return {out_extent(in[0], window_, stride_), out_extent(in[1], window_, stride_), in[2]};
    }
    LayerSpec spec() const override {
        return {.kind = LayerKind::maxpool, .kernel = window_, .stride = stride_};
    }
    std::string name() const override { return "maxpool"; }

  private:
    int window_, stride_;
    std::vector<std::size_t> argmax_;
};

/// AlexNet cross-channel local response normalization.
template <typename T>
class LRN final : public Layer<T> {
  public:
    LRN(int local_size = 5, double alpha = 1e-4, double beta = 0.75, double k = 1.0)
        : n_(local_size), alpha_(alpha), beta_(beta), k_(k) {}

    void forward(const Tensor4<T>& in, Tensor4<T>& out, bool) override {
        out = Tensor4<T>::zeros(in.n, in.h, in.w, in.c);
        scale_ = Tensor4<T>::zeros(in.n, in.h, in.w, in.c);
        int half = n_ / 2;
        for (int ni = 0; ni < in.n; ++ni)
            for (int y = 0; y < in.h; ++y)
                for (int x = 0; x < in.w; ++x)
                    for (int ci = 0; ci < in.c; ++ci) {
                        T acc = T(0);
                        for (int j = std::max(0, ci - half); j <= std::min(in.c - 1, ci + half); ++j) {
                            T a = in.at(ni, y, x, j);
                            acc += a * a;
                        }
                        T s = T(k_) + T(alpha_ / n_) * acc;
                        scale_.at(ni, y, x, ci) = s;
                        out.at(ni, y, x, ci) = in.at(ni, y, x, ci) * std::pow(s, T(-beta_));
                    }
    }

    void backward(const Tensor4<T>& in, const Tensor4<T>& dout, Tensor4<T>& din) override {
        din = Tensor4<T>::zeros(in.n, in.h, in.w, in.c);
        int half = n_ / 2;
        for (int ni = 0; ni < in.n; ++ni)
            for (int y = 0; y < in.h; ++y)
                for (int x = 0; x < in.w; ++x)
                    for (int j = 0; j < in.c; ++j) {
                        T g = dout.at(ni, y, x, j) * std::pow(scale_.at(ni, y, x, j), T(-beta_));
                        // cross terms: every output i whose window contains j
                        T cross = T(0);
                        for (int i = std::max(0, j - half); i <= std::min(in.c - 1, j + half); ++i) {
                            T si = scale_.at(ni, y, x, i);
                            cross += dout.at(ni, y, x, i) * in.at(ni, y, x, i) *
                                     std::pow(si, T(-beta_ - 1.0));
                        }
                        din.at(ni, y, x, j) =
                            g - T(2.0 * alpha_ * beta_ / n_) * in.at(ni, y, x, j) * cross;
                    }
    }

    std::array<int, 3> out_shape(std::array<int, 3> in) const override { return in; }
    LayerSpec spec() const override {
        return {.kind = LayerKind::lrn, .local_size = n_, .alpha = alpha_, .beta = beta_, .k = k_};
    }
    std::string name() const override { return "lrn"; }

  private:
    int n_;
    double alpha_, beta_, k_;
    Tensor4<T> scale_;
};

template <typename T>
class Dense final : public Layer<T> {
  public:
    Dense(int in_features, int out_units, std::mt19937& rng, double init_std = 0.01)
        : in_(in_features), out_(out_units) {
        weights_.init_size(std::size_t(in_features) * out_units);
        bias_.init_size(out_units);
        std::normal_distribution<double> dist(0.0, init_std);
        for (auto& v : weights_.w) v = T(dist(rng));
    }

    void forward(const Tensor4<T>& in, Tensor4<T>& out, bool) override {
        if (int(in.size() / in.n) != in_) throw std::invalid_argument("Dense: feature mismatch");
        out = Tensor4<T>::zeros(in.n, 1, 1, out_);
        parallel_for(in.n, [&](int n0, int n1, int) {
            for (int ni = n0; ni < n1; ++ni) {
                const T* x = &in.data[std::size_t(ni) * in_];
                T* o = &out.data[std::size_t(ni) * out_];
                for (int j = 0; j < out_; ++j) o[j] = bias_.w[j];
                for (int i = 0; i < in_; ++i) {
                    T v = x[i];
                    const T* wr = &weights_.w[std::size_t(i) * out_];
                    for (int j = 0; j < out_; ++j) o[j] += v * wr[j];
                }
            }
        });
    }

    void backward(const Tensor4<T>& in, const Tensor4<T>& dout, Tensor4<T>& din) override {
        din = Tensor4<T>::zeros(in.n, in.h, in.w, in.c);
        const int workers = std::min(worker_count(), std::max(in.n, 1));
        std::vector<std::vector<T>> gw_local(workers), gb_local(workers);
        for (int t = 0; t < workers; ++t) {
            gw_local[t].assign(weights_.w.size(), T(0));
            gb_local[t].assign(bias_.w.size(), T(0));
        }
        parallel_for(in.n, [&](int n0, int n1, int tid) {
            for (int ni = n0; ni < n1; ++ni) {
                const T* x = &in.data[std::size_t(ni) * in_];
                const T* go = &dout.data[std::size_t(ni) * out_];
                T* dx = &din.data[std::size_t(ni) * in_];
                for (int j = 0; j < out_; ++j) gb_local[tid][j] += go[j];
                for (int i = 0; i < in_; ++i) {
                    const T* wr = &weights_.w[std::size_t(i) * out_];
                    T* gwr = &gw_local[tid][std::size_t(i) * out_];
                    T acc = T(0);
                    for (int j = 0; j < out_; ++j) {
                        acc += go[j] * wr[j];
                        gwr[j] += go[j] * x[i];
                    }
                    dx[i] = acc;
                }
            }
        });
        for (int t = 0; t < workers; ++t) {
            for (std::size_t i = 0; i < weights_.g.size(); ++i) weights_.g[i] += gw_local[t][i];
            for (std::size_t i = 0; i < bias_.g.size(); ++i) bias_.g[i] += gb_local[t][i];
        }
    }

    std::vector<Param<T>*> params() override { return {&weights_, &bias_}; }
    std::array<int, 3> out_shape(std::array<int, 3> in) const override {
        if (in[0] * in[1] * in[2] != in_) throw std::invalid_argument("Dense: feature mismatch");
        return {1, 1, out_};
    }
    LayerSpec spec() const override { return {.kind = LayerKind::fc, .out_channels = out_}; }
    std::string name() const override { return "fc"; }

  private:
    int in_, out_;
    Param<T> weights_, bias_;
};

/// Inverted dropout: scales by 1/(1-rate) at train time, identity at eval.
template <typename T>
class Dropout final : public Layer<T> {
  public:
    Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
        if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("Dropout: rate outside [0,1)");
    }

    void forward(const Tensor4<T>& in, Tensor4<T>& out, bool train) override {
        out = in;
        if (!train || rate_ == 0.0) {
            mask_.clear();
            return;
        }
        if (!frozen_ || mask_.size() != in.size()) {
            mask_.resize(in.size());
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            for (auto& m : mask_) m = uni(rng_) >= rate_ ? T(1.0 / (1.0 - rate_)) : T(0);
        }
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask_[i];
    }

    void backward(const Tensor4<T>&, const Tensor4<T>& dout, Tensor4<T>& din) override {
        din = dout;
        if (!mask_.empty())
            for (std::size_t i = 0; i < din.data.size(); ++i) din.data[i] *= mask_[i];
    }

    /// Keep the current mask across forward calls (finite-difference checks).
    void freeze_mask(bool frozen) { frozen_ = frozen; }

    std::array<int, 3> out_shape(std::array<int, 3> in) const override { return in; }
    LayerSpec spec() const override { return {.kind = LayerKind::dropout, .rate = rate_}; }
    std::string name() const override { return "dropout"; }

  private:
    double rate_;
    std::mt19937_64 rng_;
    bool frozen_ = false;
    std::vector<T> mask_;
};

// ---------------------------------------------------------------------------

/// Numerically stable softmax + cross entropy over 2+ classes.
/// Returns the mean loss; fills probs and (p - y)/n logits gradient.
template <typename T>
T softmax_xent(const Tensor4<T>& logits, std::span<const int> labels, Tensor4<T>& probs,
               Tensor4<T>& dlogits) {
    if (int(labels.size()) != logits.n) throw std::invalid_argument("softmax_xent: label count");
    probs = Tensor4<T>::zeros(logits.n, 1, 1, logits.c);
    dlogits = Tensor4<T>::zeros(logits.n, 1, 1, logits.c);
    T loss = T(0);
    for (int ni = 0; ni < logits.n; ++ni) {
        const T* z = &logits.data[std::size_t(ni) * logits.c];
        T* p = &probs.data[std::size_t(ni) * logits.c];
        T zmax = *std::max_element(z, z + logits.c);
        T denom = T(0);
        for (int j = 0; j < logits.c; ++j) {
            p[j] = std::exp(z[j] - zmax);
            denom += p[j];
        }
        for (int j = 0; j < logits.c; ++j) p[j] /= denom;
        int y = labels[ni];
        if (y < 0 || y >= logits.c) throw std::invalid_argument("softmax_xent: bad label");
        loss -= std::log(std::max(p[y], T(1e-30)));
        T* d = &dlogits.data[std::size_t(ni) * logits.c];
        for (int j = 0; j < logits.c; ++j) d[j] = (p[j] - T(j == y)) / T(logits.n);
    }
    return loss / T(logits.n);
}

// ---------------------------------------------------------------------------

template <typename T>
class SequentialNet {
  public:
    SequentialNet() = default;
    SequentialNet(const NetworkSpec& spec, std::mt19937& rng) : spec_(spec) {
        std::array<int, 3> shape{spec.in_h, spec.in_w, spec.in_c};
        for (const auto& ls : spec.layers) {
            switch (ls.kind) {
                case LayerKind::conv:
                    layers_.push_back(std::make_unique<Conv2D<T>>(ls.kernel, shape[2],
                                                                  ls.out_channels, rng,
                                                                  spec.init_std));
                    break;
                case LayerKind::relu:
                    layers_.push_back(std::make_unique<ReLU<T>>());
                    break;
                case LayerKind::maxpool:
                    layers_.push_back(std::make_unique<MaxPool2D<T>>(ls.kernel, ls.stride));
                    break;
                case LayerKind::lrn:
                    layers_.push_back(
                        std::make_unique<LRN<T>>(ls.local_size, ls.alpha, ls.beta, ls.k));
                    break;
                case LayerKind::fc:
                    layers_.push_back(std::make_unique<Dense<T>>(shape[0] * shape[1] * shape[2],
                                                                 ls.out_channels, rng,
                                                                 spec.init_std));
                    break;
                case LayerKind::dropout:
                    layers_.push_back(std::make_unique<Dropout<T>>(ls.rate, rng()));
                    break;
            }
            shape = layers_.back()->out_shape(shape);
            shape_trace_.push_back(shape);
        }
    }

    const Tensor4<T>& forward(const Tensor4<T>& x, bool train) {
        acts_.resize(layers_.size() + 1);
        acts_[0] = x;
        for (std::size_t i = 0; i < layers_.size(); ++i)
            layers_[i]->forward(acts_[i], acts_[i + 1], train);
        return acts_.back();
    }

    /// Gradient w.r.t. the network input (for stacked/stream use).
    Tensor4<T> backward(const Tensor4<T>& dout) {
        Tensor4<T> grad = dout;
        Tensor4<T> din;
        for (int i = int(layers_.size()) - 1; i >= 0; --i) {
            layers_[i]->backward(acts_[i], grad, din);
            grad = std::move(din);
        }
        return grad;
    }

    std::vector<Param<T>*> params() {
        std::vector<Param<T>*> out;
        for (auto& l : layers_)
            for (auto* p : l->params()) out.push_back(p);
        return out;
    }

    const std::vector<std::array<int, 3>>& shape_trace() const { return shape_trace_; }
    const NetworkSpec& spec() const { return spec_; }
    std::vector<std::unique_ptr<Layer<T>>>& layers() { return layers_; }

    void freeze_dropout(bool frozen) {
        for (auto& l : layers_)
            if (auto* d = dynamic_cast<Dropout<T>*>(l.get())) d->freeze_mask(frozen);
    }

  private:
    NetworkSpec spec_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<Tensor4<T>> acts_;
    std::vector<std::array<int, 3>> shape_trace_;
};

/// Trainable classifier: either a single stream or the two-stream
/// conv-fusion variant. Input is always one HWC patch stack; the fused
/// model splits it into its two channel groups internally.
template <typename T>
class PatchClassifier {
  public:
    /// Single stream.
    PatchClassifier(const NetworkSpec& spec, std::uint32_t seed) : single_(true) {
        std::mt19937 rng(seed);
        stream_a_ = SequentialNet<T>(spec, rng);
    }

    /// Two-stream fusion: trunk_a on the first trunk_a.in_c channels,
    /// trunk_b on the rest; channel concat feeds the head.
    PatchClassifier(const NetworkSpec& trunk_a, const NetworkSpec& trunk_b,
                    const NetworkSpec& head, std::uint32_t seed)
        : single_(false) {
        std::mt19937 rng(seed);
        stream_a_ = SequentialNet<T>(trunk_a, rng);
        stream_b_ = SequentialNet<T>(trunk_b, rng);
        head_ = SequentialNet<T>(head, rng);
        auto sa = stream_a_.shape_trace().back();
        auto sb = stream_b_.shape_trace().back();
        if (sa[0] != sb[0] || sa[1] != sb[1])
            throw std::invalid_argument("PatchClassifier: trunk spatial shapes differ");
        if (head.in_h != sa[0] || head.in_w != sa[1] || head.in_c != sa[2] + sb[2])
            throw std::invalid_argument("PatchClassifier: head input shape mismatch");
    }

    bool single_stream() const { return single_; }
    int input_channels() const {
        return single_ ? stream_a_.spec().in_c : stream_a_.spec().in_c + stream_b_.spec().in_c;
    }

    const Tensor4<T>& forward(const Tensor4<T>& x, bool train) {
        if (single_) return stream_a_.forward(x, train);
        int ca = stream_a_.spec().in_c, cb = stream_b_.spec().in_c;
        if (x.c != ca + cb) throw std::invalid_argument("PatchClassifier: channel mismatch");
        Tensor4<T> xa = Tensor4<T>::zeros(x.n, x.h, x.w, ca);
        Tensor4<T> xb = Tensor4<T>::zeros(x.n, x.h, x.w, cb);
        split_channels(x, xa, xb);
        const Tensor4<T>& fa = stream_a_.forward(xa, train);
        const Tensor4<T>& fb = stream_b_.forward(xb, train);
        Tensor4<T> cat = Tensor4<T>::zeros(fa.n, fa.h, fa.w, fa.c + fb.c);
        concat_channels(fa, fb, cat);
        return head_.forward(cat, train);
    }

    void backward(const Tensor4<T>& dlogits) {
        if (single_) {
            stream_a_.backward(dlogits);
            return;
        }
        Tensor4<T> dcat = head_.backward(dlogits);
        int ca = stream_a_.shape_trace().back()[2];
        Tensor4<T> da = Tensor4<T>::zeros(dcat.n, dcat.h, dcat.w, ca);
        Tensor4<T> db = Tensor4<T>::zeros(dcat.n, dcat.h, dcat.w, dcat.c - ca);
        split_channels(dcat, da, db);
        stream_a_.backward(da);
        stream_b_.backward(db);
    }

    std::vector<Param<T>*> params() {
        auto out = stream_a_.params();
        if (!single_) {
            for (auto* p : stream_b_.params()) out.push_back(p);
            for (auto* p : head_.params()) out.push_back(p);
        }
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (auto* p : params()) n += p->w.size();
        return n;
    }

    void freeze_dropout(bool frozen) {
        stream_a_.freeze_dropout(frozen);
        if (!single_) {
            stream_b_.freeze_dropout(frozen);
            head_.freeze_dropout(frozen);
        }
    }

    nlohmann::json spec_json() const;

    SequentialNet<T>& stream_a() { return stream_a_; }
    SequentialNet<T>& stream_b() { return stream_b_; }
    SequentialNet<T>& head() { return head_; }

  private:
    static void split_channels(const Tensor4<T>& x, Tensor4<T>& a, Tensor4<T>& b) {
        std::size_t pixels = std::size_t(x.n) * x.h * x.w;
        for (std::size_t p = 0; p < pixels; ++p) {
            const T* src = &x.data[p * x.c];
            std::copy(src, src + a.c, &a.data[p * a.c]);
            std::copy(src + a.c, src + x.c, &b.data[p * b.c]);
        }
    }
    static void concat_channels(const Tensor4<T>& a, const Tensor4<T>& b, Tensor4<T>& out) {
        std::size_t pixels = std::size_t(a.n) * a.h * a.w;
        for (std::size_t p = 0; p < pixels; ++p) {
            std::copy(&a.data[p * a.c], &a.data[(p + 1) * a.c], &out.data[p * out.c]);
            std::copy(&b.data[p * b.c], &b.data[(p + 1) * b.c], &out.data[p * out.c + a.c]);
        }
    }

    bool single_;
    SequentialNet<T> stream_a_, stream_b_, head_;
};

template <typename T>
nlohmann::json PatchClassifier<T>::spec_json() const {
    nlohmann::json j;
    if (single_) {
        j["kind"] = "single";
        j["stream"] = network_spec_to_json(stream_a_.spec());
    } else {
        j["kind"] = "two_stream";
        j["trunk_a"] = network_spec_to_json(stream_a_.spec());
        j["trunk_b"] = network_spec_to_json(stream_b_.spec());
        j["head"] = network_spec_to_json(head_.spec());
    }
    return j;
}

template <typename T>
std::unique_ptr<PatchClassifier<T>> classifier_from_spec_json(const nlohmann::json& j,
                                                              std::uint32_t seed) {
    if (j.at("kind") == "single")
        return std::make_unique<PatchClassifier<T>>(network_spec_from_json(j.at("stream")), seed);
    return std::make_unique<PatchClassifier<T>>(network_spec_from_json(j.at("trunk_a")),
                                                network_spec_from_json(j.at("trunk_b")),
                                                network_spec_from_json(j.at("head")), seed);
}

// ---------------------------------------------------------------------------

struct TrainConfig {
    double lr0 = 0.001;
    double lr_decay_factor = 0.1;
    int lr_decay_every = 10;  // epochs
    double momentum = 0.9;
    double weight_decay = 0.0005;
    int batch = 512;
    int max_epochs = 30;

    void validate() const;
    double lr_at_epoch(int epoch) const {  // epoch is 0-based
        return lr0 * std::pow(lr_decay_factor, epoch / lr_decay_every);
    }
};

/// v <- mu*v - lr*(g + lambda*w); w <- w + v
template <typename T>
void sgd_step(std::vector<Param<T>*> params, const TrainConfig& cfg, int epoch) {
    T lr = T(cfg.lr_at_epoch(epoch));
    T mu = T(cfg.momentum), lambda = T(cfg.weight_decay);
    for (auto* p : params)
        for (std::size_t i = 0; i < p->w.size(); ++i) {
            p->mom[i] = mu * p->mom[i] - lr * (p->g[i] + lambda * p->w[i]);
            p->w[i] += p->mom[i];
        }
}

template <typename T>
void zero_grads(std::vector<Param<T>*> params) {
    for (auto* p : params) std::fill(p->g.begin(), p->g.end(), T(0));
}

}  // namespace tumorcast
