#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "rqmap/rng.hpp"
#include "rqmap/tensor.hpp"

namespace rqmap {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatR<T>>;
template <typename T>
using CMapM = Eigen::Map<const MatR<T>>;

template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value;
    Tensor<T>* grad;
};

// im2col over a generic position grid: cols(row = py*pw + px, col = ci*k*k + ky*k + kx)
// = img(ci, py*stride - pad + ky, px*stride - pad + kx), zero outside.
// For a convolution the position grid is the output; for a transposed
// convolution it is the input (with img = output / its gradient).
template <typename T>
void im2col(const T* img, int cin, int ih, int iw, int k, int stride, int pad, int ph, int pw,
            T* cols) {
    const int patch = k * k;
    for (int py = 0; py < ph; ++py) {
        for (int px = 0; px < pw; ++px) {
            T* row = cols + (static_cast<std::size_t>(py) * pw + px) * cin * patch;
            const int x0 = px * stride - pad;
            const int lo = std::max(0, -x0);            // first in-bounds kx
            const int hi = std::min(k, iw - x0);        // one past last in-bounds kx
            for (int ci = 0; ci < cin; ++ci) {
                const T* plane = img + static_cast<std::size_t>(ci) * ih * iw;
                for (int ky = 0; ky < k; ++ky) {
                    const int y = py * stride - pad + ky;
                    T* dst = row + ci * patch + ky * k;
                    if (y < 0 || y >= ih || lo >= hi) {
                        for (int kx = 0; kx < k; ++kx) dst[kx] = T(0);
                        continue;
                    }
                    const T* src = plane + static_cast<std::size_t>(y) * iw + x0;
                    for (int kx = 0; kx < lo; ++kx) dst[kx] = T(0);
                    for (int kx = lo; kx < hi; ++kx) dst[kx] = src[kx];
                    for (int kx = hi; kx < k; ++kx) dst[kx] = T(0);
                }
            }
        }
    }
}

// scatter-add inverse of im2col
template <typename T>
void col2im_add(const T* cols, int cin, int ih, int iw, int k, int stride, int pad, int ph, int pw,
                T* img) {
    const int patch = k * k;
    for (int py = 0; py < ph; ++py) {
        for (int px = 0; px < pw; ++px) {
            const T* row = cols + (static_cast<std::size_t>(py) * pw + px) * cin * patch;
            const int x0 = px * stride - pad;
            const int lo = std::max(0, -x0);
            const int hi = std::min(k, iw - x0);
            if (lo >= hi) continue;
            for (int ci = 0; ci < cin; ++ci) {
                T* plane = img + static_cast<std::size_t>(ci) * ih * iw;
                for (int ky = 0; ky < k; ++ky) {
                    const int y = py * stride - pad + ky;
                    if (y < 0 || y >= ih) continue;
                    const T* src = row + ci * patch + ky * k;
                    T* dst = plane + static_cast<std::size_t>(y) * iw + x0;
                    for (int kx = lo; kx < hi; ++kx) dst[kx] += src[kx];
                }
            }
        }
    }
}

// Base class for all differentiable layers. forward caches whatever backward
// needs; backward must follow the matching forward call and accumulates into
// the parameter gradient buffers.
template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    virtual int arity() const { return 1; }
    virtual Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) = 0;
    virtual std::vector<Tensor<T>> backward(const Tensor<T>& gy) = 0;
    virtual std::vector<ParamRef<T>> param_refs() { return {}; }

protected:
    void check_finite(const Tensor<T>& t, const char* where) const {
        if (!t.finite()) throw NumericError(kind() + std::string(": non-finite values at ") + where);
    }
    const Tensor<T>& single(const std::vector<const Tensor<T>*>& xs) const {
        if (xs.size() != 1) throw ShapeError(kind() + ": expects exactly one input");
        return *xs[0];
    }
};

// ---------------------------------------------------------------------------

template <typename T>
class Linear : public Layer<T> {
public:
    Linear(int in, int out, Rng& rng, bool trunc_normal_init = false)
        : in_(in), out_(out), w_({out, in}), b_({out}), gw_({out, in}), gb_({out}) {
        if (trunc_normal_init) {
            for (auto& x : w_.v) x = static_cast<T>(rng.trunc_normal(0.02));
        } else {
            const double bound = 1.0 / std::sqrt(static_cast<double>(in));
            for (auto& x : w_.v) x = static_cast<T>(rng.uniform(-bound, bound));
        }
    }

    std::string kind() const override { return "linear"; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        const Tensor<T>& x = this->single(xs);
        if (x.shape.empty() || x.shape.back() != in_)
            throw ShapeError("linear: last dim " + x.shape_str() + " != " + std::to_string(in_));
        x_ = x;
        const int n = static_cast<int>(x.size()) / in_;
        std::vector<int> oshape = x.shape;
        oshape.back() = out_;
        Tensor<T> y(oshape);
        CMapM<T> xm(x.data(), n, in_);
        CMapM<T> wm(w_.data(), out_, in_);
        MapM<T> ym(y.data(), n, out_);
        ym.noalias() = xm * wm.transpose();
        CMapM<T> bm(b_.data(), 1, out_);
        ym.rowwise() += bm.row(0);
        this->check_finite(y, "output");
        return y;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        const int n = static_cast<int>(x_.size()) / in_;
        CMapM<T> gym(gy.data(), n, out_);
        CMapM<T> xm(x_.data(), n, in_);
        CMapM<T> wm(w_.data(), out_, in_);
        MapM<T> gwm(gw_.data(), out_, in_);
        MapM<T> gbm(gb_.data(), 1, out_);
        gwm.noalias() += gym.transpose() * xm;
        gbm.row(0) += gym.colwise().sum();
        Tensor<T> gx(x_.shape);
        MapM<T> gxm(gx.data(), n, in_);
        gxm.noalias() = gym * wm;
        return {std::move(gx)};
    }

    std::vector<ParamRef<T>> param_refs() override {
        return {{"w", &w_, &gw_}, {"b", &b_, &gb_}};
    }

private:
    int in_, out_;
    Tensor<T> w_, b_, gw_, gb_, x_;
};

template <typename T>
class Conv2d : public Layer<T> {
public:
    Conv2d(int cin, int cout, int k, int stride, int pad, Rng& rng)
        : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad),
          w_({cout, cin * k * k}), b_({cout}), gw_({cout, cin * k * k}), gb_({cout}) {
        // Kaiming-uniform: keeps activation variance roughly constant through
        // deep GELU conv stacks (1/sqrt(fan) decays ~6x per layer and starves
        // the middle layers of gradient)
        const double bound = std::sqrt(6.0 / (static_cast<double>(cin) * k * k));
        for (auto& x : w_.v) x = static_cast<T>(rng.uniform(-bound, bound));
    }

    std::string kind() const override { return "conv2d"; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        const Tensor<T>& x = this->single(xs);
        if (x.shape.size() != 3 || x.shape[0] != cin_)
            throw ShapeError("conv2d: expected (" + std::to_string(cin_) + ",H,W), got " + x.shape_str());
        ih_ = x.shape[1];
        iw_ = x.shape[2];
        oh_ = (ih_ + 2 * pad_ - k_) / stride_ + 1;
        ow_ = (iw_ + 2 * pad_ - k_) / stride_ + 1;
        if (oh_ <= 0 || ow_ <= 0) throw ShapeError("conv2d: output would be empty");
        Tensor<T> y({cout_, oh_, ow_});
        MapM<T> ym(y.data(), cout_, oh_ * ow_);
        CMapM<T> wm(w_.data(), cout_, cin_ * k_ * k_);
        if (k_ == 1 && stride_ == 1 && pad_ == 0) {
            // 1x1 convolution: plain channel-mixing matmul, no patch buffer
            x_ = x;
            CMapM<T> xm(x.data(), cin_, ih_ * iw_);
            ym.noalias() = wm * xm;
        } else if (stride_ == 1 && static_cast<long>(cout_) * cin_ * k_ * k_ <= 2048 && ow_ >= 16) {
            // small stride-1 kernel: direct accumulation beats im2col + GEMM
            x_ = x;
            cols_.clear();
            ym.setZero();
            for (int co = 0; co < cout_; ++co) {
                T* yplane = y.data() + static_cast<std::size_t>(co) * oh_ * ow_;
                for (int ci = 0; ci < cin_; ++ci) {
                    const T* xplane = x.data() + static_cast<std::size_t>(ci) * ih_ * iw_;
                    for (int ky = 0; ky < k_; ++ky) {
                        const int oy0 = std::max(0, pad_ - ky);
                        const int oy1 = std::min(oh_, ih_ + pad_ - ky);
                        for (int kx = 0; kx < k_; ++kx) {
                            const T w = w_.v[static_cast<std::size_t>(co) * cin_ * k_ * k_ +
                                             static_cast<std::size_t>(ci) * k_ * k_ + ky * k_ + kx];
                            const int ox0 = std::max(0, pad_ - kx);
                            const int ox1 = std::min(ow_, iw_ + pad_ - kx);
                            for (int oy = oy0; oy < oy1; ++oy) {
                                T* yr = yplane + static_cast<std::size_t>(oy) * ow_ + ox0;
                                const T* xr = xplane +
                                              static_cast<std::size_t>(oy - pad_ + ky) * iw_ +
                                              (ox0 - pad_ + kx);
                                for (int i = 0; i < ox1 - ox0; ++i) yr[i] += w * xr[i];
                            }
                        }
                    }
                }
            }
        } else {
            x_ = Tensor<T>();
            cols_.assign(static_cast<std::size_t>(oh_) * ow_ * cin_ * k_ * k_, T(0));
            im2col(x.data(), cin_, ih_, iw_, k_, stride_, pad_, oh_, ow_, cols_.data());
            CMapM<T> cm(cols_.data(), oh_ * ow_, cin_ * k_ * k_);
            ym.noalias() = wm * cm.transpose();
        }
        for (int co = 0; co < cout_; ++co) ym.row(co).array() += b_.v[static_cast<std::size_t>(co)];
        this->check_finite(y, "output");
        return y;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        CMapM<T> gym(gy.data(), cout_, oh_ * ow_);
        for (int co = 0; co < cout_; ++co) gb_.v[static_cast<std::size_t>(co)] += gym.row(co).sum();
        CMapM<T> wm(w_.data(), cout_, cin_ * k_ * k_);
        MapM<T> gwm(gw_.data(), cout_, cin_ * k_ * k_);
        if (k_ == 1 && stride_ == 1 && pad_ == 0) {
            CMapM<T> xm(x_.data(), cin_, ih_ * iw_);
            gwm.noalias() += gym * xm.transpose();
            Tensor<T> gx({cin_, ih_, iw_});
            MapM<T> gxm(gx.data(), cin_, ih_ * iw_);
            gxm.noalias() = wm.transpose() * gym;
            return {std::move(gx)};
        }
        if (cols_.empty()) {
            // forward took the direct path; materialise the patch matrix now
            cols_.assign(static_cast<std::size_t>(oh_) * ow_ * cin_ * k_ * k_, T(0));
            im2col(x_.data(), cin_, ih_, iw_, k_, stride_, pad_, oh_, ow_, cols_.data());
        }
        CMapM<T> cm(cols_.data(), oh_ * ow_, cin_ * k_ * k_);
        gwm.noalias() += gym * cm;
        // grad wrt cols, then scatter back to the input
        MatR<T> gcols(oh_ * ow_, cin_ * k_ * k_);
        gcols.noalias() = gym.transpose() * wm;
        Tensor<T> gx({cin_, ih_, iw_});
        col2im_add(gcols.data(), cin_, ih_, iw_, k_, stride_, pad_, oh_, ow_, gx.data());
        return {std::move(gx)};
    }

    std::vector<ParamRef<T>> param_refs() override {
        return {{"w", &w_, &gw_}, {"b", &b_, &gb_}};
    }

private:
    int cin_, cout_, k_, stride_, pad_;
    int ih_ = 0, iw_ = 0, oh_ = 0, ow_ = 0;
    Tensor<T> w_, b_, gw_, gb_;
    Tensor<T> x_;       // cached input (direct / 1x1 paths)
    AlignedVec<T> cols_;
};

template <typename T>
class TransposedConv2d : public Layer<T> {
public:
    // kernel 2*stride with pad stride/2 doubles the resolution exactly
    TransposedConv2d(int cin, int cout, int k, int stride, int pad, Rng& rng)
        : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad),
          w_({cin, cout * k * k}), b_({cout}), gw_({cin, cout * k * k}), gb_({cout}) {
        // Kaiming-uniform on the effective fan-in (cin*k^2/stride^2 inputs
        // contribute to each output cell)
        const double bound = std::sqrt(6.0 / (static_cast<double>(cin) * k * k)) * stride;
        for (auto& x : w_.v) x = static_cast<T>(rng.uniform(-bound, bound));
    }

    std::string kind() const override { return "transposed_conv2d"; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        const Tensor<T>& x = this->single(xs);
        if (x.shape.size() != 3 || x.shape[0] != cin_)
            throw ShapeError("transposed_conv2d: expected (" + std::to_string(cin_) + ",H,W), got " +
                             x.shape_str());
        x_ = x;
        ih_ = x.shape[1];
        iw_ = x.shape[2];
        oh_ = (ih_ - 1) * stride_ - 2 * pad_ + k_;
        ow_ = (iw_ - 1) * stride_ - 2 * pad_ + k_;
        Tensor<T> y({cout_, oh_, ow_});
        MatR<T> cols(ih_ * iw_, cout_ * k_ * k_);
        CMapM<T> xm(x.data(), cin_, ih_ * iw_);
        CMapM<T> wm(w_.data(), cin_, cout_ * k_ * k_);
        cols.noalias() = xm.transpose() * wm;
        col2im_add(cols.data(), cout_, oh_, ow_, k_, stride_, pad_, ih_, iw_, y.data());
        MapM<T> ym(y.data(), cout_, oh_ * ow_);
        for (int co = 0; co < cout_; ++co) ym.row(co).array() += b_.v[static_cast<std::size_t>(co)];
        this->check_finite(y, "output");
        return y;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        MatR<T> gcols(ih_ * iw_, cout_ * k_ * k_);
        im2col(gy.data(), cout_, oh_, ow_, k_, stride_, pad_, ih_, iw_, gcols.data());
        CMapM<T> xm(x_.data(), cin_, ih_ * iw_);
        MapM<T> gwm(gw_.data(), cin_, cout_ * k_ * k_);
        gwm.noalias() += xm * gcols;
        CMapM<T> gym(gy.data(), cout_, oh_ * ow_);
        for (int co = 0; co < cout_; ++co) gb_.v[static_cast<std::size_t>(co)] += gym.row(co).sum();
        Tensor<T> gx({cin_, ih_, iw_});
        MapM<T> gxm(gx.data(), cin_, ih_ * iw_);
        CMapM<T> wm(w_.data(), cin_, cout_ * k_ * k_);
        gxm.noalias() = wm * gcols.transpose();
        return {std::move(gx)};
    }

    std::vector<ParamRef<T>> param_refs() override {
        return {{"w", &w_, &gw_}, {"b", &b_, &gb_}};
    }

private:
    int cin_, cout_, k_, stride_, pad_;
    int ih_ = 0, iw_ = 0, oh_ = 0, ow_ = 0;
    Tensor<T> w_, b_, gw_, gb_, x_;
};

template <typename T>
class LayerNorm : public Layer<T> {
public:
    explicit LayerNorm(int dim, double eps = 1e-5)
        : dim_(dim), eps_(eps), gamma_({dim}), beta_({dim}), ggamma_({dim}), gbeta_({dim}) {
        gamma_.fill(T(1));
    }

    std::string kind() const override { return "layer_norm"; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        const Tensor<T>& x = this->single(xs);
        if (x.shape.empty() || x.shape.back() != dim_)
            throw ShapeError("layer_norm: last dim " + x.shape_str() + " != " + std::to_string(dim_));
        const int n = static_cast<int>(x.size()) / dim_;
        xhat_ = Tensor<T>(x.shape);
        rstd_.assign(static_cast<std::size_t>(n), T(0));
        Tensor<T> y(x.shape);
        for (int i = 0; i < n; ++i) {
            const T* row = x.data() + static_cast<std::size_t>(i) * dim_;
            T* xh = xhat_.data() + static_cast<std::size_t>(i) * dim_;
            T* yr = y.data() + static_cast<std::size_t>(i) * dim_;
            T mean = 0;
            for (int j = 0; j < dim_; ++j) mean += row[j];
            mean /= static_cast<T>(dim_);
            T var = 0;
            for (int j = 0; j < dim_; ++j) var += (row[j] - mean) * (row[j] - mean);
            var /= static_cast<T>(dim_);
            const T rstd = T(1) / std::sqrt(var + static_cast<T>(eps_));
            rstd_[static_cast<std::size_t>(i)] = rstd;
            for (int j = 0; j < dim_; ++j) {
                xh[j] = (row[j] - mean) * rstd;
                yr[j] = gamma_.v[static_cast<std::size_t>(j)] * xh[j] + beta_.v[static_cast<std::size_t>(j)];
            }
        }
        this->check_finite(y, "output");
        return y;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        const int n = static_cast<int>(gy.size()) / dim_;
        Tensor<T> gx(xhat_.shape);
        for (int i = 0; i < n; ++i) {
            const T* g = gy.data() + static_cast<std::size_t>(i) * dim_;
            const T* xh = xhat_.data() + static_cast<std::size_t>(i) * dim_;
            T* gxr = gx.data() + static_cast<std::size_t>(i) * dim_;
            T mean_g = 0, mean_gx = 0;
            for (int j = 0; j < dim_; ++j) {
                const T gh = g[j] * gamma_.v[static_cast<std::size_t>(j)];
                mean_g += gh;
                mean_gx += gh * xh[j];
                ggamma_.v[static_cast<std::size_t>(j)] += g[j] * xh[j];
                gbeta_.v[static_cast<std::size_t>(j)] += g[j];
            }
            mean_g /= static_cast<T>(dim_);
            mean_gx /= static_cast<T>(dim_);
            const T rstd = rstd_[static_cast<std::size_t>(i)];
            for (int j = 0; j < dim_; ++j) {
                const T gh = g[j] * gamma_.v[static_cast<std::size_t>(j)];
                gxr[j] = rstd * (gh - mean_g - xh[j] * mean_gx);
            }
        }
        return {std::move(gx)};
    }

    std::vector<ParamRef<T>> param_refs() override {
        return {{"gamma", &gamma_, &ggamma_}, {"beta", &beta_, &gbeta_}};
    }

private:
    int dim_;
    double eps_;
    Tensor<T> gamma_, beta_, ggamma_, gbeta_, xhat_;
    std::vector<T> rstd_;
};

// tanh-form GELU: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3))). The tanh
// form evaluates with vectorized elementwise kernels, which matters because
// activations dominate a CPU forward pass once the matmuls are fast.
template <typename T>
class Gelu : public Layer<T> {
public:
    std::string kind() const override { return "gelu"; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        const Tensor<T>& x = this->single(xs);
        x_ = x;
        const auto n = static_cast<Eigen::Index>(x.size());
        tanh_.resize(x.size());
        Tensor<T> y(x.shape);
        Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> xa(x.data(), n);
        Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>> ta(tanh_.data(), n);
        Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>> ya(y.data(), n);
        ta = ((xa + static_cast<T>(kC1) * xa.cube()) * static_cast<T>(kC0)).tanh();
        ya = static_cast<T>(0.5) * xa * (T(1) + ta);
        this->check_finite(y, "output");
        return y;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        const auto n = static_cast<Eigen::Index>(x_.size());
        Tensor<T> gx(x_.shape);
        Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> xa(x_.data(), n);
        Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> ta(tanh_.data(), n);
        Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> ga(gy.data(), n);
        Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>> gxa(gx.data(), n);
        // d/dx [0.5*x*(1+t)] = 0.5*(1+t) + 0.5*x*(1-t^2)*u'  with
        // u' = sqrt(2/pi)*(1 + 3*0.044715*x^2)
        gxa = ga * (static_cast<T>(0.5) * (T(1) + ta) +
                    static_cast<T>(0.5) * xa * (T(1) - ta.square()) * static_cast<T>(kC0) *
                        (T(1) + static_cast<T>(3.0 * kC1) * xa.square()));
        return {std::move(gx)};
    }

private:
    static constexpr double kC0 = 0.7978845608028654;  // sqrt(2/pi)
    static constexpr double kC1 = 0.044715;
    Tensor<T> x_;
    AlignedVec<T> tanh_;
};

template <typename T>
class Sigmoid : public Layer<T> {
public:
    std::string kind() const override { return "sigmoid"; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        const Tensor<T>& x = this->single(xs);
        y_ = Tensor<T>(x.shape);
        for (std::size_t i = 0; i < x.size(); ++i)
            y_.v[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x.v[i]))));
        return y_;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        Tensor<T> gx(y_.shape);
        for (std::size_t i = 0; i < gx.size(); ++i) gx.v[i] = gy.v[i] * y_.v[i] * (T(1) - y_.v[i]);
        return {std::move(gx)};
    }

private:
    Tensor<T> y_;
};

template <typename T>
class MultiHeadAttention : public Layer<T> {
public:
    MultiHeadAttention(int dim, int heads, Rng& rng)
        : dim_(dim), heads_(heads),
          wqkv_({3 * dim, dim}), bqkv_({3 * dim}), wo_({dim, dim}), bo_({dim}),
          gwqkv_({3 * dim, dim}), gbqkv_({3 * dim}), gwo_({dim, dim}), gbo_({dim}) {
        if (dim % heads != 0) throw ConfigError("multi_head_attention: embed_dim not divisible by heads");
        for (auto& x : wqkv_.v) x = static_cast<T>(rng.trunc_normal(0.02));
        for (auto& x : wo_.v) x = static_cast<T>(rng.trunc_normal(0.02));
    }

    std::string kind() const override { return "multi_head_attention"; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        const Tensor<T>& x = this->single(xs);
        if (x.shape.size() != 2 || x.shape[1] != dim_)
            throw ShapeError("multi_head_attention: expected (T," + std::to_string(dim_) + "), got " +
                             x.shape_str());
        x_ = x;
        t_ = x.shape[0];
        const int dh = dim_ / heads_;
        const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

        qkv_ = Tensor<T>({t_, 3 * dim_});
        CMapM<T> xm(x.data(), t_, dim_);
        CMapM<T> wm(wqkv_.data(), 3 * dim_, dim_);
        MapM<T> qkvm(qkv_.data(), t_, 3 * dim_);
        qkvm.noalias() = xm * wm.transpose();
        CMapM<T> bm(bqkv_.data(), 1, 3 * dim_);
        qkvm.rowwise() += bm.row(0);

        att_ = Tensor<T>({heads_, t_, t_});
        concat_ = Tensor<T>({t_, dim_});
        MapM<T> om(concat_.data(), t_, dim_);
        for (int h = 0; h < heads_; ++h) {
            auto q = qkvm.block(0, h * dh, t_, dh);
            auto k = qkvm.block(0, dim_ + h * dh, t_, dh);
            auto v = qkvm.block(0, 2 * dim_ + h * dh, t_, dh);
            MapM<T> a(att_.data() + static_cast<std::size_t>(h) * t_ * t_, t_, t_);
            a.noalias() = q * k.transpose() * scale;
            // row-wise softmax with max subtraction
            for (int i = 0; i < t_; ++i) {
                const T m = a.row(i).maxCoeff();
                a.row(i) = (a.row(i).array() - m).exp();
                a.row(i) /= a.row(i).sum();
            }
            om.block(0, h * dh, t_, dh).noalias() = a * v;
        }

        Tensor<T> y({t_, dim_});
        MapM<T> ym(y.data(), t_, dim_);
        CMapM<T> wom(wo_.data(), dim_, dim_);
        ym.noalias() = om * wom.transpose();
        CMapM<T> bom(bo_.data(), 1, dim_);
        ym.rowwise() += bom.row(0);
        this->check_finite(y, "output");
        return y;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        const int dh = dim_ / heads_;
        const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
        CMapM<T> gym(gy.data(), t_, dim_);
        CMapM<T> om(concat_.data(), t_, dim_);
        CMapM<T> wom(wo_.data(), dim_, dim_);
        MapM<T> gwom(gwo_.data(), dim_, dim_);
        MapM<T> gbom(gbo_.data(), 1, dim_);
        gwom.noalias() += gym.transpose() * om;
        gbom.row(0) += gym.colwise().sum();

        MatR<T> go(t_, dim_);
        go.noalias() = gym * wom;

        MapM<T> qkvm(qkv_.data(), t_, 3 * dim_);
        MatR<T> gqkv = MatR<T>::Zero(t_, 3 * dim_);
        for (int h = 0; h < heads_; ++h) {
            auto q = qkvm.block(0, h * dh, t_, dh);
            auto k = qkvm.block(0, dim_ + h * dh, t_, dh);
            auto v = qkvm.block(0, 2 * dim_ + h * dh, t_, dh);
            CMapM<T> a(att_.data() + static_cast<std::size_t>(h) * t_ * t_, t_, t_);
            auto goh = go.block(0, h * dh, t_, dh);

            MatR<T> ga(t_, t_);
            ga.noalias() = goh * v.transpose();
            gqkv.block(0, 2 * dim_ + h * dh, t_, dh).noalias() = a.transpose() * goh;
            // softmax backward: gs = a .* (ga - rowsum(ga .* a))
            MatR<T> gs(t_, t_);
            for (int i = 0; i < t_; ++i) {
                const T dot = (ga.row(i).array() * a.row(i).array()).sum();
                gs.row(i) = a.row(i).array() * (ga.row(i).array() - dot);
            }
            gqkv.block(0, h * dh, t_, dh).noalias() = gs * k * scale;
            gqkv.block(0, dim_ + h * dh, t_, dh).noalias() = gs.transpose() * q * scale;
        }

        CMapM<T> xm(x_.data(), t_, dim_);
        MapM<T> gwqkvm(gwqkv_.data(), 3 * dim_, dim_);
        MapM<T> gbqkvm(gbqkv_.data(), 1, 3 * dim_);
        gwqkvm.noalias() += gqkv.transpose() * xm;
        gbqkvm.row(0) += gqkv.colwise().sum();

        Tensor<T> gx({t_, dim_});
        MapM<T> gxm(gx.data(), t_, dim_);
        CMapM<T> wm(wqkv_.data(), 3 * dim_, dim_);
        gxm.noalias() = gqkv * wm;
        return {std::move(gx)};
    }

    std::vector<ParamRef<T>> param_refs() override {
        return {{"wqkv", &wqkv_, &gwqkv_},
                {"bqkv", &bqkv_, &gbqkv_},
                {"wo", &wo_, &gwo_},
                {"bo", &bo_, &gbo_}};
    }

private:
    int dim_, heads_;
    int t_ = 0;
    Tensor<T> wqkv_, bqkv_, wo_, bo_;
    Tensor<T> gwqkv_, gbqkv_, gwo_, gbo_;
    Tensor<T> x_, qkv_, att_, concat_;
};

// Patchify + linear projection + learned positional embedding -> (T, dim) tokens.
template <typename T>
class PatchEmbed : public Layer<T> {
public:
    PatchEmbed(int cin, int dim, int patch, int grid, Rng& rng)
        : cin_(cin), dim_(dim), patch_(patch), grid_(grid),
          w_({dim, cin * patch * patch}), b_({dim}), pos_({grid * grid, dim}),
          gw_({dim, cin * patch * patch}), gb_({dim}), gpos_({grid * grid, dim}) {
        for (auto& x : w_.v) x = static_cast<T>(rng.trunc_normal(0.02));
        for (auto& x : pos_.v) x = static_cast<T>(rng.trunc_normal(0.02));
    }

    std::string kind() const override { return "patch_embed"; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        const Tensor<T>& x = this->single(xs);
        const int img = grid_ * patch_;
        if (x.shape.size() != 3 || x.shape[0] != cin_ || x.shape[1] != img || x.shape[2] != img)
            throw ShapeError("patch_embed: expected (" + std::to_string(cin_) + "," +
                             std::to_string(img) + "," + std::to_string(img) + "), got " + x.shape_str());
        const int t = grid_ * grid_;
        const int pk = cin_ * patch_ * patch_;
        cols_.assign(static_cast<std::size_t>(t) * pk, T(0));
        im2col(x.data(), cin_, img, img, patch_, patch_, 0, grid_, grid_, cols_.data());
        Tensor<T> y({t, dim_});
        CMapM<T> cm(cols_.data(), t, pk);
        CMapM<T> wm(w_.data(), dim_, pk);
        MapM<T> ym(y.data(), t, dim_);
        ym.noalias() = cm * wm.transpose();
        CMapM<T> bm(b_.data(), 1, dim_);
        ym.rowwise() += bm.row(0);
        CMapM<T> pm(pos_.data(), t, dim_);
        ym += pm;
        this->check_finite(y, "output");
        return y;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        const int t = grid_ * grid_;
        const int pk = cin_ * patch_ * patch_;
        const int img = grid_ * patch_;
        CMapM<T> gym(gy.data(), t, dim_);
        CMapM<T> cm(cols_.data(), t, pk);
        MapM<T> gwm(gw_.data(), dim_, pk);
        MapM<T> gbm(gb_.data(), 1, dim_);
        MapM<T> gpm(gpos_.data(), t, dim_);
        gwm.noalias() += gym.transpose() * cm;
        gbm.row(0) += gym.colwise().sum();
        gpm += gym;
        MatR<T> gcols(t, pk);
        CMapM<T> wm(w_.data(), dim_, pk);
        gcols.noalias() = gym * wm;
        Tensor<T> gx({cin_, img, img});
        col2im_add(gcols.data(), cin_, img, img, patch_, patch_, 0, grid_, grid_, gx.data());
        return {std::move(gx)};
    }

    std::vector<ParamRef<T>> param_refs() override {
        return {{"w", &w_, &gw_}, {"b", &b_, &gb_}, {"pos", &pos_, &gpos_}};
    }

private:
    int cin_, dim_, patch_, grid_;
    Tensor<T> w_, b_, pos_, gw_, gb_, gpos_;
    AlignedVec<T> cols_;
};

// (T, D) tokens -> (D, g, g) feature grid, token order row-major over patches.
template <typename T>
class TokensToGrid : public Layer<T> {
public:
    TokensToGrid(int grid, int dim) : grid_(grid), dim_(dim) {}

    std::string kind() const override { return "reshape"; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        const Tensor<T>& x = this->single(xs);
        const int t = grid_ * grid_;
        if (x.shape.size() != 2 || x.shape[0] != t || x.shape[1] != dim_)
            throw ShapeError("tokens_to_grid: expected (" + std::to_string(t) + "," +
                             std::to_string(dim_) + "), got " + x.shape_str());
        Tensor<T> y({dim_, grid_, grid_});
        for (int i = 0; i < t; ++i)
            for (int d = 0; d < dim_; ++d)
                y.v[static_cast<std::size_t>(d) * t + i] = x.v[static_cast<std::size_t>(i) * dim_ + d];
        return y;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        const int t = grid_ * grid_;
        Tensor<T> gx({t, dim_});
        for (int i = 0; i < t; ++i)
            for (int d = 0; d < dim_; ++d)
                gx.v[static_cast<std::size_t>(i) * dim_ + d] = gy.v[static_cast<std::size_t>(d) * t + i];
        return {std::move(gx)};
    }

private:
    int grid_, dim_;
};

// Fixed reshape, e.g. (k,64,64) <-> (1, k*64*64) for the MLP backbone.
template <typename T>
class Reshape : public Layer<T> {
public:
    explicit Reshape(std::vector<int> out_shape) : out_shape_(std::move(out_shape)) {}

    std::string kind() const override { return "reshape"; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        const Tensor<T>& x = this->single(xs);
        if (x.size() != Tensor<T>::count(out_shape_))
            throw ShapeError("reshape: element count mismatch for " + x.shape_str());
        in_shape_ = x.shape;
        return Tensor<T>(out_shape_, x.v);
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        return {Tensor<T>(in_shape_, gy.v)};
    }

private:
    std::vector<int> out_shape_, in_shape_;
};

// Residual sum of two same-shape inputs.
template <typename T>
class Add : public Layer<T> {
public:
    std::string kind() const override { return "add"; }
    int arity() const override { return 2; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        if (xs.size() != 2 || !xs[0]->same_shape(*xs[1])) throw ShapeError("add: needs two same-shape inputs");
        Tensor<T> y = *xs[0];
        for (std::size_t i = 0; i < y.size(); ++i) y.v[i] += xs[1]->v[i];
        return y;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override { return {gy, gy}; }
};

// Channel-wise concatenation of two (c,H,W) inputs (the skip-connection join).
template <typename T>
class ConcatSkip : public Layer<T> {
public:
    std::string kind() const override { return "concat_skip"; }
    int arity() const override { return 2; }

    Tensor<T> forward(const std::vector<const Tensor<T>*>& xs) override {
        if (xs.size() != 2) throw ShapeError("concat_skip: needs two inputs");
        const Tensor<T>& a = *xs[0];
        const Tensor<T>& b = *xs[1];
        if (a.shape.size() != 3 || b.shape.size() != 3 || a.shape[1] != b.shape[1] ||
            a.shape[2] != b.shape[2])
            throw ShapeError("concat_skip: spatial dims differ: " + a.shape_str() + " vs " + b.shape_str());
        c0_ = a.shape[0];
        c1_ = b.shape[0];
        Tensor<T> y({c0_ + c1_, a.shape[1], a.shape[2]});
        std::copy(a.v.begin(), a.v.end(), y.v.begin());
        std::copy(b.v.begin(), b.v.end(), y.v.begin() + static_cast<std::ptrdiff_t>(a.size()));
        return y;
    }

    std::vector<Tensor<T>> backward(const Tensor<T>& gy) override {
        const int h = gy.shape[1], w = gy.shape[2];
        Tensor<T> ga({c0_, h, w}), gb({c1_, h, w});
        std::copy(gy.v.begin(), gy.v.begin() + static_cast<std::ptrdiff_t>(ga.size()), ga.v.begin());
        std::copy(gy.v.begin() + static_cast<std::ptrdiff_t>(ga.size()), gy.v.end(), gb.v.begin());
        return {std::move(ga), std::move(gb)};
    }

private:
    int c0_ = 0, c1_ = 0;
};

}  // namespace rqmap
