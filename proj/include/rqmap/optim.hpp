#pragma once

#include <cmath>
#include <vector>

#include "rqmap/model.hpp"

namespace rqmap {

// Mean squared error over all elements; gradient is 2*(pred-target)/N.
// Accumulation in double so the value is summation-order stable.
template <typename T>
std::pair<double, Tensor<T>> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    if (!pred.same_shape(target))
        throw ShapeError("mse_loss: shapes differ: " + pred.shape_str() + " vs " + target.shape_str());
    const double n = static_cast<double>(pred.size());
    double acc = 0.0;
    Tensor<T> grad(pred.shape);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
        acc += d * d;
        grad.v[i] = static_cast<T>(2.0 * d / n);
    }
    return {acc / n, std::move(grad)};
}

// Standard Adam with bias correction. Moments live here so a model can be
// reused with a fresh optimizer (e.g. after a weight transplant).
template <typename T>
class Adam {
public:
    explicit Adam(Model<T>& model, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        if (lr <= 0) throw ConfigError("lr must be > 0");
        for (auto& p : model.param_refs()) {
            m_.emplace_back(p.value->size(), T(0));
            v_.emplace_back(p.value->size(), T(0));
        }
    }

    int step_count() const { return step_; }
    double lr() const { return lr_; }
    void set_lr(double lr) {
        if (lr <= 0) throw ConfigError("lr must be > 0");
        lr_ = lr;
    }
    double beta1() const { return beta1_; }
    double beta2() const { return beta2_; }
    double eps() const { return eps_; }

    // Applies one update from the gradients currently accumulated in the
    // model. Throws (without touching any state) if a gradient is non-finite.
    void step(Model<T>& model) {
        auto params = model.param_refs();
        if (params.size() != m_.size()) throw ShapeError("adam: model/optimizer mismatch");
        for (auto& p : params)
            if (!p.grad->finite()) throw NumericError("adam: NaN/Inf in gradients, step aborted");

        ++step_;
        const double bc1 = 1.0 - std::pow(beta1_, step_);
        const double bc2 = 1.0 - std::pow(beta2_, step_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            T* w = params[i].value->data();
            const T* g = params[i].grad->data();
            T* m = m_[i].data();
            T* v = v_[i].data();
            const std::size_t n = params[i].value->size();
            for (std::size_t j = 0; j < n; ++j) {
                m[j] = static_cast<T>(beta1_ * m[j] + (1.0 - beta1_) * g[j]);
                v[j] = static_cast<T>(beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j]);
                const double mhat = m[j] / bc1;
                const double vhat = v[j] / bc2;
                w[j] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    // moment access for checkpointing
    std::vector<std::vector<T>>& moments1() { return m_; }
    std::vector<std::vector<T>>& moments2() { return v_; }
    void set_step(int s) { step_ = s; }

private:
    double lr_, beta1_, beta2_, eps_;
    int step_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

// Compares backprop gradients of the MSE loss against central finite
// differences on a random subset of parameter coordinates. Returns the
// maximum relative error. Meant for double-precision models.
template <typename T>
double grad_check(Model<T>& model, const Tensor<T>& input, const Tensor<T>& target, double fd_eps,
                  int n_coords, std::uint64_t seed) {
    model.zero_grads();
    auto [loss0, gloss] = mse_loss(model.forward(input), target);
    (void)loss0;
    model.backward(gloss);

    auto params = model.param_refs();
    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t i = 0; i < params.size(); ++i)
        for (std::size_t j = 0; j < params[i].value->size(); ++j) coords.push_back({i, j});
    Rng rng(stream_seed(seed, "grad-check"));
    rng.shuffle(coords);
    if (static_cast<int>(coords.size()) > n_coords) coords.resize(static_cast<std::size_t>(n_coords));

    double max_rel = 0.0;
    for (auto [pi, ci] : coords) {
        T& w = params[pi].value->v[ci];
        const T saved = w;
        w = saved + static_cast<T>(fd_eps);
        const double lp = mse_loss(model.forward(input), target).first;
        w = saved - static_cast<T>(fd_eps);
        const double lm = mse_loss(model.forward(input), target).first;
        w = saved;
        const double numeric = (lp - lm) / (2.0 * fd_eps);
        const double analytic = static_cast<double>(params[pi].grad->v[ci]);
        const double rel = std::abs(numeric - analytic) / std::max(1e-6, std::abs(numeric) + std::abs(analytic));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace rqmap
