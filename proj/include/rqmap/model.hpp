#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rqmap/layers.hpp"

namespace rqmap {

// A small fixed DAG of layers. Node inputs reference earlier node indices;
// -1 means the model input. Nodes [0, encoder_end) form the encoder E, the
// rest the decoder D; the latent code z is the output of node encoder_end-1.
template <typename T>
struct Model {
    struct Node {
        std::unique_ptr<Layer<T>> layer;
        std::vector<int> inputs;
    };

    // move-only: nodes own their layers
    Model() = default;
    Model(Model&&) noexcept = default;
    Model& operator=(Model&&) noexcept = default;
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    std::string arch;  // architecture identity string; transplant/checkpoint compatibility key
    int in_channels = 0;
    int encoder_end = 0;
    std::vector<Node> nodes;
    std::vector<int> skip_taps;  // encoder node indices consumed by decoder nodes

    int add(std::unique_ptr<Layer<T>> layer, std::vector<int> inputs) {
        nodes.push_back(Node{std::move(layer), std::move(inputs)});
        return static_cast<int>(nodes.size()) - 1;
    }

    Tensor<T> forward(const Tensor<T>& x) {
        run_nodes(x, 0, static_cast<int>(nodes.size()));
        return outs_.back();
    }

    // Encoder/decoder split used by the two-stage scheme: encode produces the
    // latent code (plus cached skip activations), decode finishes the pass.
    const Tensor<T>& encode(const Tensor<T>& x) {
        run_nodes(x, 0, encoder_end);
        return outs_[static_cast<std::size_t>(encoder_end - 1)];
    }

    Tensor<T> decode() {
        run_nodes(Tensor<T>{}, encoder_end, static_cast<int>(nodes.size()));
        return outs_.back();
    }

    // Backprop from a gradient w.r.t. the model output; parameter gradients
    // accumulate inside the layers. Returns the gradient w.r.t. the input.
    Tensor<T> backward(const Tensor<T>& gy) {
        const int n = static_cast<int>(nodes.size());
        std::vector<Tensor<T>> gouts(static_cast<std::size_t>(n));
        Tensor<T> ginput;
        gouts.back() = gy;
        for (int i = n - 1; i >= 0; --i) {
            Tensor<T>& g = gouts[static_cast<std::size_t>(i)];
            if (g.size() == 0) continue;  // node not on any path to the output
            auto gins = nodes[static_cast<std::size_t>(i)].layer->backward(g);
            const auto& inputs = nodes[static_cast<std::size_t>(i)].inputs;
            for (std::size_t j = 0; j < inputs.size(); ++j) {
                Tensor<T>& dst = inputs[j] < 0 ? ginput : gouts[static_cast<std::size_t>(inputs[j])];
                if (dst.size() == 0) {
                    dst = std::move(gins[j]);
                } else {
                    for (std::size_t u = 0; u < dst.size(); ++u) dst.v[u] += gins[j].v[u];
                }
            }
        }
        return ginput;
    }

    std::vector<ParamRef<T>> param_refs() {
        std::vector<ParamRef<T>> out;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (auto& p : nodes[i].layer->param_refs())
                out.push_back({"n" + std::to_string(i) + "." + nodes[i].layer->kind() + "." + p.name,
                               p.value, p.grad});
        return out;
    }

    void zero_grads() {
        for (auto& p : param_refs()) p.grad->fill(T(0));
    }

    void scale_grads(T s) {
        for (auto& p : param_refs())
            for (auto& g : p.grad->v) g *= s;
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (auto& p : param_refs()) n += p.value->size();
        return n;
    }

private:
    std::vector<Tensor<T>> outs_;

    void run_nodes(const Tensor<T>& x, int first, int last) {
        if (first == 0) {
            outs_.assign(nodes.size(), Tensor<T>{});
            input_ = x;
        }
        for (int i = first; i < last; ++i) {
            std::vector<const Tensor<T>*> ins;
            for (int j : nodes[static_cast<std::size_t>(i)].inputs)
                ins.push_back(j < 0 ? &input_ : &outs_[static_cast<std::size_t>(j)]);
            outs_[static_cast<std::size_t>(i)] = nodes[static_cast<std::size_t>(i)].layer->forward(ins);
        }
    }

    Tensor<T> input_;
};

// Exact count of trainable scalars.
template <typename T>
std::size_t count_params(Model<T>& m) {
    return m.param_count();
}

// Copy all parameters (encoder and decoder) from src into dst; dst's
// optimizer state is the caller's to reset. src is left untouched.
template <typename T>
void transplant_encoder(Model<T>& src, Model<T>& dst) {
    if (src.arch != dst.arch)
        throw TransplantError("architecture mismatch: '" + src.arch + "' vs '" + dst.arch + "'");
    auto sp = src.param_refs();
    auto dp = dst.param_refs();
    if (sp.size() != dp.size()) throw TransplantError("parameter tensor count differs");
    std::string diffs;
    for (std::size_t i = 0; i < sp.size(); ++i)
        if (sp[i].value->shape != dp[i].value->shape) diffs += sp[i].name + " ";
    if (!diffs.empty()) throw TransplantError("differing layers: " + diffs);
    for (std::size_t i = 0; i < sp.size(); ++i) dp[i].value->v = sp[i].value->v;
}

}  // namespace rqmap
