#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "softbound/rng.hpp"

namespace softbound {

/// Dense row-major matrix; rows index the layer's outputs.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double &at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct Layer {
    Matrix weights;
    std::vector<double> bias;
};

/// Feedforward ReLU network; the last layer's affine output is the logits.
struct Mlp {
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.front().weights.cols; }
    std::size_t output_dim() const { return layers.back().weights.rows; }
    std::size_t num_hidden() const { return layers.size() - 1; }

    void validate() const
    {
        if (layers.empty())
            throw std::invalid_argument("Mlp: no layers");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const Layer &layer = layers[l];
            if (layer.weights.rows == 0 || layer.weights.cols == 0)
                throw std::invalid_argument("Mlp: empty layer");
            if (layer.bias.size() != layer.weights.rows)
                throw std::invalid_argument("Mlp: bias size mismatch");
            if (l > 0 && layer.weights.cols != layers[l - 1].weights.rows)
                throw std::invalid_argument("Mlp: consecutive layer dimensions incompatible");
        }
    }
};

/// Ensemble averaging member softmax probabilities.
struct Ensemble {
    std::vector<Mlp> members;

    std::size_t input_dim() const { return members.front().input_dim(); }
    std::size_t output_dim() const { return members.front().output_dim(); }

    void validate() const
    {
        if (members.empty())
            throw std::invalid_argument("Ensemble: no members");
        for (const Mlp &m : members) {
            m.validate();
            if (m.input_dim() != input_dim() || m.output_dim() != output_dim())
                throw std::invalid_argument("Ensemble: member dimensions differ");
        }
    }
};

inline std::vector<double> affine_apply(const Layer &layer, std::span<const double> x)
{
    if (x.size() != layer.weights.cols)
        throw std::invalid_argument("affine_apply: dimension mismatch");
    std::vector<double> z(layer.weights.rows);
    for (std::size_t i = 0; i < layer.weights.rows; ++i) {
        double acc = layer.bias[i];
        for (std::size_t j = 0; j < layer.weights.cols; ++j)
            acc += layer.weights.at(i, j) * x[j];
        z[i] = acc;
    }
    return z;
}

inline std::vector<double> forward(const Mlp &net, std::span<const double> x)
{
    std::vector<double> h(x.begin(), x.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        h = affine_apply(net.layers[l], h);
        if (l + 1 < net.layers.size())
            for (double &v : h)
                v = std::max(v, 0.0);
    }
    return h;
}

/// Pre- and post-activation values of every layer for one input.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;  // z per affine layer (last = logits)
    std::vector<std::vector<double>> post; // relu(z) per hidden layer
};

inline ForwardTrace forward_trace(const Mlp &net, std::span<const double> x)
{
    ForwardTrace trace;
    std::vector<double> h(x.begin(), x.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        std::vector<double> z = affine_apply(net.layers[l], h);
        trace.pre.push_back(z);
        if (l + 1 < net.layers.size()) {
            for (double &v : z)
                v = std::max(v, 0.0);
            trace.post.push_back(z);
            h = std::move(z);
        }
    }
    return trace;
}

/// Sound pre-activation intervals per affine layer, from sign-split
/// interval arithmetic over an l_inf ball around the center.
struct LayerBounds {
    std::vector<std::vector<double>> lo;
    std::vector<std::vector<double>> hi;

    std::size_t layers() const { return lo.size(); }
};

inline LayerBounds interval_propagate(const Mlp &net, std::span<const double> center,
                                      double radius)
{
    if (radius < 0.0)
        throw std::invalid_argument("interval_propagate: negative radius");
    std::vector<double> x_lo(center.begin(), center.end());
    std::vector<double> x_hi(center.begin(), center.end());
    for (std::size_t j = 0; j < x_lo.size(); ++j) {
        x_lo[j] -= radius;
        x_hi[j] += radius;
    }
    LayerBounds bounds;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer &layer = net.layers[l];
        std::vector<double> z_lo(layer.weights.rows), z_hi(layer.weights.rows);
        for (std::size_t i = 0; i < layer.weights.rows; ++i) {
            double lo_acc = layer.bias[i], hi_acc = layer.bias[i];
            for (std::size_t j = 0; j < layer.weights.cols; ++j) {
                double w = layer.weights.at(i, j);
                if (w >= 0.0) {
                    lo_acc += w * x_lo[j];
                    hi_acc += w * x_hi[j];
                } else {
                    lo_acc += w * x_hi[j];
                    hi_acc += w * x_lo[j];
                }
            }
            z_lo[i] = lo_acc;
            z_hi[i] = hi_acc;
        }
        bounds.lo.push_back(z_lo);
        bounds.hi.push_back(z_hi);
        if (l + 1 < net.layers.size()) {
            for (std::size_t i = 0; i < z_lo.size(); ++i) {
                z_lo[i] = std::max(z_lo[i], 0.0);
                z_hi[i] = std::max(z_hi[i], 0.0);
            }
            x_lo = std::move(z_lo);
            x_hi = std::move(z_hi);
        }
    }
    return bounds;
}

/// Random network with He-scaled weights; used by gen-net and the test
/// harnesses in place of trained models.
inline Mlp random_mlp(std::span<const std::size_t> dims, Xoshiro256pp &rng)
{
    if (dims.size() < 2)
        throw std::invalid_argument("random_mlp: need input and output dims");
    Mlp net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.weights = Matrix(dims[l + 1], dims[l]);
        double scale = std::sqrt(2.0 / static_cast<double>(dims[l]));
        for (double &w : layer.weights.data)
            w = scale * rng.normal();
        layer.bias.resize(dims[l + 1]);
        for (double &b : layer.bias)
            b = 0.1 * rng.normal();
        net.layers.push_back(std::move(layer));
    }
    return net;
}

inline Ensemble random_ensemble(std::span<const std::size_t> dims, std::size_t members,
                                std::uint64_t seed)
{
    Ensemble e;
    for (std::size_t m = 0; m < members; ++m) {
        Xoshiro256pp rng = derive_stream(seed, m);
        e.members.push_back(random_mlp(dims, rng));
    }
    e.validate();
    return e;
}

} // namespace softbound
