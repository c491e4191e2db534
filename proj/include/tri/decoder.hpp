#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace tri {

enum class Activation : std::uint32_t {
    identity = 0,
    softplus = 1,
    sigmoid = 2,
};

const char* activation_name(Activation a);

template <class T>
inline T activate(Activation a, T x) noexcept {
    switch (a) {
    case Activation::identity: return x;
    case Activation::softplus: return x > T(20) ? x : std::log1p(std::exp(x));
    case Activation::sigmoid: return T(1) / (T(1) + std::exp(-x));
    }
    return x;
}

/// Derivative of the activation, expressed through the pre-activation `x`.
template <class T>
inline T activate_grad(Activation a, T x) noexcept {
    switch (a) {
    case Activation::identity: return T(1);
    case Activation::softplus: return T(1) / (T(1) + std::exp(-x));
    case Activation::sigmoid: {
        const T s = T(1) / (T(1) + std::exp(-x));
        return s * (T(1) - s);
    }
    }
    return T(1);
}

template <class T>
struct DenseLayer {
    int in = 0;
    int out = 0;
    std::vector<T> weight; // out x in, row-major
    std::vector<T> bias;   // out

    bool operator==(const DenseLayer&) const = default;
};

/// Lightweight MLP mapping an aggregated plane feature to one density logit
/// plus F feature logits. Hidden layers use `hidden`; the density logit goes
/// through `density` and the features through `feature`.
template <class T>
struct BasicDecoder {
    std::vector<DenseLayer<T>> layers;
    Activation hidden = Activation::softplus;
    Activation density = Activation::softplus;
    Activation feature = Activation::sigmoid;

    int input_width() const { return layers.empty() ? 0 : layers.front().in; }
    int output_width() const { return layers.empty() ? 0 : layers.back().out; }
    int feature_width() const { return output_width() - 1; }
    int max_width() const;
    std::size_t parameter_count() const;

    /// Throws DomainError on inconsistent layer shapes, F < 3, or non-finite
    /// parameters.
    void validate() const;

    template <class U>
    BasicDecoder<U> cast() const {
        BasicDecoder<U> d;
        d.hidden = hidden;
        d.density = density;
        d.feature = feature;
        for (const auto& l : layers) {
            DenseLayer<U> m{l.in, l.out, {}, {}};
            m.weight.assign(l.weight.begin(), l.weight.end());
            m.bias.assign(l.bias.begin(), l.bias.end());
            d.layers.push_back(std::move(m));
        }
        return d;
    }

    bool operator==(const BasicDecoder&) const = default;
};

using FieldDecoder = BasicDecoder<float>;

/// Decoded field value at one point. `features` holds F channels after the
/// feature activation; the color is the first three of them.
struct FieldSample {
    double density = 0;
    std::vector<double> features;

    std::array<double, 3> color() const { return {features.at(0), features.at(1), features.at(2)}; }
    bool operator==(const FieldSample&) const = default;
};

/// Layer widths: input, hidden..., 1 + features.
FieldDecoder make_decoder(std::span<const int> widths, std::uint64_t seed);

/// Default configuration: C -> hidden (64) -> 1 + F (32), weights drawn from
/// N(0, 1/fan_in) with a fixed seed, biases zero.
FieldDecoder default_decoder(int input_width, int feature_width = 32, int hidden_width = 64,
                             std::uint64_t seed = 0x5eed'dec0'deULL);

/// All weights and biases zero: a constant field.
FieldDecoder zero_decoder(int input_width, int feature_width = 32, int hidden_width = 64);

/// Forward pass over `count` inputs laid out contiguously (count x C).
/// Writes count densities and count x F features. `scratch` is resized as
/// needed and may be reused across calls.
template <class T>
void decode_batch(const BasicDecoder<T>& dec, std::span<const T> inputs, std::size_t count,
                  std::span<T> density, std::span<T> features, std::vector<T>& scratch);

template <class T>
FieldSample decode(const BasicDecoder<T>& dec, std::span<const T> feat);

} // namespace tri
