#include "tri/decoder.hpp"

#include <algorithm>
#include <string>

#include "tri/error.hpp"
#include "tri/rng.hpp"

namespace tri {

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::softplus: return "softplus";
    case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

template <class T>
int BasicDecoder<T>::max_width() const {
    int w = input_width();
    for (const auto& l : layers) w = std::max(w, l.out);
    return w;
}

template <class T>
std::size_t BasicDecoder<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

template <class T>
void BasicDecoder<T>::validate() const {
    if (layers.empty()) throw DomainError("decoder has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string name = "decoder layer " + std::to_string(i);
        if (l.in < 1 || l.out < 1) throw DomainError(name + " has a non-positive width");
        if (l.weight.size() != static_cast<std::size_t>(l.in) * l.out || l.bias.size() != static_cast<std::size_t>(l.out))
            throw DomainError(name + " parameter count does not match its widths");
        if (i > 0 && layers[i - 1].out != l.in) throw DomainError(name + " input does not match previous output");
        for (T w : l.weight)
            if (!std::isfinite(static_cast<double>(w))) throw DomainError(name + " has a non-finite weight");
        for (T b : l.bias)
            if (!std::isfinite(static_cast<double>(b))) throw DomainError(name + " has a non-finite bias");
    }
    if (feature_width() < 3) throw DomainError("decoder must output at least 1 + 3 channels");
}

FieldDecoder make_decoder(std::span<const int> widths, std::uint64_t seed) {
    if (widths.size() < 2) throw DomainError("make_decoder: need at least input and output widths");
    Rng rng(seed);
    FieldDecoder dec;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        DenseLayer<float> l{widths[i], widths[i + 1], {}, {}};
        if (l.in < 1 || l.out < 1) throw DomainError("make_decoder: widths must be positive");
        const double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
        l.weight.resize(static_cast<std::size_t>(l.in) * l.out);
        for (auto& w : l.weight) w = static_cast<float>(rng.normal(0.0, scale));
        l.bias.assign(l.out, 0.0f);
        dec.layers.push_back(std::move(l));
    }
    dec.validate();
    return dec;
}

FieldDecoder default_decoder(int input_width, int feature_width, int hidden_width, std::uint64_t seed) {
    const std::array<int, 3> widths{input_width, hidden_width, 1 + feature_width};
    return make_decoder(widths, seed);
}

FieldDecoder zero_decoder(int input_width, int feature_width, int hidden_width) {
    FieldDecoder dec = default_decoder(input_width, feature_width, hidden_width);
    for (auto& l : dec.layers) {
        std::fill(l.weight.begin(), l.weight.end(), 0.0f);
        std::fill(l.bias.begin(), l.bias.end(), 0.0f);
    }
    return dec;
}

template <class T>
void decode_batch(const BasicDecoder<T>& dec, std::span<const T> inputs, std::size_t count, std::span<T> density,
                  std::span<T> features, std::vector<T>& scratch) {
    const int C = dec.input_width();
    const int F = dec.feature_width();
    if (inputs.size() != count * C) throw DomainError("decode: input width does not match decoder");
    if (density.size() != count || features.size() != count * F) throw DomainError("decode: output size mismatch");

    const std::size_t width = dec.max_width();
    scratch.resize(2 * width);
    T* cur = scratch.data();
    T* nxt = scratch.data() + width;
    const std::size_t n_layers = dec.layers.size();

    for (std::size_t p = 0; p < count; ++p) {
        std::copy_n(inputs.data() + p * C, C, cur);
        for (std::size_t li = 0; li < n_layers; ++li) {
            const auto& l = dec.layers[li];
            const T* w = l.weight.data();
            for (int o = 0; o < l.out; ++o) {
                T acc = l.bias[o];
                const T* row = w + static_cast<std::size_t>(o) * l.in;
                for (int i = 0; i < l.in; ++i) acc += row[i] * cur[i];
                nxt[o] = acc;
            }
            if (li + 1 < n_layers)
                for (int o = 0; o < l.out; ++o) nxt[o] = activate(dec.hidden, nxt[o]);
            std::swap(cur, nxt);
        }
        density[p] = activate(dec.density, cur[0]);
        T* f = features.data() + p * F;
        for (int k = 0; k < F; ++k) f[k] = activate(dec.feature, cur[1 + k]);
    }
}

template <class T>
FieldSample decode(const BasicDecoder<T>& dec, std::span<const T> feat) {
    if (static_cast<int>(feat.size()) != dec.input_width())
        throw DomainError("decode: feature width " + std::to_string(feat.size()) + " does not match decoder input " +
                          std::to_string(dec.input_width()));
    const int F = dec.feature_width();
    T sigma{};
    std::vector<T> f(F);
    std::vector<T> scratch;
    decode_batch(dec, feat, 1, std::span<T>(&sigma, 1), std::span<T>(f), scratch);
    FieldSample s;
    s.density = static_cast<double>(sigma);
    s.features.assign(f.begin(), f.end());
    return s;
}

template struct BasicDecoder<float>;
template struct BasicDecoder<double>;
template void decode_batch(const BasicDecoder<float>&, std::span<const float>, std::size_t, std::span<float>,
                           std::span<float>, std::vector<float>&);
template void decode_batch(const BasicDecoder<double>&, std::span<const double>, std::size_t, std::span<double>,
                           std::span<double>, std::vector<double>&);
template FieldSample decode(const BasicDecoder<float>&, std::span<const float>);
template FieldSample decode(const BasicDecoder<double>&, std::span<const double>);

} // namespace tri
