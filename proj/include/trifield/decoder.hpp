// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0
//
// Lightweight MLP decoders mapping aggregated features (plus an optional
// Fourier-encoded position) to a nonnegative density and a K-channel feature.
// Hidden activation is softplus throughout; the density channel also goes
// through softplus, and in the RGB preset the first three feature channels
// are squashed by the logistic.
//
// Weight layout is [in][out] row-major (w[k * out + j]), which makes the
// forward pass, the input-gradient pass and the weight-gradient accumulation
// all walk contiguous rows.

#pragma once

#include <numeric>
#include <optional>

#include "trifield/core.hpp"

namespace trifield {

// [x, sin(2^l pi x), cos(2^l pi x)] for l = 0..L-1, width 3 + 6L.
inline int fourier_width(int levels) { return 3 + 6 * levels; }

template <typename T>
void fourier_encode_into(int levels, const Vec3& x, std::span<T> out) {
    if (static_cast<int>(out.size()) != fourier_width(levels))
        throw contract_error("fourier_encode: output width mismatch");
    out[0] = static_cast<T>(x.x);
    out[1] = static_cast<T>(x.y);
    out[2] = static_cast<T>(x.z);
    double freq = M_PI;
    for (int l = 0; l < levels; ++l) {
        const int base = 3 + 6 * l;
        out[base + 0] = static_cast<T>(std::sin(freq * x.x));
        out[base + 1] = static_cast<T>(std::sin(freq * x.y));
        out[base + 2] = static_cast<T>(std::sin(freq * x.z));
        out[base + 3] = static_cast<T>(std::cos(freq * x.x));
        out[base + 4] = static_cast<T>(std::cos(freq * x.y));
        out[base + 5] = static_cast<T>(std::cos(freq * x.z));
        freq *= 2.0;
    }
}

template <typename T>
std::vector<T> fourier_encode(int levels, const Vec3& x) {
    std::vector<T> out(fourier_width(levels));
    fourier_encode_into<T>(levels, x, std::span<T>(out));
    return out;
}

template <typename T>
struct FieldDecoderT {
    struct Layer {
        int in_width = 0, out_width = 0;
        std::vector<T> w;  // [in][out] row-major
        std::vector<T> b;  // [out]
    };

    std::vector<Layer> layers;   // hidden... + final (out = 1 + K)
    int repr_channels = 0;       // C of the explicit representation (0 = implicit)
    bool use_encoding = false;
    int enc_levels = 0;
    int feature_channels = 0;    // K
    bool rgb_squash = false;     // logistic on the first min(3, K) feature channels

    int input_width() const {
        return repr_channels + (use_encoding ? fourier_width(enc_levels) : 0);
    }
    int output_width() const { return 1 + feature_channels; }
    int max_width() const {
        int m = input_width();
        for (const auto& l : layers) m = std::max(m, l.out_width);
        return m;
    }
    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.w.size() + l.b.size();
        return n;
    }

    void validate() const {
        if (layers.empty()) throw contract_error("FieldDecoder: no layers");
        int w = input_width();
        for (const auto& l : layers) {
            if (l.in_width != w) throw contract_error("FieldDecoder: layer widths do not chain");
            if (l.w.size() != static_cast<std::size_t>(l.in_width) * l.out_width ||
                l.b.size() != static_cast<std::size_t>(l.out_width))
                throw contract_error("FieldDecoder: layer array size mismatch");
            check_finite(std::span<const T>(l.w), "decoder weights");
            check_finite(std::span<const T>(l.b), "decoder biases");
            w = l.out_width;
        }
        if (w != output_width() || output_width() < 2)
            throw contract_error("FieldDecoder: output width must be 1 + K, K >= 1");
    }
};

using FieldDecoder = FieldDecoderT<float>;

template <typename T>
struct DecoderGradsT {
    struct LayerGrad {
        std::vector<T> dw, db;
    };
    std::vector<LayerGrad> layers;
};

template <typename T>
DecoderGradsT<T> make_decoder_grads(const FieldDecoderT<T>& dec) {
    DecoderGradsT<T> g;
    g.layers.resize(dec.layers.size());
    for (std::size_t i = 0; i < dec.layers.size(); ++i) {
        g.layers[i].dw.assign(dec.layers[i].w.size(), T(0));
        g.layers[i].db.assign(dec.layers[i].b.size(), T(0));
    }
    return g;
}

// Cached forward activations: acts[0] is the assembled input, acts[l] the
// post-softplus output of hidden layer l, acts.back() the raw final layer
// output, plus the squashed outputs for the output-nonlinearity gradients.
template <typename T>
struct DecodeCacheT {
    std::vector<std::vector<T>> acts;
    T sigma = T(0);               // softplus(raw density)
    std::vector<T> feature;       // post output-nonlinearity
    bool valid = false;
};

// Hidden-unit counts; decoder construction is free-form, presets below.
template <typename T>
FieldDecoderT<T> make_decoder(int repr_channels, const std::vector<int>& hidden,
                              int feature_channels, bool use_encoding, int enc_levels,
                              bool rgb_squash, std::uint64_t seed) {
    FieldDecoderT<T> dec;
    dec.repr_channels = repr_channels;
    dec.use_encoding = use_encoding;
    dec.enc_levels = enc_levels;
    dec.feature_channels = feature_channels;
    dec.rgb_squash = rgb_squash;
    int in = dec.input_width();
    if (in <= 0) throw input_error("make_decoder: empty input");
    std::vector<int> widths = hidden;
    widths.push_back(1 + feature_channels);
    for (std::size_t li = 0; li < widths.size(); ++li) {
        typename FieldDecoderT<T>::Layer layer;
        layer.in_width = in;
        layer.out_width = widths[li];
        layer.w.resize(static_cast<std::size_t>(in) * widths[li]);
        layer.b.assign(widths[li], T(0));
        CounterRng rng(seed, rng_stream::init(li));
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (auto& w : layer.w) w = static_cast<T>(rng.uniform(-bound, bound));
        dec.layers.push_back(std::move(layer));
        in = widths[li];
    }
    dec.validate();
    return dec;
}

// GAN preset: single hidden layer of 64 units, 32 feature channels, no
// positional or view inputs; features stay raw.
template <typename T>
FieldDecoderT<T> make_gan_decoder(int repr_channels, std::uint64_t seed) {
    return make_decoder<T>(repr_channels, {64}, 32, false, 0, false, seed);
}

// SSO preset: 128-unit hidden layers (default two of them), Fourier position
// encoding, 3 RGB channels squashed to [0,1].
template <typename T>
FieldDecoderT<T> make_sso_decoder(int repr_channels, std::uint64_t seed,
                                  int hidden_layers = 2, int enc_levels = 4) {
    std::vector<int> hidden(static_cast<std::size_t>(hidden_layers), 128);
    return make_decoder<T>(repr_channels, hidden, 3, true, enc_levels, true, seed);
}

namespace detail {

template <typename T>
void dense_forward(const typename FieldDecoderT<T>::Layer& layer,
                   std::span<const T> in, std::span<T> out) {
    const int ni = layer.in_width, no = layer.out_width;
    for (int j = 0; j < no; ++j) out[j] = layer.b[j];
    const T* w = layer.w.data();
    for (int k = 0; k < ni; ++k) {
        const T a = in[k];
        if (a == T(0)) continue;
        const T* row = w + static_cast<std::size_t>(k) * no;
        for (int j = 0; j < no; ++j) out[j] += a * row[j];
    }
}

}  // namespace detail

// Forward decode. feat must have length repr_channels; x is required when the
// decoder uses a positional encoding. Fills cache when given (needed for
// decode_backward).
template <typename T>
std::pair<T, std::vector<T>> decode(const FieldDecoderT<T>& dec, std::span<const T> feat,
                                    const std::optional<Vec3>& x = std::nullopt,
                                    DecodeCacheT<T>* cache = nullptr) {
    if (static_cast<int>(feat.size()) != dec.repr_channels)
        throw contract_error("decode: feature width mismatch");
    if (dec.use_encoding && !x)
        throw contract_error("decode: decoder requires a position");

    std::vector<T> input(dec.input_width());
    std::copy(feat.begin(), feat.end(), input.begin());
    if (dec.use_encoding)
        fourier_encode_into<T>(dec.enc_levels, *x,
                               std::span<T>(input).subspan(dec.repr_channels));

    std::vector<std::vector<T>> acts;
    acts.reserve(dec.layers.size() + 1);
    acts.push_back(std::move(input));
    for (std::size_t li = 0; li < dec.layers.size(); ++li) {
        const auto& layer = dec.layers[li];
        std::vector<T> out(layer.out_width);
        detail::dense_forward<T>(layer, std::span<const T>(acts.back()), std::span<T>(out));
        if (li + 1 < dec.layers.size())
            for (auto& v : out) v = softplus(v);
        acts.push_back(std::move(out));
    }

    const std::vector<T>& raw = acts.back();
    T sigma = softplus(raw[0]);
    std::vector<T> feature(raw.begin() + 1, raw.end());
    if (dec.rgb_squash) {
        const int squash = std::min(3, dec.feature_channels);
        for (int k = 0; k < squash; ++k) feature[k] = logistic(feature[k]);
    }

    if (cache) {
        cache->acts = std::move(acts);
        cache->sigma = sigma;
        cache->feature = feature;
        cache->valid = true;
    }
    return {sigma, std::move(feature)};
}

// Backward decode: accumulates weight/bias gradients into tape and returns the
// gradient w.r.t. the representation features (the encoding slice of the input
// gradient is dropped; positions are not trainable).
template <typename T>
std::vector<T> decode_backward(const FieldDecoderT<T>& dec, const DecodeCacheT<T>& cache,
                               T d_sigma, std::span<const T> d_feature,
                               DecoderGradsT<T>& tape) {
    if (!cache.valid) throw contract_error("decode_backward: missing forward cache");
    if (cache.acts.size() != dec.layers.size() + 1)
        throw contract_error("decode_backward: cache depth mismatch");
    if (static_cast<int>(d_feature.size()) != dec.feature_channels)
        throw contract_error("decode_backward: upstream width mismatch");
    if (tape.layers.size() != dec.layers.size())
        throw contract_error("decode_backward: tape shape mismatch");

    // Output nonlinearities.
    std::vector<T> delta(dec.output_width());
    delta[0] = d_sigma * softplus_grad_from_value(cache.sigma);
    const int squash = dec.rgb_squash ? std::min(3, dec.feature_channels) : 0;
    for (int k = 0; k < dec.feature_channels; ++k) {
        T g = d_feature[k];
        if (k < squash) {
            const T y = cache.feature[k];
            g *= y * (T(1) - y);
        }
        delta[1 + k] = g;
    }

    for (int li = static_cast<int>(dec.layers.size()) - 1; li >= 0; --li) {
        const auto& layer = dec.layers[li];
        const std::vector<T>& in_act = cache.acts[li];
        auto& lg = tape.layers[li];
        if (lg.dw.size() != layer.w.size() || lg.db.size() != layer.b.size())
            throw contract_error("decode_backward: tape layer shape mismatch");

        for (int j = 0; j < layer.out_width; ++j) lg.db[j] += delta[j];

        std::vector<T> d_in(layer.in_width);
        const T* w = layer.w.data();
        for (int k = 0; k < layer.in_width; ++k) {
            const T* row = w + static_cast<std::size_t>(k) * layer.out_width;
            T* grow = lg.dw.data() + static_cast<std::size_t>(k) * layer.out_width;
            const T a = in_act[k];
            T acc = T(0);
            for (int j = 0; j < layer.out_width; ++j) {
                acc += row[j] * delta[j];
                grow[j] += a * delta[j];
            }
            d_in[k] = acc;
        }

        if (li > 0) {
            // in_act holds post-softplus values of the previous hidden layer.
            for (int k = 0; k < layer.in_width; ++k)
                d_in[k] *= softplus_grad_from_value(in_act[k]);
        }
        delta = std::move(d_in);
    }

    delta.resize(dec.repr_channels);
    return delta;
}

}  // namespace trifield
