// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0
//
// A FieldModel pairs a scene representation (tri-plane, voxel grid, or none
// for fully implicit) with a FieldDecoder. Positions handed to the encoder are
// normalized to [-1,1]^3 by the cube side so every representation sees the
// same coordinate convention.

#pragma once

#include "trifield/decoder.hpp"
#include "trifield/fields.hpp"

namespace trifield {

enum class ReprKind : std::uint8_t { TriPlane = 0, Voxel = 1, Implicit = 2 };

inline const char* repr_kind_name(ReprKind k) {
    switch (k) {
        case ReprKind::TriPlane: return "triplane";
        case ReprKind::Voxel: return "voxel";
        case ReprKind::Implicit: return "implicit";
    }
    return "?";
}

inline ReprKind repr_kind_from_name(const std::string& s) {
    if (s == "triplane") return ReprKind::TriPlane;
    if (s == "voxel") return ReprKind::Voxel;
    if (s == "implicit") return ReprKind::Implicit;
    throw input_error("unknown representation kind: " + s);
}

template <typename T>
struct FieldModelT {
    ReprKind kind = ReprKind::Implicit;
    TriPlaneT<T> triplane;
    VoxelGridT<T> voxel;
    FieldDecoderT<T> decoder;
    double side = 2.0;

    int repr_channels() const {
        switch (kind) {
            case ReprKind::TriPlane: return triplane.channels;
            case ReprKind::Voxel: return voxel.channels;
            case ReprKind::Implicit: return 0;
        }
        return 0;
    }

    std::size_t repr_param_count() const {
        switch (kind) {
            case ReprKind::TriPlane: return triplane.param_count();
            case ReprKind::Voxel: return voxel.param_count();
            case ReprKind::Implicit: return 0;
        }
        return 0;
    }

    std::size_t param_count() const { return repr_param_count() + decoder.param_count(); }

    void validate() const {
        if (kind == ReprKind::TriPlane) triplane.validate();
        if (kind == ReprKind::Voxel) voxel.validate();
        decoder.validate();
        if (decoder.repr_channels != repr_channels())
            throw contract_error("FieldModel: decoder input does not match representation");
    }
};

using FieldModel = FieldModelT<float>;

// Per-sample cache for the query -> decode chain.
template <typename T>
struct SampleCacheT {
    Vec3 point;
    std::vector<T> feat;  // representation features before the decoder
    DecodeCacheT<T> decode;
};

// Gradient accumulators mirroring every trainable array of a model.
template <typename T>
struct GradientTapeT {
    PlaneGradsT<T> planes;
    VoxelGradsT<T> voxels;
    DecoderGradsT<T> decoder;

    void zero() {
        for (auto& p : planes) std::fill(p.begin(), p.end(), T(0));
        std::fill(voxels.begin(), voxels.end(), T(0));
        for (auto& l : decoder.layers) {
            std::fill(l.dw.begin(), l.dw.end(), T(0));
            std::fill(l.db.begin(), l.db.end(), T(0));
        }
    }

    void add(const GradientTapeT& o) {
        for (int p = 0; p < 3; ++p)
            for (std::size_t i = 0; i < planes[p].size(); ++i) planes[p][i] += o.planes[p][i];
        for (std::size_t i = 0; i < voxels.size(); ++i) voxels[i] += o.voxels[i];
        for (std::size_t l = 0; l < decoder.layers.size(); ++l) {
            auto& a = decoder.layers[l];
            const auto& b = o.decoder.layers[l];
            for (std::size_t i = 0; i < a.dw.size(); ++i) a.dw[i] += b.dw[i];
            for (std::size_t i = 0; i < a.db.size(); ++i) a.db[i] += b.db[i];
        }
    }
};

using GradientTape = GradientTapeT<float>;

template <typename T>
GradientTapeT<T> make_tape(const FieldModelT<T>& model) {
    GradientTapeT<T> tape;
    if (model.kind == ReprKind::TriPlane)
        for (int p = 0; p < 3; ++p) tape.planes[p].assign(model.triplane.planes[p].size(), T(0));
    if (model.kind == ReprKind::Voxel) tape.voxels.assign(model.voxel.values.size(), T(0));
    tape.decoder = make_decoder_grads(model.decoder);
    return tape;
}

// Full field evaluation: representation query followed by the decoder.
template <typename T>
std::pair<T, std::vector<T>> query_field(const FieldModelT<T>& model, const Vec3& x,
                                         SampleCacheT<T>* cache = nullptr) {
    std::vector<T> feat(model.repr_channels(), T(0));
    if (model.kind == ReprKind::TriPlane)
        triplane_query_into(model.triplane, x, std::span<T>(feat));
    else if (model.kind == ReprKind::Voxel)
        voxel_query_into(model.voxel, x, std::span<T>(feat));

    // Normalized coordinates for the positional encoding.
    const double s = 2.0 / model.side;
    const Vec3 q{x.x * s, x.y * s, x.z * s};

    if (cache) {
        cache->point = x;
        cache->feat = feat;
        auto out = decode<T>(model.decoder, std::span<const T>(cache->feat),
                             model.decoder.use_encoding ? std::optional<Vec3>(q) : std::nullopt,
                             &cache->decode);
        return out;
    }
    return decode<T>(model.decoder, std::span<const T>(feat),
                     model.decoder.use_encoding ? std::optional<Vec3>(q) : std::nullopt);
}

// Density-only convenience used by the density regularizer and geometry export.
template <typename T>
T query_density(const FieldModelT<T>& model, const Vec3& x) {
    return query_field(model, x).first;
}

// Backward through decoder and representation into the tape.
template <typename T>
void query_field_backward(const FieldModelT<T>& model, const SampleCacheT<T>& cache,
                          T d_sigma, std::span<const T> d_feature, GradientTapeT<T>& tape) {
    std::vector<T> d_feat =
        decode_backward<T>(model.decoder, cache.decode, d_sigma, d_feature, tape.decoder);
    if (model.kind == ReprKind::TriPlane)
        triplane_query_backward(model.triplane, cache.point, std::span<const T>(d_feat),
                                tape.planes);
    else if (model.kind == ReprKind::Voxel)
        voxel_query_backward(model.voxel, cache.point, std::span<const T>(d_feat), tape.voxels);
}

// Flattened views over all trainable arrays; order is fixed (planes/voxels
// first, then decoder layer weights and biases) and shared with AdamState.
template <typename T>
struct ParamBlock {
    std::span<T> values;
    std::span<T> grads;
    bool is_feature = false;  // explicit features train at a higher rate
};

template <typename T>
std::vector<ParamBlock<T>> parameter_blocks(FieldModelT<T>& model, GradientTapeT<T>& tape) {
    std::vector<ParamBlock<T>> blocks;
    if (model.kind == ReprKind::TriPlane)
        for (int p = 0; p < 3; ++p)
            blocks.push_back({std::span<T>(model.triplane.planes[p]),
                              std::span<T>(tape.planes[p]), true});
    if (model.kind == ReprKind::Voxel)
        blocks.push_back({std::span<T>(model.voxel.values), std::span<T>(tape.voxels), true});
    for (std::size_t l = 0; l < model.decoder.layers.size(); ++l) {
        blocks.push_back({std::span<T>(model.decoder.layers[l].w),
                          std::span<T>(tape.decoder.layers[l].dw), false});
        blocks.push_back({std::span<T>(model.decoder.layers[l].b),
                          std::span<T>(tape.decoder.layers[l].db), false});
    }
    return blocks;
}

// Seeded model construction. Explicit features start as small uniform noise;
// the final-layer density bias starts slightly negative so the initial field
// is thin rather than foggy.
template <typename T>
FieldModelT<T> make_model(ReprKind kind, int resolution, int channels, double side,
                          FieldDecoderT<T> decoder, std::uint64_t seed) {
    FieldModelT<T> model;
    model.kind = kind;
    model.side = side;
    model.decoder = std::move(decoder);
    if (kind == ReprKind::TriPlane) {
        model.triplane = TriPlaneT<T>(resolution, channels, side);
        for (int p = 0; p < 3; ++p) {
            CounterRng rng(seed, rng_stream::init(100 + p));
            for (auto& v : model.triplane.planes[p])
                v = static_cast<T>(rng.uniform(-0.1, 0.1));
        }
    } else if (kind == ReprKind::Voxel) {
        model.voxel = VoxelGridT<T>(resolution, channels, side);
        CounterRng rng(seed, rng_stream::init(100));
        for (auto& v : model.voxel.values) v = static_cast<T>(rng.uniform(-0.1, 0.1));
    }
    model.decoder.layers.back().b[0] = T(-1);
    model.validate();
    return model;
}

}  // namespace trifield
