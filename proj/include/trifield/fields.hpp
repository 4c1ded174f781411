// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0
//
// Explicit scene representations: three axis-aligned feature planes sampled
// bilinearly and summed, and a dense voxel grid sampled trilinearly. Both come
// with hand-derived backward passes that scatter upstream gradients onto the
// touched grid nodes.
//
// Conventions, fixed project-wide:
//   * world cube is [-side/2, side/2]^3; queries normalize to [-1,1]^3
//   * grid node i sits at normalized coordinate -1 + 2i/(N-1) (align-corners)
//   * out-of-bounds queries clamp to the cube faces (edge-extended sampling)
//   * plane p stores 2D coords (a, b): xy -> (x, y), xz -> (x, z), yz -> (y, z)
//   * storage is channel-last row-major: value(plane, a, b, ch) at
//     ((a * N) + b) * C + ch

#pragma once

#include <algorithm>
#include <cstdint>

#include "trifield/core.hpp"

namespace trifield {

enum class PlaneId : int { XY = 0, XZ = 1, YZ = 2 };

template <typename T>
struct TriPlaneT {
    int resolution = 0;  // N, cells per side
    int channels = 0;    // C
    double side = 2.0;   // world cube edge length
    std::array<std::vector<T>, 3> planes;  // xy, xz, yz

    TriPlaneT() = default;
    TriPlaneT(int n, int c, double side_len) : resolution(n), channels(c), side(side_len) {
        if (n < 1 || c < 1 || !(side_len > 0.0))
            throw input_error("TriPlane: resolution/channels/side must be positive");
        for (auto& p : planes)
            p.assign(static_cast<std::size_t>(n) * n * c, T(0));
    }

    std::size_t param_count() const {
        return 3u * static_cast<std::size_t>(resolution) * resolution * channels;
    }

    T& at(PlaneId p, int a, int b, int ch) {
        return planes[static_cast<int>(p)]
                     [(static_cast<std::size_t>(a) * resolution + b) * channels + ch];
    }
    T at(PlaneId p, int a, int b, int ch) const {
        return planes[static_cast<int>(p)]
                     [(static_cast<std::size_t>(a) * resolution + b) * channels + ch];
    }

    void validate() const {
        for (const auto& p : planes) {
            if (p.size() != static_cast<std::size_t>(resolution) * resolution * channels)
                throw contract_error("TriPlane: plane size mismatch");
            check_finite(std::span<const T>(p), "TriPlane features");
        }
    }
};

template <typename T>
struct VoxelGridT {
    int resolution = 0;  // M per side
    int channels = 0;    // C_v
    double side = 2.0;
    std::vector<T> values;  // ((ix * M) + iy) * M + iz, channel-last

    VoxelGridT() = default;
    VoxelGridT(int m, int c, double side_len) : resolution(m), channels(c), side(side_len) {
        if (m < 1 || c < 1 || !(side_len > 0.0))
            throw input_error("VoxelGrid: resolution/channels/side must be positive");
        values.assign(static_cast<std::size_t>(m) * m * m * c, T(0));
    }

    std::size_t param_count() const {
        return static_cast<std::size_t>(resolution) * resolution * resolution * channels;
    }

    T& at(int ix, int iy, int iz, int ch) {
        return values[((static_cast<std::size_t>(ix) * resolution + iy) * resolution + iz) *
                          channels + ch];
    }
    T at(int ix, int iy, int iz, int ch) const {
        return values[((static_cast<std::size_t>(ix) * resolution + iy) * resolution + iz) *
                          channels + ch];
    }

    void validate() const {
        if (values.size() != param_count())
            throw contract_error("VoxelGrid: value array size mismatch");
        check_finite(std::span<const T>(values), "VoxelGrid features");
    }
};

using TriPlane = TriPlaneT<float>;
using VoxelGrid = VoxelGridT<float>;

// Aggregated feature at a point plus the per-plane contributions.
template <typename T>
struct FeatureSampleT {
    std::vector<T> sum;                        // length C, F = F_xy + F_xz + F_yz
    std::array<std::vector<T>, 3> per_plane;   // length C each
};

// Gradient accumulators mirroring the parameter arrays.
template <typename T>
using PlaneGradsT = std::array<std::vector<T>, 3>;
template <typename T>
using VoxelGradsT = std::vector<T>;

namespace detail {

// Bilinear footprint of a 1D coordinate on an align-corners grid of n nodes.
// Coordinate u is normalized [-1,1]; values outside clamp to the edge.
struct GridTap {
    int i0, i1;
    double w0, w1;
};

inline GridTap grid_tap(double u, int n) {
    if (n == 1) return {0, 0, 1.0, 0.0};
    u = std::clamp(u, -1.0, 1.0);
    double g = (u + 1.0) * 0.5 * (n - 1);
    int i0 = static_cast<int>(g);
    if (i0 > n - 2) i0 = n - 2;
    double f = g - i0;
    return {i0, i0 + 1, 1.0 - f, f};
}

inline void project(const Vec3& q, PlaneId p, double& a, double& b) {
    switch (p) {
        case PlaneId::XY: a = q.x; b = q.y; return;
        case PlaneId::XZ: a = q.x; b = q.z; return;
        case PlaneId::YZ: a = q.y; b = q.z; return;
    }
    a = b = 0.0;
}

}  // namespace detail

// Accumulates one plane's bilinear sample into out (length C).
template <typename T>
void plane_sample_accumulate(const TriPlaneT<T>& tp, PlaneId p, const Vec3& q,
                             std::span<T> out) {
    double a, b;
    detail::project(q, p, a, b);
    const auto ta = detail::grid_tap(a, tp.resolution);
    const auto tb = detail::grid_tap(b, tp.resolution);
    const int c = tp.channels;
    const T* data = tp.planes[static_cast<int>(p)].data();
    const std::size_t n = tp.resolution;
    const T* r0 = data + (ta.i0 * n + tb.i0) * c;
    const T* r1 = data + (ta.i0 * n + tb.i1) * c;
    const T* r2 = data + (ta.i1 * n + tb.i0) * c;
    const T* r3 = data + (ta.i1 * n + tb.i1) * c;
    const T w00 = static_cast<T>(ta.w0 * tb.w0);
    const T w01 = static_cast<T>(ta.w0 * tb.w1);
    const T w10 = static_cast<T>(ta.w1 * tb.w0);
    const T w11 = static_cast<T>(ta.w1 * tb.w1);
    for (int k = 0; k < c; ++k)
        out[k] += w00 * r0[k] + w01 * r1[k] + w10 * r2[k] + w11 * r3[k];
}

// Fast path: aggregated tri-plane feature accumulated into out (length C).
// out must be zeroed by the caller if a fresh sample is wanted.
template <typename T>
void triplane_query_into(const TriPlaneT<T>& tp, const Vec3& x, std::span<T> out) {
    if (!x.finite()) throw input_error("triplane_query: non-finite point");
    if (static_cast<int>(out.size()) != tp.channels)
        throw contract_error("triplane_query: output width mismatch");
    const double inv_half = 2.0 / tp.side;
    const Vec3 q{x.x * inv_half, x.y * inv_half, x.z * inv_half};
    for (int p = 0; p < 3; ++p)
        plane_sample_accumulate(tp, static_cast<PlaneId>(p), q, out);
}

template <typename T>
FeatureSampleT<T> triplane_query(const TriPlaneT<T>& tp, const Vec3& x) {
    if (!x.finite()) throw input_error("triplane_query: non-finite point");
    const double inv_half = 2.0 / tp.side;
    const Vec3 q{x.x * inv_half, x.y * inv_half, x.z * inv_half};
    FeatureSampleT<T> s;
    s.sum.assign(tp.channels, T(0));
    for (int p = 0; p < 3; ++p) {
        s.per_plane[p].assign(tp.channels, T(0));
        plane_sample_accumulate(tp, static_cast<PlaneId>(p), q,
                                std::span<T>(s.per_plane[p]));
        for (int k = 0; k < tp.channels; ++k) s.sum[k] += s.per_plane[p][k];
    }
    return s;
}

// Scatters upstream_grad (length C) onto the four touched nodes of each plane.
template <typename T>
void triplane_query_backward(const TriPlaneT<T>& tp, const Vec3& x,
                             std::span<const T> upstream_grad, PlaneGradsT<T>& tape) {
    if (!x.finite()) throw input_error("triplane_query_backward: non-finite point");
    if (static_cast<int>(upstream_grad.size()) != tp.channels)
        throw contract_error("triplane_query_backward: upstream width mismatch");
    for (int p = 0; p < 3; ++p)
        if (tape[p].size() != tp.planes[p].size())
            throw contract_error("triplane_query_backward: tape shape mismatch");
    const double inv_half = 2.0 / tp.side;
    const Vec3 q{x.x * inv_half, x.y * inv_half, x.z * inv_half};
    const int c = tp.channels;
    const std::size_t n = tp.resolution;
    for (int p = 0; p < 3; ++p) {
        double a, b;
        detail::project(q, static_cast<PlaneId>(p), a, b);
        const auto ta = detail::grid_tap(a, tp.resolution);
        const auto tb = detail::grid_tap(b, tp.resolution);
        T* g = tape[p].data();
        T* g0 = g + (ta.i0 * n + tb.i0) * c;
        T* g1 = g + (ta.i0 * n + tb.i1) * c;
        T* g2 = g + (ta.i1 * n + tb.i0) * c;
        T* g3 = g + (ta.i1 * n + tb.i1) * c;
        const T w00 = static_cast<T>(ta.w0 * tb.w0);
        const T w01 = static_cast<T>(ta.w0 * tb.w1);
        const T w10 = static_cast<T>(ta.w1 * tb.w0);
        const T w11 = static_cast<T>(ta.w1 * tb.w1);
        for (int k = 0; k < c; ++k) {
            const T u = upstream_grad[k];
            g0[k] += w00 * u;
            g1[k] += w01 * u;
            g2[k] += w10 * u;
            g3[k] += w11 * u;
        }
    }
}

// Trilinear voxel sample accumulated into out (length C_v).
template <typename T>
void voxel_query_into(const VoxelGridT<T>& vg, const Vec3& x, std::span<T> out) {
    if (!x.finite()) throw input_error("voxel_query: non-finite point");
    if (static_cast<int>(out.size()) != vg.channels)
        throw contract_error("voxel_query: output width mismatch");
    const double inv_half = 2.0 / vg.side;
    const auto tx = detail::grid_tap(x.x * inv_half, vg.resolution);
    const auto ty = detail::grid_tap(x.y * inv_half, vg.resolution);
    const auto tz = detail::grid_tap(x.z * inv_half, vg.resolution);
    const int c = vg.channels;
    const std::size_t m = vg.resolution;
    const T* data = vg.values.data();
    const int xi[2] = {tx.i0, tx.i1};
    const int yi[2] = {ty.i0, ty.i1};
    const int zi[2] = {tz.i0, tz.i1};
    const double xw[2] = {tx.w0, tx.w1};
    const double yw[2] = {ty.w0, ty.w1};
    const double zw[2] = {tz.w0, tz.w1};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l) {
                const T w = static_cast<T>(xw[i] * yw[j] * zw[l]);
                const T* node = data + ((xi[i] * m + yi[j]) * m + zi[l]) * c;
                for (int k = 0; k < c; ++k) out[k] += w * node[k];
            }
}

template <typename T>
std::vector<T> voxel_query(const VoxelGridT<T>& vg, const Vec3& x) {
    std::vector<T> out(vg.channels, T(0));
    voxel_query_into(vg, x, std::span<T>(out));
    return out;
}

template <typename T>
void voxel_query_backward(const VoxelGridT<T>& vg, const Vec3& x,
                          std::span<const T> upstream_grad, VoxelGradsT<T>& tape) {
    if (!x.finite()) throw input_error("voxel_query_backward: non-finite point");
    if (static_cast<int>(upstream_grad.size()) != vg.channels)
        throw contract_error("voxel_query_backward: upstream width mismatch");
    if (tape.size() != vg.values.size())
        throw contract_error("voxel_query_backward: tape shape mismatch");
    const double inv_half = 2.0 / vg.side;
    const auto tx = detail::grid_tap(x.x * inv_half, vg.resolution);
    const auto ty = detail::grid_tap(x.y * inv_half, vg.resolution);
    const auto tz = detail::grid_tap(x.z * inv_half, vg.resolution);
    const int c = vg.channels;
    const std::size_t m = vg.resolution;
    const int xi[2] = {tx.i0, tx.i1};
    const int yi[2] = {ty.i0, ty.i1};
    const int zi[2] = {tz.i0, tz.i1};
    const double xw[2] = {tx.w0, tx.w1};
    const double yw[2] = {ty.w0, ty.w1};
    const double zw[2] = {tz.w0, tz.w1};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l) {
                const T w = static_cast<T>(xw[i] * yw[j] * zw[l]);
                T* node = tape.data() + ((xi[i] * m + yi[j]) * m + zi[l]) * c;
                for (int k = 0; k < c; ++k) node[k] += w * upstream_grad[k];
            }
}

}  // namespace trifield
