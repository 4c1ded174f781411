// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0
//
// Pinhole camera, stratified coarse sampling, inverse-CDF importance sampling,
// and emission-absorption compositing with an exact adjoint. Rendering is
// deterministic for a fixed seed regardless of thread count: each pixel owns a
// counter-based RNG stream keyed by its index.

#pragma once

#include <algorithm>
#include <functional>
#include <thread>

#include "trifield/model.hpp"

namespace trifield {

struct Camera {
    double fx = 0.0, fy = 0.0;  // focal lengths in pixels
    double cx = 0.0, cy = 0.0;  // principal point
    int width = 0, height = 0;
    double near_t = 0.0, far_t = 0.0;
    std::array<double, 16> cam2world{};  // row-major 4x4

    Vec3 position() const { return {cam2world[3], cam2world[7], cam2world[11]}; }

    Vec3 rotate_to_world(const Vec3& v) const {
        return {cam2world[0] * v.x + cam2world[1] * v.y + cam2world[2] * v.z,
                cam2world[4] * v.x + cam2world[5] * v.y + cam2world[6] * v.z,
                cam2world[8] * v.x + cam2world[9] * v.y + cam2world[10] * v.z};
    }

    void validate() const {
        if (!(fx > 0.0) || !(fy > 0.0)) throw input_error("Camera: focal lengths must be positive");
        if (!(0.0 < near_t && near_t < far_t)) throw input_error("Camera: need 0 < near < far");
        if (width < 1 || height < 1) throw input_error("Camera: empty image");
        for (double v : cam2world)
            if (!std::isfinite(v)) throw input_error("Camera: non-finite extrinsics");
        // rotation block orthonormality within 1e-5
        const Vec3 r0{cam2world[0], cam2world[1], cam2world[2]};
        const Vec3 r1{cam2world[4], cam2world[5], cam2world[6]};
        const Vec3 r2{cam2world[8], cam2world[9], cam2world[10]};
        const Vec3 rows[3] = {r0, r1, r2};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double want = i == j ? 1.0 : 0.0;
                if (std::abs(dot(rows[i], rows[j]) - want) > 1e-5)
                    throw input_error("Camera: rotation block not orthonormal");
            }
    }
};

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
    double near_t = 0.0, far_t = 0.0;
};

// Ray through the center of pixel (px, py).
inline Ray generate_ray(const Camera& cam, int px, int py) {
    if (px < 0 || px >= cam.width || py < 0 || py >= cam.height)
        throw input_error("generate_ray: pixel outside image");
    const Vec3 d_cam{(px + 0.5 - cam.cx) / cam.fx, (py + 0.5 - cam.cy) / cam.fy, 1.0};
    Ray r;
    r.origin = cam.position();
    r.dir = normalized(cam.rotate_to_world(d_cam));
    r.near_t = cam.near_t;
    r.far_t = cam.far_t;
    return r;
}

inline std::vector<Ray> generate_rays(const Camera& cam,
                                      const std::vector<std::pair<int, int>>& pixels) {
    std::vector<Ray> rays;
    rays.reserve(pixels.size());
    for (auto [px, py] : pixels) rays.push_back(generate_ray(cam, px, py));
    return rays;
}

// Stratified depths: one sample per uniform bin, bin midpoints when rng is null.
inline std::vector<double> sample_coarse(double near_t, double far_t, int count,
                                         CounterRng* rng) {
    if (count < 0) throw input_error("sample_coarse: negative count");
    std::vector<double> depths(count);
    const double delta = (far_t - near_t) / std::max(count, 1);
    for (int i = 0; i < count; ++i) {
        const double u = rng ? rng->uniform() : 0.5;
        depths[i] = near_t + (i + u) * delta;
    }
    return depths;
}

inline std::vector<double> sample_coarse(const Ray& ray, int count, CounterRng* rng) {
    return sample_coarse(ray.near_t, ray.far_t, count, rng);
}

// Inverse-CDF sampling from the piecewise-constant PDF induced by the coarse
// weights. Bin edges are near, the midpoints between consecutive coarse
// depths, and far. A small floor (1e-5 of the total) keeps the CDF invertible;
// all-zero weights degrade to uniform sampling. Output is sorted.
inline std::vector<double> sample_importance(double near_t, double far_t,
                                             std::span<const double> coarse_depths,
                                             std::span<const double> weights, int count,
                                             CounterRng& rng) {
    if (count < 0) throw input_error("sample_importance: negative count");
    if (count == 0) return {};
    if (coarse_depths.size() != weights.size() || coarse_depths.empty())
        throw contract_error("sample_importance: depth/weight size mismatch");
    for (double w : weights)
        if (!(w >= 0.0)) throw input_error("sample_importance: negative or NaN weight");

    const std::size_t nbins = coarse_depths.size();
    std::vector<double> edges(nbins + 1);
    edges[0] = near_t;
    for (std::size_t i = 1; i < nbins; ++i)
        edges[i] = 0.5 * (coarse_depths[i - 1] + coarse_depths[i]);
    edges[nbins] = far_t;

    constexpr double kFloor = 1e-5;
    std::vector<double> cdf(nbins + 1, 0.0);
    for (std::size_t i = 0; i < nbins; ++i) cdf[i + 1] = cdf[i] + weights[i] + kFloor;
    const double total = cdf[nbins];
    for (auto& v : cdf) v /= total;

    std::vector<double> samples(count);
    for (int s = 0; s < count; ++s) {
        const double u = rng.uniform();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t bin = std::min<std::size_t>(std::distance(cdf.begin(), it), nbins) - 1;
        const double span_p = cdf[bin + 1] - cdf[bin];
        const double frac = span_p > 0.0 ? (u - cdf[bin]) / span_p : 0.5;
        samples[s] = edges[bin] + frac * (edges[bin + 1] - edges[bin]);
    }
    std::sort(samples.begin(), samples.end());
    return samples;
}

// Piecewise-linear target CDF of the importance sampler, exposed for
// statistical tests against drawn samples.
inline double importance_target_cdf(double t, double near_t, double far_t,
                                    std::span<const double> coarse_depths,
                                    std::span<const double> weights) {
    const std::size_t nbins = coarse_depths.size();
    std::vector<double> edges(nbins + 1);
    edges[0] = near_t;
    for (std::size_t i = 1; i < nbins; ++i)
        edges[i] = 0.5 * (coarse_depths[i - 1] + coarse_depths[i]);
    edges[nbins] = far_t;
    constexpr double kFloor = 1e-5;
    double total = 0.0;
    for (double w : weights) total += w + kFloor;
    if (t <= edges[0]) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < nbins; ++i) {
        const double mass = (weights[i] + kFloor) / total;
        if (t >= edges[i + 1]) {
            acc += mass;
        } else {
            const double w = edges[i + 1] - edges[i];
            if (w > 0.0) acc += mass * (t - edges[i]) / w;
            break;
        }
    }
    return std::min(acc, 1.0);
}

// One ray's quadrature state. Depths strictly increasing; weights w_i >= 0
// with sum(w) + T_end == 1.
template <typename T>
struct SampleSetT {
    std::vector<double> depths;
    std::vector<T> sigma;        // per sample
    std::vector<T> features;     // per sample, K channels interleaved
    int feature_channels = 0;
    std::vector<double> weights;
    double transmittance_end = 1.0;
};

struct CompositeResult {
    std::vector<double> feature;  // length K, background already applied
    double depth = 0.0;           // expected termination depth
    double opacity = 0.0;         // sum of weights
    std::vector<double> weights;
    double transmittance_end = 1.0;
};

// Emission-absorption quadrature:
//   delta_i = t_{i+1} - t_i (last: far - t_S)
//   alpha_i = 1 - exp(-sigma_i delta_i)
//   w_i     = alpha_i * prod_{j<i} (1 - alpha_j)
//   feature = sum w_i f_i + T_end * background
// Accumulation runs in double regardless of the field's precision.
template <typename T>
CompositeResult composite(std::span<const double> depths, std::span<const T> sigmas,
                          std::span<const T> features, int feature_channels, double far_t,
                          std::span<const double> background) {
    const std::size_t n = depths.size();
    if (sigmas.size() != n || features.size() != n * feature_channels)
        throw contract_error("composite: sample array size mismatch");
    if (static_cast<int>(background.size()) != feature_channels)
        throw contract_error("composite: background width mismatch");
    for (std::size_t i = 1; i < n; ++i)
        if (!(depths[i] > depths[i - 1]))
            throw contract_error("composite: depths must be strictly increasing");

    CompositeResult out;
    out.feature.assign(feature_channels, 0.0);
    out.weights.assign(n, 0.0);
    double transmittance = 1.0;
    double depth_acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double delta = (i + 1 < n ? depths[i + 1] : far_t) - depths[i];
        const double alpha = 1.0 - std::exp(-static_cast<double>(sigmas[i]) * delta);
        const double w = transmittance * alpha;
        out.weights[i] = w;
        for (int k = 0; k < feature_channels; ++k)
            out.feature[k] += w * static_cast<double>(features[i * feature_channels + k]);
        depth_acc += w * depths[i];
        out.opacity += w;
        transmittance *= 1.0 - alpha;
    }
    out.transmittance_end = transmittance;
    for (int k = 0; k < feature_channels; ++k)
        out.feature[k] += transmittance * background[k];
    out.depth = depth_acc / std::max(out.opacity, 1e-10);
    return out;
}

struct CompositeGrads {
    std::vector<double> d_sigma;    // per sample
    std::vector<double> d_feature;  // per sample, K interleaved
};

// Exact adjoint of composite. The scan over transmittance is reversed without
// divisions: with S_i the total sensitivity to w_i,
//   d_alpha_i = T_i (S_i - dT_{i+1}),  dT_i = alpha_i S_i + (1 - alpha_i) dT_{i+1}
// and d_sigma_i = d_alpha_i * delta_i * (1 - alpha_i).
template <typename T>
CompositeGrads composite_backward(std::span<const double> depths, std::span<const T> sigmas,
                                  std::span<const T> features, int feature_channels,
                                  double far_t, std::span<const double> background,
                                  std::span<const double> d_out_feature, double d_out_depth,
                                  double d_out_opacity) {
    const std::size_t n = depths.size();
    if (sigmas.size() != n || features.size() != n * feature_channels)
        throw contract_error("composite_backward: sample array size mismatch");
    if (static_cast<int>(d_out_feature.size()) != feature_channels)
        throw contract_error("composite_backward: upstream width mismatch");

    // Recompute the forward scan.
    std::vector<double> alpha(n), trans(n), weight(n), delta(n);
    double transmittance = 1.0;
    double opacity = 0.0, depth_num = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        delta[i] = (i + 1 < n ? depths[i + 1] : far_t) - depths[i];
        alpha[i] = 1.0 - std::exp(-static_cast<double>(sigmas[i]) * delta[i]);
        trans[i] = transmittance;
        weight[i] = transmittance * alpha[i];
        opacity += weight[i];
        depth_num += weight[i] * depths[i];
        transmittance *= 1.0 - alpha[i];
    }
    const double denom = std::max(opacity, 1e-10);
    const double depth = depth_num / denom;

    CompositeGrads g;
    g.d_sigma.assign(n, 0.0);
    g.d_feature.assign(n * feature_channels, 0.0);

    // Sensitivity of the loss to each w_i through feature/depth/opacity heads.
    std::vector<double> s_w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = d_out_opacity;
        for (int k = 0; k < feature_channels; ++k) {
            s += d_out_feature[k] * static_cast<double>(features[i * feature_channels + k]);
            g.d_feature[i * feature_channels + k] = weight[i] * d_out_feature[k];
        }
        if (opacity > 1e-10)
            s += d_out_depth * (depths[i] - depth) / denom;
        else
            s += d_out_depth * depths[i] / denom;
        s_w[i] = s;
    }

    // dL/dT_end from the background term.
    double d_trans_next = 0.0;
    for (int k = 0; k < feature_channels; ++k) d_trans_next += d_out_feature[k] * background[k];

    for (int i = static_cast<int>(n) - 1; i >= 0; --i) {
        const double d_alpha = trans[i] * (s_w[i] - d_trans_next);
        d_trans_next = alpha[i] * s_w[i] + (1.0 - alpha[i]) * d_trans_next;
        g.d_sigma[i] = d_alpha * delta[i] * (1.0 - alpha[i]);
    }
    return g;
}

// Merge coarse and fine depths into one strictly increasing list; duplicates
// within 1e-9 collapse to a single sample so delta stays positive.
inline std::vector<double> merge_depths(std::span<const double> a, std::span<const double> b) {
    std::vector<double> merged;
    merged.reserve(a.size() + b.size());
    merged.insert(merged.end(), a.begin(), a.end());
    merged.insert(merged.end(), b.begin(), b.end());
    std::sort(merged.begin(), merged.end());
    std::vector<double> out;
    out.reserve(merged.size());
    for (double t : merged)
        if (out.empty() || t - out.back() > 1e-9) out.push_back(t);
    return out;
}

template <typename T>
struct RenderConfig {
    int coarse_samples = 48;
    int fine_samples = 48;
    std::vector<double> background;  // length K; empty -> white for K=3, zero otherwise
    bool jitter = true;
    std::uint64_t seed = 0;
    int threads = 1;
};

template <typename T>
std::vector<double> default_background(int feature_channels) {
    if (feature_channels == 3) return {1.0, 1.0, 1.0};
    return std::vector<double>(feature_channels, 0.0);
}

template <typename T>
struct RenderOutputT {
    Image<T> features;        // H x W x K; the RGB image is the first-3-channel view
    Image<double> depth;      // H x W x 1
    Image<double> opacity;    // H x W x 1

    // I_RGB is defined as a channel slice of I_F, never a separate render.
    T rgb_at(int y, int x, int c) const {
        if (features.channels < 3) throw contract_error("RenderOutput: no RGB slice, K < 3");
        return features.at(y, x, c);
    }
};

using RenderOutput = RenderOutputT<float>;

// Two-pass render of a single ray at fixed feature width. Returns the final
// merged sample set and its composite.
template <typename T>
std::pair<SampleSetT<T>, CompositeResult> render_ray(const FieldModelT<T>& model, const Ray& ray,
                                                     const RenderConfig<T>& cfg,
                                                     CounterRng& rng,
                                                     std::span<const double> background) {
    const int k = model.decoder.feature_channels;
    // Coarse pass.
    std::vector<double> coarse =
        sample_coarse(ray, cfg.coarse_samples, cfg.jitter ? &rng : nullptr);
    std::vector<T> c_sigma(coarse.size());
    std::vector<T> c_feat(coarse.size() * k);
    std::vector<T> feat_buf;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        const Vec3 p = ray.origin + coarse[i] * ray.dir;
        auto [sigma, feature] = query_field(model, p);
        c_sigma[i] = sigma;
        std::copy(feature.begin(), feature.end(), c_feat.begin() + i * k);
    }
    CompositeResult coarse_comp =
        composite<T>(coarse, c_sigma, c_feat, k, ray.far_t, background);

    // Importance pass over the coarse weight profile, then merge.
    std::vector<double> depths;
    if (cfg.fine_samples > 0 && !coarse.empty()) {
        std::vector<double> fine =
            sample_importance(ray.near_t, ray.far_t, coarse, coarse_comp.weights,
                              cfg.fine_samples, rng);
        depths = merge_depths(coarse, fine);
    } else {
        depths = std::move(coarse);
    }

    SampleSetT<T> set;
    set.feature_channels = k;
    set.depths = std::move(depths);
    set.sigma.resize(set.depths.size());
    set.features.resize(set.depths.size() * k);
    for (std::size_t i = 0; i < set.depths.size(); ++i) {
        const Vec3 p = ray.origin + set.depths[i] * ray.dir;
        auto [sigma, feature] = query_field(model, p);
        set.sigma[i] = sigma;
        std::copy(feature.begin(), feature.end(), set.features.begin() + i * k);
    }
    CompositeResult final_comp =
        composite<T>(set.depths, std::span<const T>(set.sigma),
                     std::span<const T>(set.features), k, ray.far_t, background);
    set.weights = final_comp.weights;
    set.transmittance_end = final_comp.transmittance_end;
    return {std::move(set), std::move(final_comp)};
}

// Full-frame render. Pixels own RNG streams keyed by their index, so the
// output is identical for any thread count.
template <typename T>
RenderOutputT<T> render_image(const FieldModelT<T>& model, const Camera& cam,
                              const RenderConfig<T>& cfg) {
    model.validate();
    cam.validate();
    const int k = model.decoder.feature_channels;
    std::vector<double> background =
        cfg.background.empty() ? default_background<T>(k) : cfg.background;
    if (static_cast<int>(background.size()) != k)
        throw input_error("render_image: background width mismatch");

    RenderOutputT<T> out;
    out.features = Image<T>(cam.width, cam.height, k);
    out.depth = Image<double>(cam.width, cam.height, 1);
    out.opacity = Image<double>(cam.width, cam.height, 1);

    const int rows = cam.height;
    const int nthreads = std::max(1, cfg.threads);
    auto render_rows = [&](int t0) {
        for (int py = t0; py < rows; py += nthreads) {
            for (int px = 0; px < cam.width; ++px) {
                const std::uint64_t pixel_index =
                    static_cast<std::uint64_t>(py) * cam.width + px;
                CounterRng rng(cfg.seed, rng_stream::pixel(pixel_index));
                const Ray ray = generate_ray(cam, px, py);
                auto [set, comp] = render_ray(model, ray, cfg, rng, background);
                for (int c = 0; c < k; ++c)
                    out.features.at(py, px, c) = static_cast<T>(comp.feature[c]);
                out.depth.at(py, px, 0) = comp.depth;
                out.opacity.at(py, px, 0) = comp.opacity;
            }
        }
    };
    if (nthreads == 1) {
        render_rows(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(render_rows, t);
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace trifield
