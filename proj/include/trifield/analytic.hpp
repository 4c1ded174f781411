// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0
//
// Closed-form density/color fields. These provide ground truth for dataset
// generation and geometric oracles in tests; they are rendered with the same
// compositing quadrature as learned fields, just without a representation.

#pragma once

#include <functional>

#include "trifield/core.hpp"

namespace trifield {

struct AnalyticField {
    std::function<double(const Vec3&)> sigma;
    std::function<std::array<double, 3>(const Vec3&)> rgb;
    double side = 2.0;
};

namespace detail {
// C1 ramp from 0 to 1 as u goes 0 -> 1.
inline double smoothstep01(double u) {
    u = clamp01(u);
    return u * u * (3.0 - 2.0 * u);
}
}  // namespace detail

// Solid sphere with a smooth density shell of width `shell` around radius r.
inline AnalyticField sphere_field(Vec3 center = {0, 0, 0}, double radius = 0.45,
                                  double sigma_max = 50.0, double shell = 0.1,
                                  std::array<double, 3> color = {0.85, 0.25, 0.2}) {
    AnalyticField f;
    f.sigma = [=](const Vec3& x) {
        const double d = norm(x - center);
        return sigma_max * detail::smoothstep01((radius - d) / shell + 0.5);
    };
    f.rgb = [=](const Vec3&) { return color; };
    return f;
}

// Two axis-aligned boxes with distinct colors.
inline AnalyticField boxes_field() {
    const Vec3 c1{-0.35, -0.2, 0.0}, h1{0.28, 0.28, 0.28};
    const Vec3 c2{0.4, 0.25, 0.1}, h2{0.22, 0.22, 0.38};
    const double shell = 0.08, sigma_max = 50.0;
    auto box_sigma = [shell](const Vec3& x, const Vec3& c, const Vec3& h) {
        double s = 1.0;
        for (int a = 0; a < 3; ++a) {
            const double d = h[a] - std::abs(x[a] - c[a]);
            s *= detail::smoothstep01(d / shell + 0.5);
        }
        return s;
    };
    AnalyticField f;
    f.sigma = [=](const Vec3& x) {
        return sigma_max * std::max(box_sigma(x, c1, h1), box_sigma(x, c2, h2));
    };
    f.rgb = [=](const Vec3& x) -> std::array<double, 3> {
        if (box_sigma(x, c1, h1) >= box_sigma(x, c2, h2)) return {0.2, 0.45, 0.85};
        return {0.9, 0.7, 0.15};
    };
    return f;
}

// Two Gaussian blobs; color blends by each blob's density share.
inline AnalyticField two_blob_field() {
    const Vec3 c1{-0.3, 0.0, -0.05}, c2{0.32, 0.1, 0.08};
    const double s1 = 0.16, s2 = 0.2, amp = 30.0;
    auto blob = [](const Vec3& x, const Vec3& c, double s) {
        const Vec3 d = x - c;
        return std::exp(-dot(d, d) / (2.0 * s * s));
    };
    AnalyticField f;
    f.sigma = [=](const Vec3& x) { return amp * (blob(x, c1, s1) + blob(x, c2, s2)); };
    f.rgb = [=](const Vec3& x) -> std::array<double, 3> {
        const double b1 = blob(x, c1, s1), b2 = blob(x, c2, s2);
        const double t = b1 + b2 > 1e-12 ? b2 / (b1 + b2) : 0.5;
        return {0.85 * (1.0 - t) + 0.25 * t, 0.3 * (1.0 - t) + 0.8 * t,
                0.25 * (1.0 - t) + 0.9 * t};
    };
    return f;
}

inline AnalyticField analytic_scene(const std::string& name) {
    if (name == "sphere") return sphere_field();
    if (name == "boxes") return boxes_field();
    if (name == "two-blob") return two_blob_field();
    throw input_error("unknown scene: " + name);
}

}  // namespace trifield
