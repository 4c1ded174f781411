// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic multi-view datasets: orbiting cameras around an analytic field,
// ground truth rendered with dense uniform quadrature (midpoint samples, so
// renders are deterministic bit-for-bit).

#include <thread>

#include "trifield/io.hpp"

namespace trifield {

namespace {

// Row-major cam2world from an eye point looking at a target, OpenCV axes
// (x right, y down, z forward), world up +z.
std::array<double, 16> look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 forward = normalized(target - eye);
    const Vec3 right = normalized(cross(forward, up));
    const Vec3 down = cross(forward, right);
    return {right.x, down.x, forward.x, eye.x,
            right.y, down.y, forward.y, eye.y,
            right.z, down.z, forward.z, eye.z,
            0.0,     0.0,    0.0,       1.0};
}

}  // namespace

Camera orbit_camera(int view_index, int n_views, int resolution, double side,
                    std::uint64_t seed) {
    if (n_views < 1) throw input_error("orbit_camera: n_views must be >= 1");
    CounterRng rng(seed, rng_stream::dataset(static_cast<std::uint64_t>(view_index)));
    const double dist = 1.3 * side;
    const double azimuth =
        2.0 * M_PI * view_index / n_views + rng.uniform(-0.02, 0.02);
    static constexpr double kElevations[3] = {-20.0, 10.0, 35.0};
    const double elevation =
        (kElevations[view_index % 3] + rng.uniform(-2.0, 2.0)) * M_PI / 180.0;
    const Vec3 eye{dist * std::cos(elevation) * std::cos(azimuth),
                   dist * std::cos(elevation) * std::sin(azimuth),
                   dist * std::sin(elevation)};

    Camera cam;
    cam.width = cam.height = resolution;
    cam.fx = cam.fy = 2.8 * resolution;
    cam.cx = cam.cy = resolution / 2.0;
    // Bracket the scene cube (circumscribed radius sqrt(3)/2 * side).
    const double reach = 0.5 * std::sqrt(3.0) * side;
    cam.near_t = std::max(0.05, dist - 1.05 * reach);
    cam.far_t = dist + 1.05 * reach;
    cam.cam2world = look_at(eye, {0, 0, 0}, {0, 0, 1});
    cam.validate();
    return cam;
}

ImageF render_analytic(const AnalyticField& field, const Camera& cam, int samples,
                       std::array<double, 3> background, int threads) {
    ImageF image(cam.width, cam.height, 3);
    const std::vector<double> bg(background.begin(), background.end());
    const int nthreads = std::max(1, threads);

    auto render_rows = [&](int t0) {
        std::vector<double> depths, sigma;
        std::vector<double> rgb;
        for (int py = t0; py < cam.height; py += nthreads)
            for (int px = 0; px < cam.width; ++px) {
                const Ray ray = generate_ray(cam, px, py);
                depths = sample_coarse(ray, samples, nullptr);
                sigma.resize(depths.size());
                rgb.resize(depths.size() * 3);
                for (std::size_t i = 0; i < depths.size(); ++i) {
                    const Vec3 p = ray.origin + depths[i] * ray.dir;
                    sigma[i] = field.sigma(p);
                    const auto c = field.rgb(p);
                    rgb[i * 3 + 0] = c[0];
                    rgb[i * 3 + 1] = c[1];
                    rgb[i * 3 + 2] = c[2];
                }
                const CompositeResult comp = composite<double>(
                    depths, sigma, rgb, 3, ray.far_t, bg);
                for (int c = 0; c < 3; ++c)
                    image.at(py, px, c) = static_cast<float>(comp.feature[c]);
            }
    };
    if (nthreads == 1) {
        render_rows(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(render_rows, t);
        for (auto& th : pool) th.join();
    }
    return image;
}

DatasetManifest make_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir) {
    if (cfg.n_views < 0) throw input_error("make_dataset: negative view count");
    if (cfg.resolution < 1) throw input_error("make_dataset: resolution must be >= 1");
    const AnalyticField field = analytic_scene(cfg.scene);

    std::filesystem::create_directories(out_dir);
    DatasetManifest manifest;
    manifest.side = field.side;
    manifest.background = {1.0, 1.0, 1.0};
    manifest.root = out_dir;

    for (int v = 0; v < cfg.n_views; ++v) {
        const Camera cam =
            orbit_camera(v, cfg.n_views, cfg.resolution, field.side, cfg.seed);
        const ImageF image =
            render_analytic(field, cam, cfg.gt_samples, manifest.background, cfg.threads);
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04d.png", v);
        write_png_rgb8(out_dir / name, image);
        manifest.frames.push_back({name, cam});
    }
    save_manifest(out_dir / "manifest.json", manifest);
    return manifest;
}

}  // namespace trifield
