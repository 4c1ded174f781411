// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0

#include "trifield/train.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

namespace trifield {

namespace {

// Fixed number of gradient chunks per batch. Workers pull whole chunks; the
// merge walks chunk order, so results do not depend on the thread count.
constexpr int kGradChunks = 16;

struct FrameData {
    ImageF image;
    Camera camera;
};

struct RaySample {
    Ray ray;
    std::array<float, 3> target;
    std::uint64_t stream;
};

// Forward two-pass render of one ray with caches, backward of the MSE term.
// Returns the squared error summed over channels.
double train_ray(const FieldModel& model, const RaySample& rs, const TrainConfig& cfg,
                 std::span<const double> background, double loss_grad_scale,
                 GradientTape& tape, std::uint64_t seed) {
    CounterRng rng(seed, rs.stream);
    const int k = model.decoder.feature_channels;

    // Coarse pass (weights only, no caches kept).
    std::vector<double> coarse = sample_coarse(rs.ray, cfg.coarse_samples, &rng);
    std::vector<float> c_sigma(coarse.size());
    std::vector<float> c_feat(coarse.size() * k);
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        const Vec3 p = rs.ray.origin + coarse[i] * rs.ray.dir;
        auto [sigma, feature] = query_field(model, p);
        c_sigma[i] = sigma;
        std::copy(feature.begin(), feature.end(), c_feat.begin() + i * k);
    }
    CompositeResult coarse_comp =
        composite<float>(coarse, c_sigma, c_feat, k, rs.ray.far_t, background);

    // Fine pass; sample positions are treated as constants in the backward.
    std::vector<double> fine = sample_importance(
        rs.ray.near_t, rs.ray.far_t, coarse, coarse_comp.weights, cfg.fine_samples, rng);
    std::vector<double> depths = merge_depths(coarse, fine);

    const std::size_t n = depths.size();
    std::vector<float> sigma(n);
    std::vector<float> feat(n * k);
    std::vector<SampleCacheT<float>> caches(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 p = rs.ray.origin + depths[i] * rs.ray.dir;
        auto [s, feature] = query_field(model, p, &caches[i]);
        sigma[i] = s;
        std::copy(feature.begin(), feature.end(), feat.begin() + i * k);
    }
    CompositeResult comp =
        composite<float>(depths, sigma, feat, k, rs.ray.far_t, background);

    double sq_err = 0.0;
    std::vector<double> d_feature(k, 0.0);
    for (int c = 0; c < k; ++c) {
        const double diff = comp.feature[c] - static_cast<double>(rs.target[c]);
        sq_err += diff * diff;
        d_feature[c] = 2.0 * diff * loss_grad_scale;
    }

    CompositeGrads grads = composite_backward<float>(
        depths, sigma, feat, k, rs.ray.far_t, background, d_feature, 0.0, 0.0);
    std::vector<float> d_feat_f(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < k; ++c)
            d_feat_f[c] = static_cast<float>(grads.d_feature[i * k + c]);
        query_field_backward(model, caches[i], static_cast<float>(grads.d_sigma[i]),
                             std::span<const float>(d_feat_f), tape);
    }
    return sq_err;
}

}  // namespace

FieldModel make_train_model(ReprKind kind, double side, const TrainConfig& cfg) {
    const int repr_channels = kind == ReprKind::Implicit ? 0 : cfg.channels;
    FieldDecoder decoder = make_decoder<float>(repr_channels, cfg.hidden, 3, true,
                                               cfg.enc_levels, true, cfg.seed);
    return make_model(kind, cfg.resolution, cfg.channels, side, std::move(decoder), cfg.seed);
}

std::string metrics_csv_header() {
    return "iter,mse,density_reg,psnr_holdout,ssim_holdout,wallclock_ms";
}

std::string metrics_csv_row(const MetricsRow& row) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.10e,%.10e,%.6f,%.6f,%lld", row.iter, row.mse,
                  row.density_reg, row.psnr_holdout, row.ssim_holdout,
                  static_cast<long long>(row.wallclock_ms));
    return buf;
}

TrainResult train_sso(const DatasetManifest& data, ReprKind kind, const TrainConfig& cfg) {
    if (data.frames.empty()) throw input_error("train_sso: empty dataset");
    if (cfg.batch_rays < 1) throw input_error("train_sso: batch_rays must be >= 1");
    if (cfg.iterations < 0) throw input_error("train_sso: negative iteration count");

    std::vector<FrameData> frames;
    frames.reserve(data.frames.size());
    for (const auto& f : data.frames) {
        FrameData fd;
        fd.image = read_png_rgb8(data.root / f.image);
        fd.camera = f.camera;
        if (fd.image.width != fd.camera.width || fd.image.height != fd.camera.height)
            throw input_error("train_sso: image/camera size mismatch for " + f.image);
        frames.push_back(std::move(fd));
    }

    std::vector<int> train_frames, holdout_frames;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (cfg.holdout_every > 0 && i % cfg.holdout_every == 0 && frames.size() > 1)
            holdout_frames.push_back(static_cast<int>(i));
        else
            train_frames.push_back(static_cast<int>(i));
    }
    if (train_frames.empty()) train_frames.push_back(0);

    TrainResult result;
    result.holdout_frames = holdout_frames;
    result.model = make_train_model(kind, data.side, cfg);
    FieldModel& model = result.model;

    const std::vector<double> background(data.background.begin(), data.background.end());
    AdamState adam = make_adam_state(model, cfg.adam);
    GradientTape tape = make_tape(model);
    std::vector<GradientTape> chunk_tapes(kGradChunks, make_tape(model));

    const int nthreads = std::max(1, cfg.threads);
    const auto t_start = std::chrono::steady_clock::now();

    auto evaluate_holdout = [&](double& out_psnr, double& out_ssim) {
        if (holdout_frames.empty()) {
            out_psnr = 0.0;
            out_ssim = 0.0;
            return;
        }
        RenderConfig<float> rcfg;
        rcfg.coarse_samples = cfg.coarse_samples;
        rcfg.fine_samples = cfg.fine_samples;
        rcfg.background = background;
        rcfg.jitter = false;
        rcfg.seed = cfg.seed;
        rcfg.threads = nthreads;
        double psnr_acc = 0.0, ssim_acc = 0.0;
        for (int fi : holdout_frames) {
            RenderOutput out = render_image(model, frames[fi].camera, rcfg);
            psnr_acc += psnr(out.features, frames[fi].image);
            ssim_acc += ssim(out.features, frames[fi].image);
        }
        out_psnr = psnr_acc / holdout_frames.size();
        out_ssim = ssim_acc / holdout_frames.size();
    };

    const double loss_grad_scale = 1.0 / (3.0 * cfg.batch_rays);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        // Draw the batch (cheap, deterministic, done up front).
        std::vector<RaySample> batch(cfg.batch_rays);
        for (int b = 0; b < cfg.batch_rays; ++b) {
            const std::uint64_t stream = rng_stream::train_ray(iter, b);
            CounterRng rng(cfg.seed, stream);
            const int fi =
                train_frames[rng.uniform_index(train_frames.size())];
            const FrameData& frame = frames[fi];
            const int px = static_cast<int>(rng.uniform_index(frame.camera.width));
            const int py = static_cast<int>(rng.uniform_index(frame.camera.height));
            RaySample rs;
            rs.ray = generate_ray(frame.camera, px, py);
            rs.target = {frame.image.at(py, px, 0), frame.image.at(py, px, 1),
                         frame.image.at(py, px, 2)};
            rs.stream = stream + (1ULL << 23);  // sampling stream, disjoint from selection
            batch[b] = rs;
        }

        // Chunked gradient accumulation.
        std::array<double, kGradChunks> chunk_sq_err{};
        std::atomic<int> next_chunk{0};
        auto worker = [&]() {
            for (;;) {
                const int ci = next_chunk.fetch_add(1);
                if (ci >= kGradChunks) break;
                GradientTape& ctape = chunk_tapes[ci];
                ctape.zero();
                const int lo = static_cast<int>(
                    static_cast<std::int64_t>(ci) * cfg.batch_rays / kGradChunks);
                const int hi = static_cast<int>(
                    static_cast<std::int64_t>(ci + 1) * cfg.batch_rays / kGradChunks);
                double sq = 0.0;
                for (int b = lo; b < hi; ++b)
                    sq += train_ray(model, batch[b], cfg, background, loss_grad_scale,
                                    ctape, cfg.seed);
                chunk_sq_err[ci] = sq;
            }
        };
        if (nthreads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }

        tape.zero();
        double sq_err = 0.0;
        for (int ci = 0; ci < kGradChunks; ++ci) {
            tape.add(chunk_tapes[ci]);
            sq_err += chunk_sq_err[ci];
        }
        const double batch_mse = sq_err / (3.0 * cfg.batch_rays);

        double density_loss = 0.0;
        if (cfg.lambda_density > 0.0 && cfg.density_every > 0 &&
            iter % cfg.density_every == 0) {
            CounterRng dr_rng(cfg.seed, rng_stream::density_reg(iter));
            density_loss = density_regularization(model, cfg.density_pairs,
                                                  cfg.density_perturb_frac * model.side,
                                                  dr_rng, tape, cfg.lambda_density);
        }

        if (!std::isfinite(batch_mse) || !std::isfinite(density_loss))
            throw numerical_error("train_sso: non-finite loss at iteration " +
                                  std::to_string(iter) + " (mse=" + std::to_string(batch_mse) +
                                  ", density=" + std::to_string(density_loss) + ")");

        adam_step(model, tape, adam);

        const bool eval_now =
            (cfg.eval_every > 0 && (iter + 1) % cfg.eval_every == 0) ||
            iter + 1 == cfg.iterations;
        if (eval_now) {
            MetricsRow row;
            row.iter = iter + 1;
            row.mse = batch_mse;
            row.density_reg = density_loss;
            evaluate_holdout(row.psnr_holdout, row.ssim_holdout);
            row.wallclock_ms =
                cfg.log_timing
                    ? std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t_start).count()
                    : 0;
            result.metrics.push_back(row);
        }
    }

    return result;
}

TrainResult train_sso_to_dir(const DatasetManifest& data, ReprKind kind,
                             const TrainConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    TrainResult result = train_sso(data, kind, cfg);
    save_checkpoint(out_dir / "checkpoint.tpf", result.model);
    std::ofstream csv(out_dir / "metrics.csv");
    if (!csv) throw io_error("train_sso: cannot write metrics.csv");
    csv << metrics_csv_header() << "\n";
    for (const auto& row : result.metrics) csv << metrics_csv_row(row) << "\n";
    return result;
}

}  // namespace trifield
