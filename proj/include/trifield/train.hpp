// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0
//
// Single-scene-overfitting trainer: sample a ray batch across the training
// views, render with two-pass importance sampling, backpropagate the MSE
// through compositing into the representation and decoder, and apply Adam.
// Every fourth iteration adds the density smoothness penalty.
//
// Determinism contract: for a fixed seed the metrics log and checkpoint are
// byte-identical across runs and across thread counts. Rays draw from
// counter-based streams keyed by (iteration, ray index), and gradients
// accumulate into a fixed number of chunk tapes merged in chunk order, so
// float summation order never depends on scheduling.

#pragma once

#include <filesystem>

#include "trifield/io.hpp"
#include "trifield/metrics.hpp"
#include "trifield/optim.hpp"

namespace trifield {

struct TrainConfig {
    int iterations = 2000;
    int batch_rays = 6400;
    int coarse_samples = 48;
    int fine_samples = 48;

    double lambda_density = 0.1;
    int density_every = 4;       // apply the regularizer when iter % 4 == 0
    int density_pairs = 1000;
    double density_perturb_frac = 0.004;  // of the cube side

    std::uint64_t seed = 0;
    int threads = 1;

    int eval_every = 50;     // holdout metrics + CSV row cadence
    int holdout_every = 8;   // every 8th frame held out
    bool log_timing = true;  // wallclock_ms column; 0 when disabled

    // model shape
    int resolution = 64;  // N for tri-plane, M for voxel
    int channels = 16;    // C / C_v
    std::vector<int> hidden = {64, 64};
    int enc_levels = 4;

    AdamParams adam;
};

struct MetricsRow {
    int iter = 0;
    double mse = 0.0;
    double density_reg = 0.0;
    double psnr_holdout = 0.0;
    double ssim_holdout = 0.0;
    std::int64_t wallclock_ms = 0;
};

struct TrainResult {
    FieldModel model;
    std::vector<MetricsRow> metrics;
    std::vector<int> holdout_frames;
};

// Builds the seeded initial model for (kind, cfg); `fit --iters 0` writes
// exactly this.
FieldModel make_train_model(ReprKind kind, double side, const TrainConfig& cfg);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

TrainResult train_sso(const DatasetManifest& data, ReprKind kind, const TrainConfig& cfg);

// train_sso + checkpoint/metrics files in out_dir (checkpoint.tpf, metrics.csv).
TrainResult train_sso_to_dir(const DatasetManifest& data, ReprKind kind,
                             const TrainConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace trifield
