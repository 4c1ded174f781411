// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0
//
// File formats:
//   * checkpoints  — little-endian binary, magic "TPF1" (layout in README)
//   * manifests    — JSON, schema version "tpf-dataset/1"
//   * images       — 8-bit RGB PNG; [0,1] floats quantized by round(v * 255)

#pragma once

#include <filesystem>

#include "trifield/analytic.hpp"
#include "trifield/renderer.hpp"

namespace trifield {

// --- PNG -------------------------------------------------------------------

void write_png_rgb8(const std::filesystem::path& path, const ImageF& image);
ImageF read_png_rgb8(const std::filesystem::path& path);

inline std::uint8_t quantize8(float v) {
    const double q = std::nearbyint(clamp01(static_cast<double>(v)) * 255.0);
    return static_cast<std::uint8_t>(q);
}

// --- Checkpoints -------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const FieldModel& model);
FieldModel load_checkpoint(const std::filesystem::path& path);

// --- Camera JSON / dataset manifest ------------------------------------------

inline constexpr const char* kManifestSchema = "tpf-dataset/1";

std::string camera_to_json(const Camera& cam);
Camera camera_from_json_text(const std::string& text);
Camera load_camera(const std::filesystem::path& path);

struct DatasetFrame {
    std::string image;  // path relative to the manifest
    Camera camera;
};

struct DatasetManifest {
    double side = 2.0;
    std::array<double, 3> background{1.0, 1.0, 1.0};
    std::vector<DatasetFrame> frames;
    std::filesystem::path root;  // directory of the manifest file
};

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
// Validates the schema version, camera invariants, and that every referenced
// image exists.
DatasetManifest load_manifest(const std::filesystem::path& path);

// --- Pose noise sigma matrix (16 floats JSON) --------------------------------

void save_sigma_matrix(const std::filesystem::path& path, const std::array<double, 16>& sigma);
std::array<double, 16> load_sigma_matrix(const std::filesystem::path& path);

// --- Dataset generation -------------------------------------------------------

struct DatasetConfig {
    std::string scene = "sphere";  // sphere | boxes | two-blob
    int n_views = 32;
    int resolution = 128;
    std::uint64_t seed = 0;
    int gt_samples = 1024;  // uniform depth samples per ray for ground truth
    int threads = 1;
};

// Look-at camera ring used for synthetic datasets; exposed for tests.
Camera orbit_camera(int view_index, int n_views, int resolution, double side,
                    std::uint64_t seed);

// Renders ground-truth views of an analytic field and writes PNGs plus
// manifest.json into out_dir. Returns the manifest.
DatasetManifest make_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

// Ground-truth render of an analytic field through the standard quadrature.
ImageF render_analytic(const AnalyticField& field, const Camera& cam, int samples,
                       std::array<double, 3> background, int threads = 1);

}  // namespace trifield
