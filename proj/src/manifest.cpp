// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include <json.hpp>

#include "trifield/io.hpp"

namespace trifield {

using nlohmann::json;

namespace {

json camera_json(const Camera& cam) {
    return json{{"fx", cam.fx},       {"fy", cam.fy},
                {"cx", cam.cx},       {"cy", cam.cy},
                {"w", cam.width},     {"h", cam.height},
                {"near", cam.near_t}, {"far", cam.far_t},
                {"cam2world", cam.cam2world}};
}

Camera camera_from(const json& j) {
    Camera cam;
    try {
        cam.fx = j.at("fx").get<double>();
        cam.fy = j.at("fy").get<double>();
        cam.cx = j.at("cx").get<double>();
        cam.cy = j.at("cy").get<double>();
        cam.width = j.at("w").get<int>();
        cam.height = j.at("h").get<int>();
        cam.near_t = j.at("near").get<double>();
        cam.far_t = j.at("far").get<double>();
        const auto m = j.at("cam2world").get<std::vector<double>>();
        if (m.size() != 16) throw input_error("camera: cam2world must have 16 entries");
        std::copy(m.begin(), m.end(), cam.cam2world.begin());
    } catch (const json::exception& e) {
        throw input_error(std::string("camera: malformed JSON: ") + e.what());
    }
    cam.validate();
    return cam;
}

json parse(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw input_error(std::string(what) + ": invalid JSON");
    return j;
}

std::string slurp(const std::filesystem::path& path, const char* what) {
    std::ifstream is(path);
    if (!is) throw io_error(std::string(what) + ": cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string camera_to_json(const Camera& cam) { return camera_json(cam).dump(2); }

Camera camera_from_json_text(const std::string& text) {
    return camera_from(parse(text, "camera"));
}

Camera load_camera(const std::filesystem::path& path) {
    return camera_from_json_text(slurp(path, "camera"));
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    json frames = json::array();
    for (const auto& frame : manifest.frames)
        frames.push_back({{"image", frame.image}, {"camera", camera_json(frame.camera)}});
    const json j{{"version", kManifestSchema},
                 {"side", manifest.side},
                 {"background", manifest.background},
                 {"frames", frames}};
    std::ofstream os(path);
    if (!os) throw io_error("manifest: cannot open " + path.string() + " for writing");
    os << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    const json j = parse(slurp(path, "manifest"), "manifest");
    DatasetManifest manifest;
    manifest.root = path.parent_path();
    try {
        const auto version = j.at("version").get<std::string>();
        if (version != kManifestSchema)
            throw input_error("manifest: unsupported schema version \"" + version +
                              "\" (expected " + kManifestSchema + ")");
        manifest.side = j.at("side").get<double>();
        const auto bg = j.at("background").get<std::vector<double>>();
        if (bg.size() != 3) throw input_error("manifest: background must have 3 entries");
        std::copy(bg.begin(), bg.end(), manifest.background.begin());
        for (const auto& f : j.at("frames")) {
            DatasetFrame frame;
            frame.image = f.at("image").get<std::string>();
            frame.camera = camera_from(f.at("camera"));
            if (!std::filesystem::exists(manifest.root / frame.image))
                throw input_error("manifest: missing image file " + frame.image);
            manifest.frames.push_back(std::move(frame));
        }
    } catch (const json::exception& e) {
        throw input_error(std::string("manifest: malformed JSON: ") + e.what());
    }
    if (!(manifest.side > 0.0)) throw input_error("manifest: side must be positive");
    return manifest;
}

void save_sigma_matrix(const std::filesystem::path& path, const std::array<double, 16>& sigma) {
    std::ofstream os(path);
    if (!os) throw io_error("sigma matrix: cannot open " + path.string() + " for writing");
    os << json(sigma).dump() << "\n";
}

std::array<double, 16> load_sigma_matrix(const std::filesystem::path& path) {
    const json j = parse(slurp(path, "sigma matrix"), "sigma matrix");
    std::array<double, 16> sigma{};
    try {
        const auto v = j.get<std::vector<double>>();
        if (v.size() != 16) throw input_error("sigma matrix: need exactly 16 numbers");
        std::copy(v.begin(), v.end(), sigma.begin());
    } catch (const json::exception& e) {
        throw input_error(std::string("sigma matrix: malformed JSON: ") + e.what());
    }
    return sigma;
}

}  // namespace trifield
