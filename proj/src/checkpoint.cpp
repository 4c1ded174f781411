// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout (all little-endian):
//   magic "TPF1" | version u32 | repr kind u8
//   tri-plane: N u32, C u32, side f64, 3 * N*N*C f32 (plane order xy, xz, yz)
//   voxel:     M u32, C_v u32, side f64, M^3 * C_v f32
//   implicit:  side f64
//   decoder:   use_encoding u8, enc_levels u32, rgb_squash u8, K u32,
//              repr_channels u32, layer_count u32,
//              per layer: in u32, out u32, in*out f32 weights ([in][out]
//              row-major), out f32 biases

#include <bit>
#include <fstream>

#include "trifield/io.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace trifield {

namespace {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw io_error("checkpoint: truncated file");
    return v;
}

void write_floats(std::ostream& os, const std::vector<float>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::istream& is, std::vector<float>& v, std::size_t count) {
    v.resize(count);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!is) throw io_error("checkpoint: truncated feature data");
}

constexpr char kMagic[4] = {'T', 'P', 'F', '1'};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FieldModel& model) {
    model.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("checkpoint: cannot open " + path.string() + " for writing");
    os.write(kMagic, 4);
    write_pod<std::uint32_t>(os, kCheckpointVersion);
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(model.kind));
    switch (model.kind) {
        case ReprKind::TriPlane:
            write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(model.triplane.resolution));
            write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(model.triplane.channels));
            write_pod<double>(os, model.triplane.side);
            for (const auto& plane : model.triplane.planes) write_floats(os, plane);
            break;
        case ReprKind::Voxel:
            write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(model.voxel.resolution));
            write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(model.voxel.channels));
            write_pod<double>(os, model.voxel.side);
            write_floats(os, model.voxel.values);
            break;
        case ReprKind::Implicit:
            write_pod<double>(os, model.side);
            break;
    }
    const auto& dec = model.decoder;
    write_pod<std::uint8_t>(os, dec.use_encoding ? 1 : 0);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(dec.enc_levels));
    write_pod<std::uint8_t>(os, dec.rgb_squash ? 1 : 0);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(dec.feature_channels));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(dec.repr_channels));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(dec.layers.size()));
    for (const auto& layer : dec.layers) {
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(layer.in_width));
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(layer.out_width));
        write_floats(os, layer.w);
        write_floats(os, layer.b);
    }
    if (!os) throw io_error("checkpoint: write failed for " + path.string());
}

FieldModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("checkpoint: cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw io_error("checkpoint: bad magic in " + path.string());
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kCheckpointVersion)
        throw io_error("checkpoint: unsupported version " + std::to_string(version));
    const auto kind_byte = read_pod<std::uint8_t>(is);
    if (kind_byte > 2) throw io_error("checkpoint: unknown representation kind");

    FieldModel model;
    model.kind = static_cast<ReprKind>(kind_byte);
    switch (model.kind) {
        case ReprKind::TriPlane: {
            const auto n = read_pod<std::uint32_t>(is);
            const auto c = read_pod<std::uint32_t>(is);
            const auto side = read_pod<double>(is);
            model.triplane = TriPlane(static_cast<int>(n), static_cast<int>(c), side);
            model.side = side;
            for (auto& plane : model.triplane.planes)
                read_floats(is, plane, static_cast<std::size_t>(n) * n * c);
            break;
        }
        case ReprKind::Voxel: {
            const auto m = read_pod<std::uint32_t>(is);
            const auto c = read_pod<std::uint32_t>(is);
            const auto side = read_pod<double>(is);
            model.voxel = VoxelGrid(static_cast<int>(m), static_cast<int>(c), side);
            model.side = side;
            read_floats(is, model.voxel.values, static_cast<std::size_t>(m) * m * m * c);
            break;
        }
        case ReprKind::Implicit:
            model.side = read_pod<double>(is);
            break;
    }

    auto& dec = model.decoder;
    dec.use_encoding = read_pod<std::uint8_t>(is) != 0;
    dec.enc_levels = static_cast<int>(read_pod<std::uint32_t>(is));
    dec.rgb_squash = read_pod<std::uint8_t>(is) != 0;
    dec.feature_channels = static_cast<int>(read_pod<std::uint32_t>(is));
    dec.repr_channels = static_cast<int>(read_pod<std::uint32_t>(is));
    const auto n_layers = read_pod<std::uint32_t>(is);
    if (n_layers == 0 || n_layers > 64) throw io_error("checkpoint: implausible layer count");
    dec.layers.resize(n_layers);
    for (auto& layer : dec.layers) {
        layer.in_width = static_cast<int>(read_pod<std::uint32_t>(is));
        layer.out_width = static_cast<int>(read_pod<std::uint32_t>(is));
        if (layer.in_width < 1 || layer.out_width < 1)
            throw io_error("checkpoint: bad layer shape");
        read_floats(is, layer.w,
                    static_cast<std::size_t>(layer.in_width) * layer.out_width);
        read_floats(is, layer.b, static_cast<std::size_t>(layer.out_width));
    }
    try {
        model.validate();
    } catch (const contract_error& e) {
        throw io_error(std::string("checkpoint: inconsistent contents: ") + e.what());
    }
    return model;
}

}  // namespace trifield
