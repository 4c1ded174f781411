// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0

#include <png.h>

#include "trifield/io.hpp"

namespace trifield {

void write_png_rgb8(const std::filesystem::path& path, const ImageF& image) {
    if (image.channels != 3) throw input_error("write_png_rgb8: need 3 channels");
    if (image.width < 1 || image.height < 1) throw input_error("write_png_rgb8: empty image");

    std::vector<std::uint8_t> bytes(image.data.size());
    for (std::size_t i = 0; i < image.data.size(); ++i) bytes[i] = quantize8(image.data[i]);

    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.string().c_str(), 0, bytes.data(),
                                 static_cast<png_int_32>(image.width * 3), nullptr))
        throw io_error("write_png_rgb8: " + std::string(png.message));
}

ImageF read_png_rgb8(const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.string().c_str()))
        throw io_error("read_png_rgb8: " + std::string(png.message));
    png.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, bytes.data(),
                               static_cast<png_int_32>(png.width * 3), nullptr))
        throw io_error("read_png_rgb8: " + std::string(png.message));

    ImageF image(static_cast<int>(png.width), static_cast<int>(png.height), 3);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        image.data[i] = static_cast<float>(bytes[i]) / 255.0f;
    return image;
}

}  // namespace trifield
