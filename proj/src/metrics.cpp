// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0

#include "trifield/metrics.hpp"

namespace trifield {

double psnr(const ImageF& a, const ImageF& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw input_error("psnr: image shape mismatch");
    if (a.data.empty()) throw input_error("psnr: empty image");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

namespace {

constexpr int kWindow = 8;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

double ssim_window(const ImageF& a, const ImageF& b, int y0, int x0, int wy, int wx, int ch) {
    double ma = 0.0, mb = 0.0;
    const double n = static_cast<double>(wy) * wx;
    for (int y = y0; y < y0 + wy; ++y)
        for (int x = x0; x < x0 + wx; ++x) {
            ma += a.at(y, x, ch);
            mb += b.at(y, x, ch);
        }
    ma /= n;
    mb /= n;
    double va = 0.0, vb = 0.0, cov = 0.0;
    for (int y = y0; y < y0 + wy; ++y)
        for (int x = x0; x < x0 + wx; ++x) {
            const double da = a.at(y, x, ch) - ma;
            const double db = b.at(y, x, ch) - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
        }
    va /= n;
    vb /= n;
    cov /= n;
    return ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
           ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
}

}  // namespace

double ssim(const ImageF& a, const ImageF& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw input_error("ssim: image shape mismatch");
    if (a.data.empty()) throw input_error("ssim: empty image");
    const int wy = std::min(kWindow, a.height);
    const int wx = std::min(kWindow, a.width);
    double acc = 0.0;
    std::size_t count = 0;
    for (int ch = 0; ch < a.channels; ++ch)
        for (int y0 = 0; y0 + wy <= a.height; ++y0)
            for (int x0 = 0; x0 + wx <= a.width; ++x0) {
                acc += ssim_window(a, b, y0, x0, wy, wx, ch);
                ++count;
            }
    return acc / static_cast<double>(count);
}

}  // namespace trifield
