// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "trifield/core.hpp"

namespace trifield {

// PSNR in dB for images in [0,1]. Identical inputs return +infinity.
double psnr(const ImageF& a, const ImageF& b);

// Mean SSIM over sliding 8x8 uniform windows (stride 1, valid placements),
// averaged across channels. C1 = 0.01^2, C2 = 0.03^2 on unit dynamic range.
// Images smaller than the window are treated as a single window.
double ssim(const ImageF& a, const ImageF& b);

}  // namespace trifield
