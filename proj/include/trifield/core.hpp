// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace trifield {

// ---------------------------------------------------------------------------
// Error taxonomy. input_error covers bad user-facing data (maps to CLI exit
// code 2), contract_error covers broken internal preconditions, and
// numerical_error covers NaN blowups during optimization (CLI exit code 3).
// ---------------------------------------------------------------------------

class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

class contract_error : public std::logic_error {
public:
    explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Small vector type. Geometry is always carried in double; only stored
// features and network weights switch between float and double.
// ---------------------------------------------------------------------------

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    double& operator[](int i) { return (&x)[i]; }
    double operator[](int i) const { return (&x)[i]; }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x; y += o.y; z += o.z;
        return *this;
    }

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
    double n = norm(v);
    if (n == 0.0) throw contract_error("normalized: zero-length vector");
    return v * (1.0 / n);
}

// ---------------------------------------------------------------------------
// Dense interleaved image, channel-last.
// ---------------------------------------------------------------------------

template <typename T>
struct Image {
    int width = 0, height = 0, channels = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c, T fill = T(0))
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    T& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    T at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t size() const { return data.size(); }
};

using ImageF = Image<float>;

// ---------------------------------------------------------------------------
// Counter-based RNG. Every consumer derives an independent stream from
// (seed, stream id), so parallel work is bitwise reproducible no matter how
// it is scheduled. splitmix64 core.
// ---------------------------------------------------------------------------

class CounterRng {
public:
    CounterRng() : CounterRng(0, 0) {}
    CounterRng(std::uint64_t seed, std::uint64_t stream) {
        state_ = mix(seed + 0x9E3779B97F4A7C15ULL);
        state_ ^= mix(stream + 0xD1B54A32D192ED03ULL);
        has_spare_ = false;
        spare_ = 0.0;
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // standard normal, Box-Muller with cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
    bool has_spare_;
    double spare_;
};

// Stream ids for the fixed consumers of randomness: a domain tag in the top
// 16 bits, a domain-specific payload below. Keeps seeds from colliding across
// subsystems and makes parallel work independent of scheduling.
namespace rng_stream {
inline constexpr std::uint64_t domain(std::uint64_t d, std::uint64_t payload = 0) {
    return (d << 48) | payload;
}
inline constexpr std::uint64_t pixel(std::uint64_t pixel_index) {
    return domain(1, pixel_index);
}
// one stream per (iteration, ray-in-batch)
inline constexpr std::uint64_t train_ray(std::uint64_t iter, std::uint64_t ray) {
    return domain(2, (iter << 24) | ray);
}
inline constexpr std::uint64_t density_reg(std::uint64_t iter) { return domain(3, iter); }
inline constexpr std::uint64_t init(std::uint64_t block) { return domain(4, block); }
inline constexpr std::uint64_t dataset(std::uint64_t view) { return domain(5, view); }
inline constexpr std::uint64_t bench(std::uint64_t which = 0) { return domain(6, which); }
inline constexpr std::uint64_t kPixel = domain(1);
inline constexpr std::uint64_t kInit = domain(4);
inline constexpr std::uint64_t kDataset = domain(5);
inline constexpr std::uint64_t kBench = domain(6);
}  // namespace rng_stream

// ---------------------------------------------------------------------------
// Activation math. The float path uses polynomial exp/log (Cephes coefficients)
// so softplus-heavy inner loops vectorize; the double path stays on libm for
// the double-precision gradient checks.
// ---------------------------------------------------------------------------

inline float fast_expf(float x) {
    // exp(x) = 2^n * exp(r), |r| <= 0.5 ln 2
    x = x < 88.0f ? x : 88.0f;
    x = x > -87.0f ? x : -87.0f;
    float z = std::floor(1.44269504088896341f * x + 0.5f);
    x -= z * 0.693359375f;
    x -= z * -2.12194440e-4f;
    float y = 1.9875691500e-4f;
    y = y * x + 1.3981999507e-3f;
    y = y * x + 8.3334519073e-3f;
    y = y * x + 4.1665795894e-2f;
    y = y * x + 1.6666665459e-1f;
    y = y * x + 5.0000001201e-1f;
    y = y * x * x + x + 1.0f;
    // scale by 2^n through the exponent bits
    std::int32_t n = static_cast<std::int32_t>(z);
    std::int32_t bits;
    std::memcpy(&bits, &y, 4);
    bits += n << 23;
    std::memcpy(&y, &bits, 4);
    return y;
}

inline float fast_logf(float x) {
    // log(m * 2^e) = log(m) + e ln 2, m in [sqrt(1/2), sqrt(2))
    std::int32_t bits;
    std::memcpy(&bits, &x, 4);
    std::int32_t e = ((bits >> 23) & 0xFF) - 126;
    bits = (bits & 0x007FFFFF) | 0x3F000000;  // m in [0.5, 1)
    float m;
    std::memcpy(&m, &bits, 4);
    if (m < 0.70710678118654752440f) {
        e -= 1;
        m += m;
    }
    m -= 1.0f;
    float z = m * m;
    float y = 7.0376836292e-2f;
    y = y * m + -1.1514610310e-1f;
    y = y * m + 1.1676998740e-1f;
    y = y * m + -1.2420140846e-1f;
    y = y * m + 1.4249322787e-1f;
    y = y * m + -1.6668057665e-1f;
    y = y * m + 2.0000714765e-1f;
    y = y * m + -2.4999993993e-1f;
    y = y * m + 3.3333331174e-1f;
    y = y * m * z;
    float fe = static_cast<float>(e);
    y += fe * -2.12194440e-4f;
    y -= 0.5f * z;
    return m + y + fe * 0.693359375f;
}

// softplus(x) = log(1 + e^x), strictly positive for all x
template <typename T>
inline T softplus(T x) {
    if constexpr (std::is_same_v<T, float>) {
        if (x > 20.0f) return x;
        if (x < -20.0f) return fast_expf(x);
        return fast_logf(1.0f + fast_expf(x));
    } else {
        if (x > 35.0) return x;
        if (x < -35.0) return std::exp(x);
        return std::log1p(std::exp(x));
    }
}

// d/dx softplus(x) = logistic(x); recoverable from the cached softplus value
// s as 1 - e^{-s}, which the backward passes rely on.
template <typename T>
inline T logistic(T x) {
    if constexpr (std::is_same_v<T, float>) {
        return 1.0f / (1.0f + fast_expf(-x));
    } else {
        return 1.0 / (1.0 + std::exp(-x));
    }
}

template <typename T>
inline T softplus_grad_from_value(T softplus_value) {
    if constexpr (std::is_same_v<T, float>) {
        return 1.0f - fast_expf(-softplus_value);
    } else {
        return 1.0 - std::exp(-softplus_value);
    }
}

template <typename T>
inline void check_finite(std::span<const T> values, const char* what) {
    for (const T& v : values)
        if (!std::isfinite(static_cast<double>(v)))
            throw input_error(std::string(what) + ": non-finite value");
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace trifield
