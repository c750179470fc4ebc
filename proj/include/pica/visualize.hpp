#ifndef PICA_VISUALIZE_HPP
#define PICA_VISUALIZE_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "pica/error.hpp"
#include "pica/image.hpp"
#include "pica/mask.hpp"
#include "pica/report_io.hpp"

namespace pica {

inline constexpr std::uint8_t kOutsideMaskGray = 200;
inline constexpr std::uint8_t kUnmodifiedGray = 80;
inline constexpr int kDeltaCenter = 128;

/// Perturbation pattern: pixels outside the mask are light gray, unmodified
/// pixels inside it dark gray, and changed pixels 128 + clamp(x, -127, 127)
/// per channel. A changed pixel that would come out exactly uniform light or
/// dark gray is moved one level towards 128 so it stays distinguishable.
inline Image render_pattern(const Image& original, const std::vector<io::PixelDelta>& deltas, const PixelMask& mask) {
    if (mask.height() != original.height() || mask.width() != original.width()) {
        throw StructuralError("mask is " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                              " but image is " + std::to_string(original.height()) + "x" +
                              std::to_string(original.width()));
    }
    const auto C = original.channels();
    Image out(original.shape());
    for (std::size_t l = 0; l < original.height(); ++l) {
        for (std::size_t w = 0; w < original.width(); ++w) {
            const auto g = mask.test(l, w) ? kUnmodifiedGray : kOutsideMaskGray;
            for (std::size_t c = 0; c < C; ++c) out(l, w, c) = g;
        }
    }

    std::vector<double> delta(original.shape().size(), 0.0);
    std::vector<std::uint8_t> changed(original.pixels(), 0);
    for (const auto& d : deltas) {
        if (d.l >= original.height() || d.w >= original.width() || d.c >= C) {
            throw StructuralError("perturbation entry outside the image");
        }
        delta[original.offset(d.l, d.w, d.c)] = d.value;
        if (d.value != 0.0) changed[d.l * original.width() + d.w] = 1;
    }

    for (std::size_t l = 0; l < original.height(); ++l) {
        for (std::size_t w = 0; w < original.width(); ++w) {
            if (!changed[l * original.width() + w]) continue;
            bool uniform = true;
            for (std::size_t c = 0; c < C; ++c) {
                const double x = std::clamp(delta[original.offset(l, w, c)], -127.0, 127.0);
                out(l, w, c) = to_intensity(kDeltaCenter + x);
                uniform = uniform && out(l, w, c) == out(l, w, 0);
            }
            const auto v = out(l, w, 0);
            if (uniform && (v == kUnmodifiedGray || v == kOutsideMaskGray)) {
                const std::uint8_t nudged = v < kDeltaCenter ? v + 1 : v - 1;
                for (std::size_t c = 0; c < C; ++c) out(l, w, c) = nudged;
            }
        }
    }
    return out;
}

/// Spatial positions whose rendered colour is neither uniform light nor dark gray.
inline PixelMask pattern_support(const Image& pattern) {
    PixelMask m(pattern.height(), pattern.width());
    for (std::size_t l = 0; l < pattern.height(); ++l) {
        for (std::size_t w = 0; w < pattern.width(); ++w) {
            bool gray = true;
            const auto v = pattern(l, w, 0);
            for (std::size_t c = 0; c < pattern.channels(); ++c) gray = gray && pattern(l, w, c) == v;
            gray = gray && (v == kUnmodifiedGray || v == kOutsideMaskGray);
            if (!gray) m.set(l, w);
        }
    }
    return m;
}

} // namespace pica

#endif // PICA_VISUALIZE_HPP
