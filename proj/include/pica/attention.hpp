#ifndef PICA_ATTENTION_HPP
#define PICA_ATTENTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pica/attention_map.hpp"
#include "pica/error.hpp"
#include "pica/image.hpp"
#include "pica/image_io.hpp"
#include "pica/models.hpp"

namespace pica {

enum class Upsample { Bilinear, Nearest };

namespace detail {

// Half-pixel-centre source coordinate on a grid of `src` cells for output
// cell `dst` of `out`.
inline double source_coord(std::size_t dst, std::size_t src, std::size_t out) {
    double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(src) / static_cast<double>(out) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(src - 1));
}

inline std::vector<double> upsample(const std::vector<double>& grid, std::size_t gh, std::size_t gw, std::size_t oh,
                                    std::size_t ow, Upsample mode) {
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            if (mode == Upsample::Nearest) {
                auto sy = std::min(y * gh / oh, gh - 1);
                auto sx = std::min(x * gw / ow, gw - 1);
                out[y * ow + x] = grid[sy * gw + sx];
                continue;
            }
            const double sy = source_coord(y, gh, oh);
            const double sx = source_coord(x, gw, ow);
            const auto y0 = static_cast<std::size_t>(sy);
            const auto x0 = static_cast<std::size_t>(sx);
            const auto y1 = std::min(y0 + 1, gh - 1);
            const auto x1 = std::min(x0 + 1, gw - 1);
            const double fy = sy - static_cast<double>(y0);
            const double fx = sx - static_cast<double>(x0);
            const double top = grid[y0 * gw + x0] * (1.0 - fx) + grid[y0 * gw + x1] * fx;
            const double bottom = grid[y1 * gw + x0] * (1.0 - fx) + grid[y1 * gw + x1] * fx;
            out[y * ow + x] = top * (1.0 - fy) + bottom * fy;
        }
    }
    return out;
}

} // namespace detail

/// Affine rescale of a non-negative map to [0, 255] and 8-bit quantisation.
/// All-zero stays all-zero; a constant positive map becomes all-255.
inline AttentionMap quantize_map(const std::vector<double>& values, std::size_t height, std::size_t width) {
    AttentionMap out(height, width);
    if (values.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > 0.0)) return out;
    std::vector<std::uint8_t> q(values.size(), 255);
    if (hi > lo) {
        for (std::size_t i = 0; i < values.size(); ++i) q[i] = to_intensity((values[i] - lo) / (hi - lo) * 255.0);
    }
    return {height, width, std::move(q)};
}

/// CAM from precomputed feature maps and one weight per feature map: weighted
/// sum, rectification, upsampling to height x width, rescale and quantisation.
inline AttentionMap cam_from_features(const FeatureMaps& features, std::span<const double> weights,
                                      std::size_t height, std::size_t width, Upsample mode = Upsample::Bilinear) {
    if (weights.size() != features.count) {
        throw StructuralError("CAM needs one weight per feature map (" + std::to_string(features.count) + "), got " +
                              std::to_string(weights.size()));
    }
    if (features.height == 0 || features.width == 0) throw StructuralError("CAM on an empty feature grid");
    std::vector<double> grid(features.height * features.width, 0.0);
    for (std::size_t i = 0; i < features.height; ++i) {
        for (std::size_t j = 0; j < features.width; ++j) {
            double m = 0.0;
            for (std::size_t k = 0; k < features.count; ++k) m += weights[k] * features(k, i, j);
            grid[i * features.width + j] = std::max(m, 0.0);
        }
    }
    auto up = detail::upsample(grid, features.height, features.width, height, width, mode);
    return quantize_map(up, height, width);
}

/// Class activation map of the proxy's top-1 class on `image`.
inline AttentionMap compute_cam(const ConvGapModel& proxy, const Image& image, Upsample mode = Upsample::Bilinear) {
    proxy.validate();
    const auto features = proxy.features(image);
    const auto logits = proxy.logits_from_features(features);
    const auto top = argmax(logits);
    std::vector<double> w(proxy.num_filters);
    for (std::size_t k = 0; k < proxy.num_filters; ++k) w[k] = proxy.class_weight(k, top);
    return cam_from_features(features, w, image.height(), image.width(), mode);
}

inline AttentionMap load_attention(const std::filesystem::path& path, std::size_t height, std::size_t width) {
    auto map = io::read_attention(path);
    if (map.height() != height || map.width() != width) {
        throw StructuralError("attention map '" + path.string() + "' is " + std::to_string(map.height()) + "x" +
                              std::to_string(map.width()) + ", target image is " + std::to_string(height) + "x" +
                              std::to_string(width));
    }
    return map;
}

inline void save_attention(const std::filesystem::path& path, const AttentionMap& map) {
    io::write_attention(path, map);
}

} // namespace pica

#endif // PICA_ATTENTION_HPP
