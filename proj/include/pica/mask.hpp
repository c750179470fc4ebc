#ifndef PICA_MASK_HPP
#define PICA_MASK_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pica/attention_map.hpp"
#include "pica/error.hpp"
#include "pica/image.hpp"

namespace pica {

/// Spatial selection of attackable positions.
class PixelMask {
public:
    PixelMask() = default;
    PixelMask(std::size_t height, std::size_t width, bool fill = false)
        : height_(height), width_(width), bits_(height * width, fill ? 1 : 0) {}

    static PixelMask full(std::size_t height, std::size_t width) { return {height, width, true}; }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }

    bool test(std::size_t l, std::size_t w) const noexcept { return bits_[l * width_ + w] != 0; }
    void set(std::size_t l, std::size_t w, bool on = true) noexcept { bits_[l * width_ + w] = on ? 1 : 0; }

    std::size_t popcount() const noexcept {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }
    bool none() const noexcept { return popcount() == 0; }

    bool subset_of(const PixelMask& other) const {
        require_same_size(other);
        for (std::size_t i = 0; i < bits_.size(); ++i) {
            if (bits_[i] && !other.bits_[i]) return false;
        }
        return true;
    }

    PixelMask operator&(const PixelMask& other) const {
        require_same_size(other);
        PixelMask out(height_, width_);
        for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & other.bits_[i];
        return out;
    }

    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    friend bool operator==(const PixelMask&, const PixelMask&) = default;

private:
    void require_same_size(const PixelMask& other) const {
        if (height_ != other.height_ || width_ != other.width_) {
            throw StructuralError("mask size mismatch");
        }
    }

    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Which half of the checkerboard survives parity refinement.
enum class ParitySegment { Even, Odd };

inline PixelMask binarize(const AttentionMap& map) {
    PixelMask mask(map.height(), map.width());
    for (std::size_t l = 0; l < map.height(); ++l) {
        for (std::size_t w = 0; w < map.width(); ++w) {
            if (map(l, w) != 0) mask.set(l, w);
        }
    }
    return mask;
}

inline PixelMask checkerboard(std::size_t height, std::size_t width, ParitySegment segment = ParitySegment::Even) {
    const std::size_t keep = segment == ParitySegment::Even ? 0 : 1;
    PixelMask mask(height, width);
    for (std::size_t l = 0; l < height; ++l) {
        for (std::size_t w = 0; w < width; ++w) {
            if ((l + w) % 2 == keep) mask.set(l, w);
        }
    }
    return mask;
}

/// Keep one pixel of every two neighbours: a set bit survives iff (l + w) has
/// the segment's parity. The parity of l + w is the same for 0- and 1-based
/// coordinates, so Even selects the segment containing the top-left pixel.
inline PixelMask parity_refine(const PixelMask& mask, ParitySegment segment = ParitySegment::Even) {
    return mask & checkerboard(mask.height(), mask.width(), segment);
}

struct VariableCoord {
    std::size_t l = 0;
    std::size_t w = 0;
    std::size_t c = 0;

    friend bool operator==(const VariableCoord&, const VariableCoord&) = default;
};

/// Genome coordinate system: variable i <-> image position (l, w, c), in
/// row-major order over the set mask bits, every channel of a selected pixel.
class VariableIndex {
public:
    VariableIndex() = default;

    VariableIndex(const PixelMask& mask, std::size_t channels)
        : shape_{mask.height(), mask.width(), channels}, lookup_(shape_.size(), npos) {
        if (channels != 1 && channels != 3) {
            throw StructuralError("variable index needs 1 or 3 channels, got " + std::to_string(channels));
        }
        coords_.reserve(mask.popcount() * channels);
        for (std::size_t l = 0; l < mask.height(); ++l) {
            for (std::size_t w = 0; w < mask.width(); ++w) {
                if (!mask.test(l, w)) continue;
                for (std::size_t c = 0; c < channels; ++c) {
                    lookup_[(l * shape_.width + w) * channels + c] = coords_.size();
                    coords_.push_back({l, w, c});
                }
            }
        }
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return coords_.size(); }
    bool empty() const noexcept { return coords_.empty(); }

    const VariableCoord& coord(std::size_t i) const { return coords_.at(i); }
    std::span<const VariableCoord> coords() const noexcept { return coords_; }

    /// Flat offset into an image of shape() for variable i.
    std::size_t offset(std::size_t i) const noexcept {
        const auto& v = coords_[i];
        return (v.l * shape_.width + v.w) * shape_.channels + v.c;
    }

    std::optional<std::size_t> find(std::size_t l, std::size_t w, std::size_t c) const noexcept {
        if (l >= shape_.height || w >= shape_.width || c >= shape_.channels) return std::nullopt;
        auto i = lookup_[(l * shape_.width + w) * shape_.channels + c];
        if (i == npos) return std::nullopt;
        return i;
    }

    PixelMask spatial_mask() const {
        PixelMask m(shape_.height, shape_.width);
        for (const auto& v : coords_) m.set(v.l, v.w);
        return m;
    }

private:
    Shape shape_{};
    std::vector<VariableCoord> coords_;
    std::vector<std::size_t> lookup_;
};

inline VariableIndex build_index(const PixelMask& mask, std::size_t channels) { return {mask, channels}; }

} // namespace pica

#endif // PICA_MASK_HPP
