#ifndef PICA_ATTENTION_MAP_HPP
#define PICA_ATTENTION_MAP_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pica/error.hpp"

namespace pica {

/// Single-channel 8-bit saliency over the spatial grid of a target image.
class AttentionMap {
public:
    AttentionMap() = default;
    AttentionMap(std::size_t height, std::size_t width, std::uint8_t fill = 0)
        : height_(height), width_(width), values_(height * width, fill) {}
    AttentionMap(std::size_t height, std::size_t width, std::vector<std::uint8_t> values)
        : height_(height), width_(width), values_(std::move(values)) {
        if (values_.size() != height_ * width_) {
            throw StructuralError("attention map has " + std::to_string(values_.size()) + " values, expected " +
                                  std::to_string(height_ * width_));
        }
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }

    std::uint8_t operator()(std::size_t l, std::size_t w) const noexcept { return values_[l * width_ + w]; }
    std::uint8_t& operator()(std::size_t l, std::size_t w) noexcept { return values_[l * width_ + w]; }

    std::span<const std::uint8_t> values() const noexcept { return values_; }

    friend bool operator==(const AttentionMap&, const AttentionMap&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> values_;
};

} // namespace pica

#endif // PICA_ATTENTION_MAP_HPP
