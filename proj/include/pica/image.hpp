#ifndef PICA_IMAGE_HPP
#define PICA_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pica/error.hpp"

namespace pica {

struct Shape {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;

    std::size_t pixels() const noexcept { return height * width; }
    std::size_t size() const noexcept { return height * width * channels; }

    friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
    return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
}

/// Row-major H x W x C array of 8-bit intensities.
class Image {
public:
    Image() = default;

    explicit Image(Shape shape, std::uint8_t fill = 0) : shape_(check(shape)), data_(shape.size(), fill) {}

    Image(Shape shape, std::vector<std::uint8_t> data) : shape_(check(shape)), data_(std::move(data)) {
        if (data_.size() != shape_.size()) {
            throw StructuralError("image data length " + std::to_string(data_.size()) + " does not match shape " +
                                  to_string(shape_));
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t height() const noexcept { return shape_.height; }
    std::size_t width() const noexcept { return shape_.width; }
    std::size_t channels() const noexcept { return shape_.channels; }
    std::size_t pixels() const noexcept { return shape_.pixels(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t offset(std::size_t l, std::size_t w, std::size_t c) const noexcept {
        return (l * shape_.width + w) * shape_.channels + c;
    }

    std::uint8_t operator()(std::size_t l, std::size_t w, std::size_t c = 0) const noexcept {
        return data_[offset(l, w, c)];
    }
    std::uint8_t& operator()(std::size_t l, std::size_t w, std::size_t c = 0) noexcept {
        return data_[offset(l, w, c)];
    }

    std::span<const std::uint8_t> data() const noexcept { return data_; }
    std::span<std::uint8_t> data() noexcept { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    static Shape check(Shape s) {
        if (s.channels != 1 && s.channels != 3) {
            throw StructuralError("image must have 1 or 3 channels, got " + std::to_string(s.channels));
        }
        return s;
    }

    Shape shape_{};
    std::vector<std::uint8_t> data_;
};

/// Round half away from zero, then clamp into [0, 255].
inline std::uint8_t to_intensity(double v) noexcept {
    if (!(v > 0.0)) return 0; // also maps NaN to 0
    double r = std::round(v);
    return static_cast<std::uint8_t>(std::min(r, 255.0));
}

} // namespace pica

#endif // PICA_IMAGE_HPP
