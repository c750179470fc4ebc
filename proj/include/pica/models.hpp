#ifndef PICA_MODELS_HPP
#define PICA_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pica/error.hpp"
#include "pica/image.hpp"

namespace pica {

inline std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.begin(), logits.end());
    if (p.empty()) return p;
    const double mx = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (auto& v : p) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : p) v /= sum;
    return p;
}

/// Index of the first maximum.
inline std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

/// logits = W * (x / 255) + b over the flattened row-major image.
struct LinearSoftmaxModel {
    Shape input{};
    std::size_t num_classes = 0;
    std::vector<double> weights; // [class][input.size()]
    std::vector<double> bias;    // [class]

    void validate() const {
        if (num_classes == 0) throw ConfigError("linear model needs at least one class");
        if (weights.size() != num_classes * input.size() || bias.size() != num_classes) {
            throw ConfigError("linear model weight shapes inconsistent with " + to_string(input) + " and " +
                              std::to_string(num_classes) + " classes");
        }
    }

    static LinearSoftmaxModel random(Shape input, std::size_t classes, std::uint64_t seed, double scale = 0.05) {
        LinearSoftmaxModel m{input, classes, std::vector<double>(classes * input.size()), std::vector<double>(classes)};
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> dist(0.0, scale);
        for (auto& w : m.weights) w = dist(rng);
        return m;
    }

    std::vector<double> logits(const Image& image) const {
        if (!(image.shape() == input)) {
            throw StructuralError("linear model expects " + to_string(input) + ", got " + to_string(image.shape()));
        }
        const auto x = image.data();
        const std::size_t n = x.size();
        std::vector<double> scaled(n);
        for (std::size_t i = 0; i < n; ++i) scaled[i] = x[i] / 255.0;
        std::vector<double> out(bias);
        for (std::size_t k = 0; k < num_classes; ++k) {
            const double* row = weights.data() + k * n;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += row[i] * scaled[i];
            out[k] += acc;
        }
        return out;
    }

    std::vector<double> probabilities(const Image& image) const { return softmax(logits(image)); }
};

/// Rectified convolution responses on the (strided) feature grid.
struct FeatureMaps {
    std::size_t count = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values; // [k][i][j]

    double operator()(std::size_t k, std::size_t i, std::size_t j) const noexcept {
        return values[(k * height + i) * width + j];
    }
    double& operator()(std::size_t k, std::size_t i, std::size_t j) noexcept {
        return values[(k * height + i) * width + j];
    }
};

/// conv (zero padded, strided) -> ReLU -> global average pooling -> linear.
/// Serves as the white-box proxy for class activation maps and as a toy
/// black-box target.
struct ConvGapModel {
    std::size_t in_channels = 3;
    std::size_t num_filters = 0;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t num_classes = 0;
    std::vector<double> conv_weights;  // [filter][channel][dy][dx]
    std::vector<double> conv_bias;     // [filter]
    std::vector<double> class_weights; // [filter][class]
    std::vector<double> class_bias;    // [class]

    void validate() const {
        if (kernel % 2 == 0) throw ConfigError("conv kernel size must be odd");
        if (stride == 0) throw ConfigError("conv stride must be positive");
        if (num_filters == 0 || num_classes == 0) throw ConfigError("conv-GAP model needs filters and classes");
        if (in_channels != 1 && in_channels != 3) throw ConfigError("conv-GAP model needs 1 or 3 input channels");
        if (conv_weights.size() != num_filters * in_channels * kernel * kernel || conv_bias.size() != num_filters ||
            class_weights.size() != num_filters * num_classes || class_bias.size() != num_classes) {
            throw ConfigError("conv-GAP weight shapes inconsistent");
        }
    }

    static ConvGapModel random(std::size_t in_channels, std::size_t filters, std::size_t kernel, std::size_t stride,
                               std::size_t classes, std::uint64_t seed) {
        ConvGapModel m{in_channels,
                       filters,
                       kernel,
                       stride,
                       classes,
                       std::vector<double>(filters * in_channels * kernel * kernel),
                       std::vector<double>(filters),
                       std::vector<double>(filters * classes),
                       std::vector<double>(classes)};
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> conv(0.0, 1.0 / std::sqrt(static_cast<double>(in_channels * kernel * kernel)));
        std::normal_distribution<double> dense(0.0, 1.0);
        std::normal_distribution<double> small(0.0, 0.1);
        for (auto& w : m.conv_weights) w = conv(rng);
        for (auto& b : m.conv_bias) b = small(rng);
        for (auto& w : m.class_weights) w = dense(rng);
        m.validate();
        return m;
    }

    double class_weight(std::size_t filter, std::size_t cls) const noexcept {
        return class_weights[filter * num_classes + cls];
    }

    std::size_t grid_height(std::size_t image_height) const noexcept { return (image_height + stride - 1) / stride; }
    std::size_t grid_width(std::size_t image_width) const noexcept { return (image_width + stride - 1) / stride; }

    FeatureMaps features(const Image& image) const {
        if (image.channels() != in_channels) {
            throw StructuralError("conv-GAP model expects " + std::to_string(in_channels) + " channels, got " +
                                  std::to_string(image.channels()));
        }
        if (image.empty()) throw StructuralError("conv-GAP model cannot process an empty image");
        FeatureMaps f{num_filters, grid_height(image.height()), grid_width(image.width()), {}};
        f.values.assign(f.count * f.height * f.width, 0.0);
        const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
        const auto H = static_cast<std::ptrdiff_t>(image.height());
        const auto W = static_cast<std::ptrdiff_t>(image.width());
        for (std::size_t k = 0; k < num_filters; ++k) {
            for (std::size_t i = 0; i < f.height; ++i) {
                for (std::size_t j = 0; j < f.width; ++j) {
                    const auto cy = static_cast<std::ptrdiff_t>(i * stride);
                    const auto cx = static_cast<std::ptrdiff_t>(j * stride);
                    double acc = conv_bias[k];
                    for (std::size_t c = 0; c < in_channels; ++c) {
                        for (std::ptrdiff_t dy = -half; dy <= half; ++dy) {
                            const auto y = cy + dy;
                            if (y < 0 || y >= H) continue;
                            for (std::ptrdiff_t dx = -half; dx <= half; ++dx) {
                                const auto x = cx + dx;
                                if (x < 0 || x >= W) continue;
                                const auto widx = ((k * in_channels + c) * kernel + static_cast<std::size_t>(dy + half)) *
                                                      kernel +
                                                  static_cast<std::size_t>(dx + half);
                                acc += conv_weights[widx] *
                                       (image(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) / 255.0);
                            }
                        }
                    }
                    f(k, i, j) = std::max(acc, 0.0);
                }
            }
        }
        return f;
    }

    std::vector<double> pooled(const FeatureMaps& f) const {
        std::vector<double> gap(f.count, 0.0);
        const double cells = static_cast<double>(f.height * f.width);
        for (std::size_t k = 0; k < f.count; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < f.height; ++i) {
                for (std::size_t j = 0; j < f.width; ++j) s += f(k, i, j);
            }
            gap[k] = s / cells;
        }
        return gap;
    }

    std::vector<double> logits_from_features(const FeatureMaps& f) const {
        const auto gap = pooled(f);
        std::vector<double> out(class_bias);
        for (std::size_t k = 0; k < num_filters; ++k) {
            for (std::size_t c = 0; c < num_classes; ++c) out[c] += class_weight(k, c) * gap[k];
        }
        return out;
    }

    std::vector<double> logits(const Image& image) const { return logits_from_features(features(image)); }
    std::vector<double> probabilities(const Image& image) const { return softmax(logits(image)); }
};

using ToyModel = std::variant<LinearSoftmaxModel, ConvGapModel>;

// Model files: a "pica-model 1" header line, then one "key value..." record per
// line. Vectors are written in full on a single line.
namespace detail {

inline void write_vector(std::ostream& out, const char* key, const std::vector<double>& v) {
    out << key;
    for (double x : v) out << ' ' << x;
    out << '\n';
}

inline std::vector<double> read_vector(std::istream& in, const std::string& expected_key, std::size_t count) {
    std::string key;
    if (!(in >> key) || key != expected_key) {
        throw FormatError("model file: expected '" + expected_key + "', got '" + key + "'");
    }
    std::vector<double> v(count);
    for (auto& x : v) {
        if (!(in >> x)) throw FormatError("model file: '" + expected_key + "' is truncated");
    }
    return v;
}

inline std::size_t read_count(std::istream& in, const std::string& expected_key) {
    std::string key;
    std::size_t value = 0;
    if (!(in >> key >> value) || key != expected_key) {
        throw FormatError("model file: expected '" + expected_key + "'");
    }
    return value;
}

} // namespace detail

inline void save_model(std::ostream& out, const ToyModel& model) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "pica-model 1\n";
    if (const auto* lin = std::get_if<LinearSoftmaxModel>(&model)) {
        out << "kind linear-softmax\n"
            << "height " << lin->input.height << "\nwidth " << lin->input.width << "\nchannels "
            << lin->input.channels << "\nclasses " << lin->num_classes << '\n';
        detail::write_vector(out, "weights", lin->weights);
        detail::write_vector(out, "bias", lin->bias);
    } else {
        const auto& cg = std::get<ConvGapModel>(model);
        out << "kind conv-gap\n"
            << "channels " << cg.in_channels << "\nfilters " << cg.num_filters << "\nkernel " << cg.kernel
            << "\nstride " << cg.stride << "\nclasses " << cg.num_classes << '\n';
        detail::write_vector(out, "conv_weights", cg.conv_weights);
        detail::write_vector(out, "conv_bias", cg.conv_bias);
        detail::write_vector(out, "class_weights", cg.class_weights);
        detail::write_vector(out, "class_bias", cg.class_bias);
    }
}

inline ToyModel load_model(std::istream& in) {
    std::string magic, version, key, kind;
    if (!(in >> magic >> version) || magic != "pica-model") throw FormatError("not a pica model file");
    if (version != "1") throw FormatError("unsupported model file version " + version);
    if (!(in >> key >> kind) || key != "kind") throw FormatError("model file: missing kind");
    if (kind == "linear-softmax") {
        LinearSoftmaxModel m;
        m.input.height = detail::read_count(in, "height");
        m.input.width = detail::read_count(in, "width");
        m.input.channels = detail::read_count(in, "channels");
        m.num_classes = detail::read_count(in, "classes");
        m.weights = detail::read_vector(in, "weights", m.num_classes * m.input.size());
        m.bias = detail::read_vector(in, "bias", m.num_classes);
        m.validate();
        return m;
    }
    if (kind == "conv-gap") {
        ConvGapModel m;
        m.in_channels = detail::read_count(in, "channels");
        m.num_filters = detail::read_count(in, "filters");
        m.kernel = detail::read_count(in, "kernel");
        m.stride = detail::read_count(in, "stride");
        m.num_classes = detail::read_count(in, "classes");
        m.conv_weights = detail::read_vector(in, "conv_weights", m.num_filters * m.in_channels * m.kernel * m.kernel);
        m.conv_bias = detail::read_vector(in, "conv_bias", m.num_filters);
        m.class_weights = detail::read_vector(in, "class_weights", m.num_filters * m.num_classes);
        m.class_bias = detail::read_vector(in, "class_bias", m.num_classes);
        m.validate();
        return m;
    }
    throw FormatError("unknown model kind '" + kind + "'");
}

inline void save_model(const std::filesystem::path& path, const ToyModel& model) {
    std::ofstream out(path);
    if (!out) throw Error("cannot create '" + path.string() + "'");
    save_model(out, model);
}

inline ToyModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return load_model(in);
}

} // namespace pica

#endif // PICA_MODELS_HPP
