#ifndef PICA_TOY_DATA_HPP
#define PICA_TOY_DATA_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "pica/image.hpp"
#include "pica/models.hpp"

// Synthetic class-conditional images and a matching linear classifier, for
// self-contained attack experiments.
namespace pica::toy {

/// One smooth pattern per class: a few random plane waves per channel.
inline std::vector<Image> make_prototypes(Shape shape, std::size_t classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(0.5, 3.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> amp(20.0, 45.0);
    std::vector<Image> protos;
    protos.reserve(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        Image img(shape);
        for (std::size_t c = 0; c < shape.channels; ++c) {
            struct Wave {
                double fx, fy, phase, amplitude;
            };
            std::vector<Wave> waves;
            for (int i = 0; i < 3; ++i) {
                const double dir = angle(rng);
                const double f = freq(rng);
                waves.push_back({f * std::cos(dir), f * std::sin(dir), angle(rng), amp(rng)});
            }
            for (std::size_t l = 0; l < shape.height; ++l) {
                for (std::size_t w = 0; w < shape.width; ++w) {
                    const double y = static_cast<double>(l) / static_cast<double>(shape.height);
                    const double x = static_cast<double>(w) / static_cast<double>(shape.width);
                    double v = 128.0;
                    for (const auto& wv : waves) {
                        v += wv.amplitude * std::sin(2.0 * std::numbers::pi * (wv.fx * x + wv.fy * y) + wv.phase);
                    }
                    img(l, w, c) = to_intensity(v);
                }
            }
        }
        protos.push_back(std::move(img));
    }
    return protos;
}

/// Prototype plus i.i.d. Gaussian pixel noise.
inline Image sample_image(const Image& prototype, double noise_sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    Image img = prototype;
    for (auto& px : img.data()) px = to_intensity(px + noise(rng));
    return img;
}

/// Nearest-prototype classifier written as a linear softmax model:
/// logit_k = -|x - p_k|^2 / (2 T) up to a class-independent term, with
/// intensities scaled to [0, 1].
inline LinearSoftmaxModel prototype_classifier(const std::vector<Image>& prototypes, double temperature) {
    const Shape shape = prototypes.front().shape();
    const std::size_t n = shape.size();
    LinearSoftmaxModel m{shape, prototypes.size(), std::vector<double>(prototypes.size() * n),
                         std::vector<double>(prototypes.size())};
    for (std::size_t k = 0; k < prototypes.size(); ++k) {
        const auto p = prototypes[k].data();
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = p[i] / 255.0;
            m.weights[k * n + i] = v / temperature;
            sq += v * v;
        }
        m.bias[k] = -sq / (2.0 * temperature);
    }
    return m;
}

/// Nearest-prototype classifier plus a seeded random weight component that is
/// orthogonal to the constant image and to every prototype. Clean samples
/// barely excite that component; off-manifold perturbations do, as with
/// trained networks that latch onto features the data never varies along.
/// Each random row has Euclidean norm `offset_norm` (weights act on [0, 1]
/// intensities).
inline LinearSoftmaxModel nonrobust_classifier(const std::vector<Image>& prototypes, double temperature,
                                               double offset_norm, std::uint64_t seed) {
    auto m = prototype_classifier(prototypes, temperature);
    const std::size_t n = m.input.size();
    std::vector<std::vector<double>> basis;
    auto orthogonalize = [&](std::vector<double>& v) {
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += v[i] * b[i];
            for (std::size_t i = 0; i < n; ++i) v[i] -= dot * b[i];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        return std::sqrt(norm);
    };
    auto extend = [&](std::vector<double> v) {
        if (const double norm = orthogonalize(v); norm > 1e-9) {
            for (auto& x : v) x /= norm;
            basis.push_back(std::move(v));
        }
    };
    extend(std::vector<double>(n, 1.0));
    for (const auto& p : prototypes) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = p.data()[i] / 255.0;
        extend(std::move(v));
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t k = 0; k < m.num_classes; ++k) {
        std::vector<double> r(n);
        for (auto& x : r) x = gauss(rng);
        const double norm = orthogonalize(r);
        if (!(norm > 0.0)) continue;
        for (std::size_t i = 0; i < n; ++i) m.weights[k * n + i] += r[i] * offset_norm / norm;
    }
    return m;
}

/// Temperature and offset norm scaled with the input size so that clean
/// margins stay comparable across image shapes.
inline LinearSoftmaxModel default_target(const std::vector<Image>& prototypes, std::uint64_t seed) {
    const double n = static_cast<double>(prototypes.front().shape().size());
    return nonrobust_classifier(prototypes, n / 100.0, 11.0, seed);
}

struct Dataset {
    std::vector<Image> prototypes;
    std::vector<Image> images;
    std::vector<std::size_t> labels;
};

inline Dataset make_dataset(Shape shape, std::size_t classes, std::size_t count, std::uint64_t seed,
                            double noise_sigma = 8.0) {
    Dataset d;
    d.prototypes = make_prototypes(shape, classes, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> label(0, classes - 1);
    for (std::size_t i = 0; i < count; ++i) {
        const auto y = label(rng);
        d.images.push_back(sample_image(d.prototypes[y], noise_sigma, rng));
        d.labels.push_back(y);
    }
    return d;
}

} // namespace pica::toy

#endif // PICA_TOY_DATA_HPP
