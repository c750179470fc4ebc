#ifndef PICA_TEST_SUPPORT_HPP
#define PICA_TEST_SUPPORT_HPP

// Test-only reference implementations. None of these share code paths with
// the library functions they are used to check.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "pica/image.hpp"
#include "pica/mask.hpp"
#include "pica/nsga2.hpp"
#include "pica/oracle.hpp"

namespace pica::testkit {

inline Image random_image(Shape shape, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> px(0, 255);
    Image img(shape);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(px(rng));
    return img;
}

/// Front peeling by exhaustive pairwise dominance checks.
inline std::vector<std::vector<std::size_t>> brute_force_fronts(const std::vector<moea::Objectives>& pts) {
    auto dom = [](const moea::Objectives& a, const moea::Objectives& b) {
        bool no_worse = a[0] <= b[0] && a[1] <= b[1];
        bool better = a[0] < b[0] || a[1] < b[1];
        return no_worse && better;
    };
    std::vector<bool> removed(pts.size(), false);
    std::vector<std::vector<std::size_t>> fronts;
    std::size_t left = pts.size();
    while (left > 0) {
        std::vector<std::size_t> front;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (removed[i]) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
                if (!removed[j] && j != i && dom(pts[j], pts[i])) dominated = true;
            }
            if (!dominated) front.push_back(i);
        }
        for (auto i : front) removed[i] = true;
        left -= front.size();
        fronts.push_back(front);
    }
    return fronts;
}

/// Wraps an oracle and checks every submitted image against the clean one:
/// only pixels inside `allowed` (all channels) may differ. Uint8 storage makes
/// the [0,255] box hold by construction; this also verifies shape and sparsity.
class RecordingOracle final : public Oracle {
public:
    RecordingOracle(Oracle& inner, Image clean) : inner_(&inner), clean_(std::move(clean)) {}

    void allow(PixelMask mask) {
        std::lock_guard lock(mutex_);
        allowed_ = std::move(mask);
    }

    std::size_t queries() const { return queries_.load(); }
    std::size_t violations() const { return violations_.load(); }

    std::size_t max_concurrency() const noexcept override { return inner_->max_concurrency(); }
    std::string describe() const override { return "recording"; }

protected:
    std::vector<double> query(const Image& image) override {
        ++queries_;
        {
            std::lock_guard lock(mutex_);
            bool ok = image.shape() == clean_.shape();
            for (std::size_t l = 0; ok && l < image.height(); ++l) {
                for (std::size_t w = 0; ok && w < image.width(); ++w) {
                    for (std::size_t c = 0; c < image.channels(); ++c) {
                        const int v = image(l, w, c);
                        if (v < 0 || v > 255) ok = false;
                        if (v != clean_(l, w, c) && (allowed_.height() == 0 || !allowed_.test(l, w))) ok = false;
                    }
                }
            }
            if (!ok) ++violations_;
        }
        return inner_->classify(image).probabilities;
    }

private:
    Oracle* inner_;
    Image clean_;
    PixelMask allowed_;
    std::mutex mutex_;
    std::atomic<std::size_t> queries_{0};
    std::atomic<std::size_t> violations_{0};
};

} // namespace pica::testkit

#endif // PICA_TEST_SUPPORT_HPP
