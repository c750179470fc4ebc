#ifndef PICA_ORACLE_HPP
#define PICA_ORACLE_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pica/error.hpp"
#include "pica/image.hpp"
#include "pica/models.hpp"

namespace pica {

inline constexpr double kProbabilitySumTolerance = 1e-6;

struct OracleResponse {
    std::vector<double> probabilities;
    std::size_t label = 0;
    std::chrono::nanoseconds latency{0};

    double confidence() const { return probabilities.at(label); }

    /// Throws ProtocolError unless probabilities are non-negative, sum to one
    /// within kProbabilitySumTolerance and label is their argmax.
    void validate() const {
        if (probabilities.empty()) throw ProtocolError("oracle returned no probabilities");
        double sum = 0.0;
        for (double p : probabilities) {
            if (!(p >= 0.0) || !std::isfinite(p)) throw ProtocolError("oracle returned a negative or non-finite probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
            throw ProtocolError("oracle probabilities sum to " + std::to_string(sum));
        }
        if (label >= probabilities.size() || label != argmax(probabilities)) {
            throw ProtocolError("oracle label is not the argmax of its probabilities");
        }
    }

    static OracleResponse from_probabilities(std::vector<double> probs, std::chrono::nanoseconds latency = {}) {
        OracleResponse r{std::move(probs), 0, latency};
        if (!r.probabilities.empty()) r.label = argmax(r.probabilities);
        r.validate();
        return r;
    }
};

/// Black-box classifier. Implementations supply query(); classify() adds
/// timing and response validation.
class Oracle {
public:
    virtual ~Oracle() = default;

    OracleResponse classify(const Image& image) {
        if (auto shape = input_shape(); shape && !(*shape == image.shape())) {
            throw ShapeMismatchError("oracle expects " + to_string(*shape) + ", got " + to_string(image.shape()));
        }
        const auto start = std::chrono::steady_clock::now();
        auto probs = query(image);
        const auto latency = std::chrono::steady_clock::now() - start;
        return OracleResponse::from_probabilities(std::move(probs),
                                                  std::chrono::duration_cast<std::chrono::nanoseconds>(latency));
    }

    /// Number of classify() calls that may be in flight at once; 1 = serial only.
    virtual std::size_t max_concurrency() const noexcept { return 1; }

    virtual std::optional<Shape> input_shape() const { return std::nullopt; }

    virtual std::string describe() const = 0;

protected:
    virtual std::vector<double> query(const Image& image) = 0;
};

/// In-process toy classifier; pure and safe for concurrent queries.
class ToyOracle final : public Oracle {
public:
    explicit ToyOracle(ToyModel model) : model_(std::move(model)) {
        std::visit([](const auto& m) { m.validate(); }, model_);
    }

    std::size_t max_concurrency() const noexcept override { return 64; }

    std::optional<Shape> input_shape() const override {
        if (const auto* lin = std::get_if<LinearSoftmaxModel>(&model_)) return lin->input;
        return std::nullopt;
    }

    std::string describe() const override {
        return std::holds_alternative<LinearSoftmaxModel>(model_) ? "toy:linear" : "toy:conv-gap";
    }

    const ToyModel& model() const noexcept { return model_; }

protected:
    std::vector<double> query(const Image& image) override {
        if (const auto* cg = std::get_if<ConvGapModel>(&model_); cg && cg->in_channels != image.channels()) {
            throw ShapeMismatchError("conv-GAP oracle expects " + std::to_string(cg->in_channels) + " channels, got " +
                                     std::to_string(image.channels()));
        }
        return std::visit([&](const auto& m) { return m.probabilities(image); }, model_);
    }

private:
    ToyModel model_;
};

/// Counts every classify() call that reaches the wrapped oracle.
class CountingOracle final : public Oracle {
public:
    explicit CountingOracle(Oracle& inner) : inner_(&inner) {}

    std::size_t count() const noexcept { return count_.load(); }
    void reset() noexcept { count_.store(0); }

    std::size_t max_concurrency() const noexcept override { return inner_->max_concurrency(); }
    std::optional<Shape> input_shape() const override { return inner_->input_shape(); }
    std::string describe() const override { return inner_->describe(); }

protected:
    std::vector<double> query(const Image& image) override {
        count_.fetch_add(1);
        return inner_->classify(image).probabilities;
    }

private:
    Oracle* inner_;
    std::atomic<std::size_t> count_{0};
};

} // namespace pica

#endif // PICA_ORACLE_HPP
