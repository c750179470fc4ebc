#ifndef PICA_ATTACK_HPP
#define PICA_ATTACK_HPP

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pica/attention.hpp"
#include "pica/error.hpp"
#include "pica/image.hpp"
#include "pica/mask.hpp"
#include "pica/models.hpp"
#include "pica/nsga2.hpp"
#include "pica/oracle.hpp"
#include "pica/perturbation.hpp"

namespace pica {

struct VariableBounds {
    double lower = 0.0;
    double upper = 0.0;

    friend bool operator==(const VariableBounds&, const VariableBounds&) = default;
};

/// Feasible perturbation interval of a pixel with intensity u: u + x stays in [0, 255].
constexpr VariableBounds bounds_for(std::uint8_t u) noexcept {
    return {-static_cast<double>(u), 255.0 - static_cast<double>(u)};
}

/// Same box, optionally tightened to [-delta_max, delta_max].
inline VariableBounds bounds_for(std::uint8_t u, std::optional<double> delta_max) noexcept {
    auto b = bounds_for(u);
    if (delta_max) {
        b.lower = std::max(b.lower, -*delta_max);
        b.upper = std::min(b.upper, *delta_max);
    }
    return b;
}

/// Attack defaults: population 50, 10,000 evaluations, SBX/PM indices 20,
/// crossover probability 1 and mutation probability 1/d.
struct AttackConfig {
    moea::MoeaConfig moea{};
    bool use_attention = true;
    bool use_parity = true;
    ParitySegment parity_segment = ParitySegment::Even;
    std::optional<double> delta_max;
    Upsample upsample = Upsample::Bilinear;
    /// Pick the final example from the last population's first front only,
    /// instead of from every evaluated candidate.
    bool final_from_front_only = false;

    void validate() const {
        if (delta_max && !(*delta_max >= 0.0)) throw ConfigError("delta_max must be non-negative");
    }
};

/// Either a white-box proxy to compute a CAM from, or a precomputed map.
using AttentionSource = std::variant<ConvGapModel, AttentionMap>;

/// Per-evaluation oracle outcome kept in the history.
struct Verdict {
    std::size_t predicted_class = 0;
    double confidence = 0.0; // probability of predicted_class
};

struct HistoryRecord {
    std::size_t eval_index = 0;
    double f1 = 0.0;
    double f2 = 0.0;
    std::size_t predicted_class = 0;
    double confidence = 0.0;
};

struct FrontPoint {
    double f1 = 0.0;
    double f2 = 0.0;
    std::size_t predicted_class = 0;
    bool success = false;
    std::size_t eval_index = 0;
    std::vector<double> genome;
};

struct AdversarialExample {
    Image image;
    SparsePerturbation perturbation; // effective, zeros dropped
    std::size_t predicted_class = 0;
    double confidence = 0.0;
    double f1 = 0.0;
    double l2 = 0.0;
    std::size_t eval_index = 0;
};

struct AttackReport {
    std::vector<HistoryRecord> history;
    std::vector<FrontPoint> front;
    std::optional<AdversarialExample> final_ae;
    std::size_t original_class = 0;
    double clean_confidence = 0.0;
    std::size_t queries = 0;
    double wall_seconds = 0.0;
    AttackConfig config{};
    Shape image_shape{};
    std::size_t attention_pixels = 0; // popcount of the binarised attention (full image when disabled)
    PixelMask mask;                   // final spatial mask
    VariableIndex index;
    std::vector<std::string> warnings;
    bool complete = false;

    std::size_t dimension() const noexcept { return index.size(); }
    bool success() const noexcept { return final_ae.has_value(); }
};

/// Raised when the oracle fails mid-run; carries what was gathered so far.
class AttackError : public Error {
public:
    AttackError(const std::string& what, std::shared_ptr<const AttackReport> partial)
        : Error(what), partial_(std::move(partial)) {}

    const std::shared_ptr<const AttackReport>& partial() const noexcept { return partial_; }

private:
    std::shared_ptr<const AttackReport> partial_;
};

/// Position in `records` of the successful record (predicted class != c0)
/// with the smallest f2; ties go to the smallest eval_index.
template <class Record>
std::optional<std::size_t> select_final_ae(std::span<const Record> records, std::size_t original_class) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.predicted_class == original_class) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = records[*best];
        if (r.f2 < b.f2 || (r.f2 == b.f2 && r.eval_index < b.eval_index)) best = i;
    }
    return best;
}

struct MaskPlan {
    std::optional<AttentionMap> attention;
    PixelMask attention_mask; // binarised attention, or full when attention is disabled
    PixelMask final_mask;
    bool fell_back = false;
};

/// Attention screening then parity refinement, each skippable. An empty result
/// falls back to the full-image checkerboard.
inline MaskPlan plan_mask(const Image& image, const AttentionSource& source, const AttackConfig& config) {
    if (image.height() == 0 || image.width() == 0) throw ConfigError("cannot attack a zero-area image");
    MaskPlan plan;
    if (config.use_attention) {
        if (const auto* proxy = std::get_if<ConvGapModel>(&source)) {
            plan.attention = compute_cam(*proxy, image, config.upsample);
        } else {
            const auto& map = std::get<AttentionMap>(source);
            if (map.height() != image.height() || map.width() != image.width()) {
                throw StructuralError("attention map size does not match the target image");
            }
            plan.attention = map;
        }
        plan.attention_mask = binarize(*plan.attention);
    } else {
        plan.attention_mask = PixelMask::full(image.height(), image.width());
    }
    plan.final_mask =
        config.use_parity ? parity_refine(plan.attention_mask, config.parity_segment) : plan.attention_mask;
    if (plan.final_mask.none()) {
        plan.final_mask = checkerboard(image.height(), image.width(), config.parity_segment);
        plan.fell_back = true;
    }
    return plan;
}

/// The bi-objective problem over the masked variables: f1 is the oracle's
/// probability of the clean prediction, f2 the l2 norm of the realised change.
class AttackProblem {
public:
    AttackProblem(Image image, VariableIndex index, Oracle& oracle, std::size_t original_class,
                  double clean_confidence, std::optional<double> delta_max = std::nullopt)
        : image_(std::move(image)), index_(std::move(index)), oracle_(&oracle), original_class_(original_class),
          clean_confidence_(clean_confidence) {
        if (!(index_.shape() == image_.shape())) throw StructuralError("variable index does not match image");
        std::vector<double> lo(index_.size());
        std::vector<double> hi(index_.size());
        const auto px = image_.data();
        for (std::size_t i = 0; i < index_.size(); ++i) {
            const auto b = bounds_for(px[index_.offset(i)], delta_max);
            lo[i] = b.lower;
            hi[i] = b.upper;
        }
        bounds_ = moea::Bounds(std::move(lo), std::move(hi));
    }

    const Image& image() const noexcept { return image_; }
    const VariableIndex& index() const noexcept { return index_; }
    const moea::Bounds& bounds() const noexcept { return bounds_; }
    std::size_t dimension() const noexcept { return index_.size(); }
    std::size_t original_class() const noexcept { return original_class_; }
    double clean_confidence() const noexcept { return clean_confidence_; }

    Image attacked_image(std::span<const double> genome) const {
        return apply_perturbation(image_, SparsePerturbation::from_genome(genome), index_);
    }

    SparsePerturbation realised(std::span<const double> genome) const {
        return effective_perturbation(image_, SparsePerturbation::from_genome(genome), index_);
    }

    /// One oracle query.
    moea::Evaluation<Verdict> evaluate(std::span<const double> genome) const {
        if (genome.size() != dimension()) {
            throw StructuralError("genome length " + std::to_string(genome.size()) + " != dimension " +
                                  std::to_string(dimension()));
        }
        const auto pert = SparsePerturbation::from_genome(genome);
        const auto attacked = apply_perturbation(image_, pert, index_);
        const double f2 = l2_norm(effective_perturbation(image_, pert, index_));
        const auto response = oracle_->classify(attacked);
        if (original_class_ >= response.probabilities.size()) {
            throw ProtocolError("oracle returned fewer classes than the clean prediction index");
        }
        return {{response.probabilities[original_class_], f2}, {response.label, response.confidence()}};
    }

private:
    Image image_;
    VariableIndex index_;
    Oracle* oracle_;
    std::size_t original_class_;
    double clean_confidence_;
    moea::Bounds bounds_;
};

namespace detail {

// Keeps the genome of the best successful candidate seen so far, ordered as
// select_final_ae orders history records.
class Incumbent {
public:
    void offer(std::size_t eval_index, double f2, std::span<const double> genome) {
        std::lock_guard lock(mutex_);
        if (has_ && (f2 > f2_ || (f2 == f2_ && eval_index > eval_index_))) return;
        has_ = true;
        f2_ = f2;
        eval_index_ = eval_index;
        genome_.assign(genome.begin(), genome.end());
    }

    std::optional<std::vector<double>> genome_for(std::size_t eval_index) const {
        std::lock_guard lock(mutex_);
        if (!has_ || eval_index != eval_index_) return std::nullopt;
        return genome_;
    }

private:
    mutable std::mutex mutex_;
    bool has_ = false;
    double f2_ = 0.0;
    std::size_t eval_index_ = 0;
    std::vector<double> genome_;
};

inline AdversarialExample make_example(const AttackProblem& problem, std::span<const double> genome,
                                       const HistoryRecord& record) {
    AdversarialExample ae;
    ae.image = problem.attacked_image(genome);
    for (const auto& e : problem.realised(genome).entries) {
        if (e.value != 0.0) ae.perturbation.entries.push_back(e);
    }
    ae.predicted_class = record.predicted_class;
    ae.confidence = record.confidence;
    ae.f1 = record.f1;
    ae.l2 = record.f2;
    ae.eval_index = record.eval_index;
    return ae;
}

} // namespace detail

/// Full pipeline: attention, binarisation, parity refinement, variable index,
/// box bounds, NSGA-II, final example selection.
inline AttackReport run_attack(const Image& image, Oracle& oracle, const AttentionSource& attention,
                               const AttackConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    if (image.empty()) throw ConfigError("cannot attack a zero-area image");

    auto report = std::make_shared<AttackReport>();
    report->config = config;
    report->image_shape = image.shape();

    auto plan = plan_mask(image, attention, config);
    report->attention_pixels = plan.attention_mask.popcount();
    if (plan.fell_back) {
        report->warnings.push_back("final mask was empty; fell back to the full-image checkerboard");
    }
    report->mask = plan.final_mask;
    report->index = build_index(plan.final_mask, image.channels());
    config.moea.validate(report->index.size());

    CountingOracle counting(oracle);
    const auto clean = counting.classify(image);
    report->original_class = clean.label;
    report->clean_confidence = clean.confidence();

    AttackProblem problem(image, report->index, counting, clean.label, clean.confidence(), config.delta_max);
    detail::Incumbent incumbent;

    auto evaluator = [&problem, &incumbent](std::span<const double> genome, std::size_t eval_index) {
        auto result = problem.evaluate(genome);
        if (result.extra.predicted_class != problem.original_class()) {
            incumbent.offer(eval_index, result.objectives[1], genome);
        }
        return result;
    };

    auto moea_config = config.moea;
    moea_config.record_genomes = false;
    moea_config.threads = std::max<std::size_t>(1, std::min(moea_config.threads, oracle.max_concurrency()));
    moea::Nsga2 engine(problem.bounds(), evaluator, moea_config);

    auto collect_history = [&] {
        report->history.clear();
        report->history.reserve(engine.history().size());
        for (const auto& h : engine.history()) {
            report->history.push_back(
                {h.eval_index, h.objectives[0], h.objectives[1], h.extra.predicted_class, h.extra.confidence});
        }
        report->queries = counting.count();
        report->wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    try {
        engine.run();
    } catch (const EvaluationError& e) {
        collect_history();
        throw AttackError(e.what(), report);
    }
    collect_history();

    for (const auto& ind : engine.population()) {
        if (ind.rank != 0) continue;
        report->front.push_back({ind.objectives[0], ind.objectives[1], ind.extra.predicted_class,
                                 ind.extra.predicted_class != clean.label, ind.eval_index, ind.genome});
    }

    if (config.final_from_front_only) {
        if (auto pick = select_final_ae<FrontPoint>(report->front, clean.label)) {
            const auto& fp = report->front[*pick];
            const auto& rec = report->history.at(fp.eval_index);
            report->final_ae = detail::make_example(problem, fp.genome, rec);
        }
    } else if (auto pick = select_final_ae<HistoryRecord>(report->history, clean.label)) {
        const auto& rec = report->history[*pick];
        auto genome = incumbent.genome_for(rec.eval_index);
        if (!genome) throw Error("internal: incumbent genome does not match the selected history entry");
        report->final_ae = detail::make_example(problem, *genome, rec);
    }

    report->complete = true;
    report->wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return std::move(*report);
}

} // namespace pica

#endif // PICA_ATTACK_HPP
