#ifndef PICA_PERTURBATION_HPP
#define PICA_PERTURBATION_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pica/error.hpp"
#include "pica/image.hpp"
#include "pica/mask.hpp"

namespace pica {

/// Sparse additive perturbation addressed through a VariableIndex.
struct SparsePerturbation {
    struct Entry {
        std::size_t variable = 0;
        double value = 0.0;

        friend bool operator==(const Entry&, const Entry&) = default;
    };

    std::vector<Entry> entries;

    /// One entry per genome slot, zeros included.
    static SparsePerturbation from_genome(std::span<const double> genome) {
        SparsePerturbation p;
        p.entries.reserve(genome.size());
        for (std::size_t i = 0; i < genome.size(); ++i) p.entries.push_back({i, genome[i]});
        return p;
    }

    bool empty() const noexcept { return entries.empty(); }

    friend bool operator==(const SparsePerturbation&, const SparsePerturbation&) = default;
};

namespace detail {

inline void check_compatible(const Image& image, const SparsePerturbation& pert, const VariableIndex& index) {
    if (!(index.shape() == image.shape())) {
        throw StructuralError("variable index shape " + to_string(index.shape()) + " does not match image " +
                              to_string(image.shape()));
    }
    std::vector<bool> seen(index.size(), false);
    for (const auto& e : pert.entries) {
        if (e.variable >= index.size()) {
            throw StructuralError("perturbation variable " + std::to_string(e.variable) + " outside index of size " +
                                  std::to_string(index.size()));
        }
        if (seen[e.variable]) {
            throw StructuralError("perturbation variable " + std::to_string(e.variable) + " appears twice");
        }
        seen[e.variable] = true;
    }
}

} // namespace detail

/// Adds the perturbation and repairs the box constraint: every touched pixel
/// becomes clamp(round(u + x), 0, 255).
inline Image apply_perturbation(const Image& image, const SparsePerturbation& pert, const VariableIndex& index) {
    detail::check_compatible(image, pert, index);
    Image out = image;
    auto dst = out.data();
    auto src = image.data();
    for (const auto& e : pert.entries) {
        const auto off = index.offset(e.variable);
        dst[off] = to_intensity(static_cast<double>(src[off]) + e.value);
    }
    return out;
}

/// The integer change actually realised by apply_perturbation.
inline SparsePerturbation effective_perturbation(const Image& image, const SparsePerturbation& pert,
                                                 const VariableIndex& index) {
    detail::check_compatible(image, pert, index);
    auto src = image.data();
    SparsePerturbation eff;
    eff.entries.reserve(pert.entries.size());
    for (const auto& e : pert.entries) {
        const auto off = index.offset(e.variable);
        const int before = src[off];
        const int after = to_intensity(static_cast<double>(before) + e.value);
        eff.entries.push_back({e.variable, static_cast<double>(after - before)});
    }
    return eff;
}

inline double l2_norm(const SparsePerturbation& pert) noexcept {
    double sum = 0.0;
    for (const auto& e : pert.entries) sum += e.value * e.value;
    return std::sqrt(sum);
}

} // namespace pica

#endif // PICA_PERTURBATION_HPP
