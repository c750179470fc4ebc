#ifndef PICA_NSGA2_HPP
#define PICA_NSGA2_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "pica/error.hpp"

namespace pica::moea {

/// Two minimised objectives (f1, f2).
using Objectives = std::array<double, 2>;
using Rng = std::mt19937_64;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// No worse in both, strictly better in at least one.
inline bool dominates(const Objectives& a, const Objectives& b) noexcept {
    return a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1]);
}

/// Deb's fast nondominated sort. Fronts are returned best first, each with
/// ascending indices; together they partition [0, n).
inline std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const Objectives> points) {
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> counter(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dominates(points[p], points[q])) {
                dominated[p].push_back(q);
                ++counter[q];
            } else if (dominates(points[q], points[p])) {
                dominated[q].push_back(p);
                ++counter[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p) {
        if (counter[p] == 0) current.push_back(p);
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto p : current) {
            for (auto q : dominated[p]) {
                if (--counter[q] == 0) next.push_back(q);
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

/// Crowding distance of every member of one front. Per objective the two
/// extremes get +inf; interior points add the normalised gap between their
/// neighbours. An objective with zero range adds nothing.
inline std::vector<double> crowding_distance(std::span<const Objectives> front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), kInfinity);
        return dist;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < 2; ++m) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return front[a][m] < front[b][m]; });
        const double lo = front[order.front()][m];
        const double hi = front[order.back()][m];
        dist[order.front()] = kInfinity;
        dist[order.back()] = kInfinity;
        const double range = hi - lo;
        if (!(range > 0.0)) continue;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            dist[order[i]] += (front[order[i + 1]][m] - front[order[i - 1]][m]) / range;
        }
    }
    return dist;
}

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    Bounds() = default;
    Bounds(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) { validate(); }

    static Bounds uniform(std::size_t dimension, double lo, double hi) {
        return {std::vector<double>(dimension, lo), std::vector<double>(dimension, hi)};
    }

    std::size_t size() const noexcept { return lower.size(); }

    void validate() const {
        if (lower.size() != upper.size()) throw ConfigError("lower/upper bound vectors differ in length");
        for (std::size_t i = 0; i < lower.size(); ++i) {
            if (!(lower[i] <= upper[i])) {
                throw ConfigError("variable " + std::to_string(i) + " has lower bound above upper bound");
            }
        }
    }

    bool contains(std::span<const double> genome) const noexcept {
        if (genome.size() != size()) return false;
        for (std::size_t i = 0; i < genome.size(); ++i) {
            if (!(genome[i] >= lower[i] && genome[i] <= upper[i])) return false;
        }
        return true;
    }
};

struct MoeaConfig {
    std::size_t population_size = 50;
    std::size_t max_evaluations = 10000;
    double eta_c = 20.0;
    double eta_m = 20.0;
    double crossover_probability = 1.0;
    /// Per-variable mutation probability; unset means 1/d.
    std::optional<double> mutation_probability;
    std::uint64_t seed = 1;
    /// Worker threads for offspring evaluation; 1 keeps runs reproducible.
    std::size_t threads = 1;
    /// Store every evaluated genome in the history. Large problems may turn
    /// this off and keep only objectives.
    bool record_genomes = true;

    double mutation_rate(std::size_t dimension) const {
        return mutation_probability.value_or(1.0 / static_cast<double>(dimension));
    }

    void validate(std::size_t dimension) const {
        if (population_size < 2 || population_size % 2 != 0) {
            throw ConfigError("population size must be even and at least 2, got " + std::to_string(population_size));
        }
        if (max_evaluations < population_size) {
            throw ConfigError("evaluation budget (" + std::to_string(max_evaluations) +
                              ") must be at least the population size (" + std::to_string(population_size) + ")");
        }
        if (dimension == 0) throw ConfigError("problem dimension must be at least 1");
        if (!(eta_c >= 0.0) || !(eta_m >= 0.0)) throw ConfigError("distribution indices must be non-negative");
        if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0)) {
            throw ConfigError("crossover probability must lie in [0, 1]");
        }
        const double pm = mutation_rate(dimension);
        if (!(pm >= 0.0 && pm <= 1.0)) throw ConfigError("mutation probability must lie in [0, 1]");
        if (threads == 0) throw ConfigError("thread count must be at least 1");
    }
};

/// An evaluation result carrying problem-specific data alongside the objectives.
template <class Extra>
struct Evaluation {
    Objectives objectives{};
    Extra extra{};
};

template <class Extra = std::monostate>
struct Individual {
    std::vector<double> genome;
    Objectives objectives{};
    std::size_t rank = 0;
    double crowding = 0.0;
    std::size_t eval_index = 0;
    Extra extra{};
};

template <class Extra = std::monostate>
struct HistoryEntry {
    std::size_t eval_index = 0;
    Objectives objectives{};
    Extra extra{};
    std::vector<double> genome; // empty unless MoeaConfig::record_genomes
};

/// Binary tournament: lower rank wins, then larger crowding, then a fair coin.
/// Returns `count` indices into `population`.
template <class Extra>
std::vector<std::size_t> tournament_select(std::span<const Individual<Extra>> population, std::size_t count,
                                           Rng& rng) {
    if (population.empty()) throw ConfigError("tournament selection on an empty population");
    std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::size_t> chosen;
    chosen.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        const auto a = pick(rng);
        const auto b = pick(rng);
        const auto& x = population[a];
        const auto& y = population[b];
        std::size_t winner;
        if (x.rank != y.rank) {
            winner = x.rank < y.rank ? a : b;
        } else if (x.crowding != y.crowding) {
            winner = x.crowding > y.crowding ? a : b;
        } else {
            winner = coin(rng) ? a : b;
        }
        chosen.push_back(winner);
    }
    return chosen;
}

/// Simulated binary crossover. With probability p_c the pair recombines; then
/// each variable recombines with probability 0.5 using the spread factor
/// drawn from the eta_c-indexed distribution, children are swapped at random,
/// and finally clamped to the bounds.
inline std::pair<std::vector<double>, std::vector<double>> sbx_crossover(std::span<const double> p1,
                                                                         std::span<const double> p2, double eta_c,
                                                                         const Bounds& bounds, double p_c, Rng& rng) {
    std::vector<double> c1(p1.begin(), p1.end());
    std::vector<double> c2(p2.begin(), p2.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) >= p_c) return {std::move(c1), std::move(c2)};
    const double exponent = 1.0 / (eta_c + 1.0);
    for (std::size_t i = 0; i < c1.size(); ++i) {
        const double u = unit(rng);
        double beta = u <= 0.5 ? std::pow(2.0 * u, exponent) : std::pow(1.0 / (2.0 * (1.0 - u)), exponent);
        if (unit(rng) < 0.5) beta = -beta; // swap the symmetric children
        if (unit(rng) >= 0.5) beta = 1.0;  // variable left untouched
        const double mid = 0.5 * (p1[i] + p2[i]);
        const double half = 0.5 * (p1[i] - p2[i]);
        c1[i] = std::clamp(mid + beta * half, bounds.lower[i], bounds.upper[i]);
        c2[i] = std::clamp(mid - beta * half, bounds.lower[i], bounds.upper[i]);
    }
    return {std::move(c1), std::move(c2)};
}

/// Bounded polynomial mutation, each variable independently with probability p_m.
inline std::vector<double> polynomial_mutation(std::vector<double> genome, double eta_m, const Bounds& bounds,
                                               double p_m, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double power = 1.0 / (eta_m + 1.0);
    for (std::size_t i = 0; i < genome.size(); ++i) {
        if (unit(rng) >= p_m) continue;
        const double lo = bounds.lower[i];
        const double hi = bounds.upper[i];
        const double u = unit(rng);
        const double range = hi - lo;
        if (!(range > 0.0)) continue;
        const double x = genome[i];
        double delta;
        if (u <= 0.5) {
            const double d1 = (x - lo) / range;
            const double v = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta_m + 1.0);
            delta = std::pow(v, power) - 1.0;
        } else {
            const double d2 = (hi - x) / range;
            const double v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta_m + 1.0);
            delta = 1.0 - std::pow(v, power);
        }
        genome[i] = std::clamp(x + delta * range, lo, hi);
    }
    return genome;
}

/// Assigns rank and crowding to every member of `population` in place.
template <class Extra>
void assign_rank_and_crowding(std::vector<Individual<Extra>>& population) {
    std::vector<Objectives> objs;
    objs.reserve(population.size());
    for (const auto& ind : population) objs.push_back(ind.objectives);
    const auto fronts = fast_nondominated_sort(objs);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
        std::vector<Objectives> fo;
        fo.reserve(fronts[r].size());
        for (auto i : fronts[r]) fo.push_back(objs[i]);
        const auto cd = crowding_distance(fo);
        for (std::size_t j = 0; j < fronts[r].size(); ++j) {
            population[fronts[r][j]].rank = r;
            population[fronts[r][j]].crowding = cd[j];
        }
    }
}

/// Keeps `n` survivors: whole fronts in order, then the last admitted front
/// by descending crowding. Survivors carry rank and crowding from `combined`.
template <class Extra>
std::vector<Individual<Extra>> environmental_selection(std::vector<Individual<Extra>> combined, std::size_t n) {
    assign_rank_and_crowding(combined);
    std::vector<std::size_t> order(combined.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (combined[a].rank != combined[b].rank) return combined[a].rank < combined[b].rank;
        return combined[a].crowding > combined[b].crowding;
    });
    std::vector<Individual<Extra>> survivors;
    const std::size_t keep = std::min(n, combined.size());
    survivors.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) survivors.push_back(std::move(combined[order[i]]));
    return survivors;
}

namespace detail {

template <class Eval>
decltype(auto) call_evaluator(Eval& eval, std::span<const double> genome, std::size_t eval_index) {
    if constexpr (std::is_invocable_v<Eval&, std::span<const double>, std::size_t>) {
        return std::invoke(eval, genome, eval_index);
    } else {
        return std::invoke(eval, genome);
    }
}

template <class Eval>
using raw_result_t =
    std::remove_cvref_t<decltype(call_evaluator(std::declval<Eval&>(), std::span<const double>{}, std::size_t{}))>;

template <class R>
struct extra_of {
    using type = std::monostate;
};
template <class X>
struct extra_of<Evaluation<X>> {
    using type = X;
};

} // namespace detail

/// Evaluator: callable taking (span<const double> genome[, size_t eval_index])
/// and returning either Objectives or Evaluation<Extra>. Must be safe to call
/// concurrently when MoeaConfig::threads > 1.
template <class Evaluator>
concept GenomeEvaluator = std::is_invocable_v<Evaluator&, std::span<const double>, std::size_t> ||
                          std::is_invocable_v<Evaluator&, std::span<const double>>;

template <GenomeEvaluator Evaluator>
using extra_t = typename detail::extra_of<detail::raw_result_t<Evaluator>>::type;

template <GenomeEvaluator Evaluator>
struct BoundedProblem {
    Bounds bounds;
    Evaluator evaluate;

    std::size_t dimension() const noexcept { return bounds.size(); }
};

template <class Evaluator>
BoundedProblem(Bounds, Evaluator) -> BoundedProblem<Evaluator>;

template <class Extra>
struct Nsga2Result {
    std::vector<Individual<Extra>> population;
    std::vector<HistoryEntry<Extra>> history;
    std::size_t evaluations = 0;
    std::size_t generations = 0;
};

/// NSGA-II driver. Terminates on evaluation count; the last generation only
/// evaluates as many offspring as the budget still allows. History and
/// population stay readable after an evaluation error.
template <GenomeEvaluator Evaluator>
class Nsga2 {
public:
    using Extra = extra_t<Evaluator>;
    using IndividualT = Individual<Extra>;
    using HistoryT = HistoryEntry<Extra>;

    Nsga2(Bounds bounds, Evaluator evaluate, MoeaConfig config)
        : bounds_(std::move(bounds)), evaluate_(std::move(evaluate)), config_(config), rng_(config.seed) {
        bounds_.validate();
        config_.validate(bounds_.size());
    }

    const MoeaConfig& config() const noexcept { return config_; }
    const Bounds& bounds() const noexcept { return bounds_; }
    const std::vector<IndividualT>& population() const noexcept { return population_; }
    const std::vector<HistoryT>& history() const noexcept { return history_; }
    std::size_t evaluations() const noexcept { return evaluations_; }
    std::size_t generation() const noexcept { return generation_; }
    bool initialized() const noexcept { return initialized_; }
    bool done() const noexcept { return initialized_ && evaluations_ >= config_.max_evaluations; }

    void initialize() {
        const std::size_t n = config_.population_size;
        std::vector<std::vector<double>> genomes(n, std::vector<double>(bounds_.size()));
        for (auto& g : genomes) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                std::uniform_real_distribution<double> dist(bounds_.lower[i], bounds_.upper[i]);
                g[i] = bounds_.lower[i] == bounds_.upper[i] ? bounds_.lower[i] : dist(rng_);
            }
        }
        population_ = evaluate_batch(std::move(genomes));
        assign_rank_and_crowding(population_);
        initialized_ = true;
    }

    /// One generation: mating selection, SBX, PM, evaluation, environmental selection.
    void step() {
        if (!initialized_) initialize();
        if (done()) return;
        const std::size_t n = config_.population_size;
        const double pm = config_.mutation_rate(bounds_.size());
        const auto parents = tournament_select<Extra>(population_, n, rng_);
        std::vector<std::vector<double>> offspring;
        offspring.reserve(n);
        for (std::size_t i = 0; i + 1 < n; i += 2) {
            auto [c1, c2] = sbx_crossover(population_[parents[i]].genome, population_[parents[i + 1]].genome,
                                          config_.eta_c, bounds_, config_.crossover_probability, rng_);
            offspring.push_back(polynomial_mutation(std::move(c1), config_.eta_m, bounds_, pm, rng_));
            offspring.push_back(polynomial_mutation(std::move(c2), config_.eta_m, bounds_, pm, rng_));
        }
        const std::size_t remaining = config_.max_evaluations - evaluations_;
        if (offspring.size() > remaining) offspring.resize(remaining);
        ++generation_;
        auto evaluated = evaluate_batch(std::move(offspring));
        std::vector<IndividualT> combined = std::move(population_);
        for (auto& ind : evaluated) combined.push_back(std::move(ind));
        population_ = environmental_selection(std::move(combined), n);
    }

    void run() {
        if (!initialized_) initialize();
        while (!done()) step();
    }

    Nsga2Result<Extra> result() const { return {population_, history_, evaluations_, generation_}; }

private:
    std::vector<IndividualT> evaluate_batch(std::vector<std::vector<double>> genomes) {
        const std::size_t count = genomes.size();
        const std::size_t base = evaluations_;
        std::vector<std::optional<Evaluation<Extra>>> results(count);
        std::vector<std::exception_ptr> errors(count);

        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    results[i] = to_evaluation(detail::call_evaluator(evaluate_, genomes[i], base + i));
                } catch (...) {
                    errors[i] = std::current_exception();
                    return;
                }
            }
        };

        const std::size_t threads = std::min(config_.threads, count);
        if (threads <= 1) {
            work(0, count);
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(threads);
            const std::size_t chunk = (count + threads - 1) / threads;
            for (std::size_t t = 0; t < threads; ++t) {
                const std::size_t b = t * chunk;
                const std::size_t e = std::min(count, b + chunk);
                if (b < e) pool.emplace_back(work, b, e);
            }
        }

        std::vector<IndividualT> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            if (!results[i]) {
                const std::size_t failed = base + i;
                evaluations_ = failed;
                std::string cause = "unknown error";
                if (errors[i]) {
                    try {
                        std::rethrow_exception(errors[i]);
                    } catch (const std::exception& e) {
                        cause = e.what();
                    } catch (...) {
                    }
                }
                throw EvaluationError(failed, generation_, cause);
            }
            HistoryT entry{base + i, results[i]->objectives, results[i]->extra, {}};
            if (config_.record_genomes) entry.genome = genomes[i];
            history_.push_back(std::move(entry));
            out.push_back(IndividualT{std::move(genomes[i]), results[i]->objectives, 0, 0.0, base + i,
                                      std::move(results[i]->extra)});
        }
        evaluations_ = base + count;
        return out;
    }

    template <class R>
    static Evaluation<Extra> to_evaluation(R&& r) {
        if constexpr (std::is_same_v<std::remove_cvref_t<R>, Objectives>) {
            return {r, Extra{}};
        } else {
            return std::forward<R>(r);
        }
    }

    Bounds bounds_;
    Evaluator evaluate_;
    MoeaConfig config_;
    Rng rng_;
    std::vector<IndividualT> population_;
    std::vector<HistoryT> history_;
    std::size_t evaluations_ = 0;
    std::size_t generation_ = 0;
    bool initialized_ = false;
};

template <class Evaluator>
auto run_nsga2(const BoundedProblem<Evaluator>& problem, const MoeaConfig& config) {
    Nsga2<Evaluator> engine(problem.bounds, problem.evaluate, config);
    engine.run();
    return engine.result();
}

/// Members of the population with rank 0.
template <class Extra>
std::vector<Individual<Extra>> first_front(const std::vector<Individual<Extra>>& population) {
    std::vector<Individual<Extra>> out;
    for (const auto& ind : population) {
        if (ind.rank == 0) out.push_back(ind);
    }
    return out;
}

} // namespace pica::moea

#endif // PICA_NSGA2_HPP
