#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pica/nsga2.hpp"
#include "test_support.hpp"

using namespace pica;
using namespace pica::moea;

namespace {

std::vector<Objectives> random_points(std::size_t n, std::mt19937_64& rng, bool coarse) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> grid(0, 6);
    std::vector<Objectives> pts(n);
    for (auto& p : pts) {
        p = coarse ? Objectives{double(grid(rng)), double(grid(rng))} : Objectives{u(rng), u(rng)};
    }
    return pts;
}

Individual<> make_individual(Objectives o, std::size_t rank = 0, double crowding = 0.0) {
    Individual<> ind;
    ind.objectives = o;
    ind.rank = rank;
    ind.crowding = crowding;
    return ind;
}

Objectives two_parabolas(std::span<const double> x) { return {x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0)}; }

} // namespace

TEST(NondominatedSort, SmallExample) {
    std::vector<Objectives> pts{{1, 2}, {2, 1}, {2, 2}};
    auto fronts = fast_nondominated_sort(pts);
    ASSERT_EQ(fronts.size(), 2u);
    EXPECT_EQ(fronts[0], (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(fronts[1], (std::vector<std::size_t>{2}));
}

TEST(NondominatedSort, SinglePointAndDuplicates) {
    std::vector<Objectives> one{{3, 3}};
    EXPECT_EQ(fast_nondominated_sort(one).size(), 1u);
    std::vector<Objectives> dup{{1, 1}, {1, 1}, {2, 2}};
    auto fronts = fast_nondominated_sort(dup);
    ASSERT_EQ(fronts.size(), 2u);
    EXPECT_EQ(fronts[0], (std::vector<std::size_t>{0, 1}));
    EXPECT_TRUE(fast_nondominated_sort(std::vector<Objectives>{}).empty());
}

TEST(NondominatedSort, AgreesWithBruteForceOnRandomSets) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<std::size_t> size(1, 80);
    for (int t = 0; t < 200; ++t) {
        auto pts = random_points(size(rng), rng, t % 2 == 0); // coarse grids force ties
        EXPECT_EQ(fast_nondominated_sort(pts), testkit::brute_force_fronts(pts)) << "set " << t;
    }
}

TEST(CrowdingDistance, Boundaries) {
    std::vector<Objectives> two{{0, 1}, {1, 0}};
    auto d = crowding_distance(two);
    EXPECT_TRUE(std::isinf(d[0]) && std::isinf(d[1]));
    std::vector<Objectives> one{{0, 1}};
    EXPECT_TRUE(std::isinf(crowding_distance(one)[0]));
}

TEST(CrowdingDistance, HandComputedMiddlePoint) {
    std::vector<Objectives> f{{0, 2}, {1, 1}, {2, 0}};
    auto d = crowding_distance(f);
    EXPECT_TRUE(std::isinf(d[0]));
    EXPECT_TRUE(std::isinf(d[2]));
    EXPECT_DOUBLE_EQ(d[1], 2.0);
}

TEST(CrowdingDistance, IdenticalObjectivesGiveZeroInterior) {
    std::vector<Objectives> f(5, Objectives{0.3, 0.7});
    auto d = crowding_distance(f);
    EXPECT_EQ(std::count_if(d.begin(), d.end(), [](double v) { return std::isinf(v); }), 2);
    EXPECT_EQ(std::count(d.begin(), d.end(), 0.0), 3);
}

TEST(CrowdingDistance, ExtremesAreInfiniteOnRandomFronts) {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        // points on a decreasing curve are mutually nondominated
        std::vector<Objectives> f;
        const std::size_t n = 3 + t % 20;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = u(rng);
            f.push_back({x, 1.0 - x * x});
        }
        auto d = crowding_distance(f);
        for (std::size_t m = 0; m < 2; ++m) {
            auto lo = std::min_element(f.begin(), f.end(), [m](auto& a, auto& b) { return a[m] < b[m]; });
            auto hi = std::max_element(f.begin(), f.end(), [m](auto& a, auto& b) { return a[m] < b[m]; });
            EXPECT_TRUE(std::isinf(d[lo - f.begin()]));
            EXPECT_TRUE(std::isinf(d[hi - f.begin()]));
        }
        for (double v : d) EXPECT_GE(v, 0.0);
    }
}

TEST(Tournament, RankThenCrowdingDecide) {
    Rng rng(33);
    std::vector<Individual<>> pop{make_individual({0, 0}, 0, 0.1), make_individual({0, 0}, 3, kInfinity)};
    // rank 0 wins every pair it appears in
    std::size_t wins = 0;
    const std::size_t n = 20000;
    auto picks = tournament_select<std::monostate>(pop, n, rng);
    for (auto p : picks) wins += p == 0;
    EXPECT_NEAR(double(wins) / n, 0.75, 0.02); // lost only when both draws hit index 1

    std::vector<Individual<>> crowd{make_individual({0, 0}, 1, kInfinity), make_individual({0, 0}, 1, 0.5)};
    picks = tournament_select<std::monostate>(crowd, n, rng);
    wins = std::count(picks.begin(), picks.end(), 0u);
    EXPECT_NEAR(double(wins) / n, 0.75, 0.02);
}

TEST(Tournament, IdenticalIndividualsAreSelectedUniformly) {
    Rng rng(34);
    const std::size_t k = 10;
    std::vector<Individual<>> pop(k, make_individual({1, 1}, 0, 1.0));
    const std::size_t draws = 10000;
    auto picks = tournament_select<std::monostate>(pop, draws, rng);
    std::vector<double> counts(k, 0.0);
    for (auto p : picks) counts[p] += 1.0;
    double chi2 = 0.0;
    const double expected = double(draws) / k;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 27.88); // chi-square, 9 dof, p = 0.001
}

TEST(Sbx, EqualParentsGiveEqualChildren) {
    Rng rng(35);
    auto b = Bounds::uniform(6, -5.0, 5.0);
    std::vector<double> p{1, -2, 3, 0, 4.5, -5};
    for (int t = 0; t < 100; ++t) {
        auto [c1, c2] = sbx_crossover(p, p, 20.0, b, 1.0, rng);
        EXPECT_EQ(c1, p);
        EXPECT_EQ(c2, p);
    }
}

TEST(Sbx, ChildMidpointEqualsParentMidpointWithoutClamping) {
    Rng rng(36);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    auto wide = Bounds::uniform(8, -1e12, 1e12);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> p1(8), p2(8);
        for (auto& v : p1) v = u(rng);
        for (auto& v : p2) v = u(rng);
        auto [c1, c2] = sbx_crossover(p1, p2, 20.0, wide, 1.0, rng);
        for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(c1[i] + c2[i], p1[i] + p2[i], 1e-9);
    }
}

TEST(Sbx, CrossoverProbabilityZeroCopiesParents) {
    Rng rng(37);
    auto b = Bounds::uniform(3, 0.0, 1.0);
    std::vector<double> p1{0.1, 0.2, 0.3}, p2{0.9, 0.8, 0.7};
    auto [c1, c2] = sbx_crossover(p1, p2, 20.0, b, 0.0, rng);
    EXPECT_EQ(c1, p1);
    EXPECT_EQ(c2, p2);
}

TEST(Pm, ZeroProbabilityLeavesGenomeUnchanged) {
    Rng rng(38);
    auto b = Bounds::uniform(5, -1.0, 1.0);
    std::vector<double> g{0.1, -0.5, 0.9, -1.0, 1.0};
    EXPECT_EQ(polynomial_mutation(g, 20.0, b, 0.0, rng), g);
}

TEST(Pm, MeanMutatedGeneCountIsOneAtRateOneOverD) {
    Rng rng(39);
    const std::size_t d = 50;
    auto b = Bounds::uniform(d, -3.0, 7.0);
    const std::vector<double> g(d, 1.25);
    const int trials = 20000;
    double changed = 0.0;
    for (int t = 0; t < trials; ++t) {
        auto m = polynomial_mutation(g, 20.0, b, 1.0 / d, rng);
        for (std::size_t i = 0; i < d; ++i) changed += m[i] != g[i];
    }
    EXPECT_NEAR(changed / trials, 1.0, 0.05);
}

TEST(Operators, FuzzedApplicationsRespectBounds) {
    Rng rng(40);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t violations = 0;
    for (int t = 0; t < 40000; ++t) {
        const std::size_t d = 1 + t % 5;
        std::vector<double> lo(d), hi(d), p1(d), p2(d);
        for (std::size_t i = 0; i < d; ++i) {
            const double a = -255.0 * u(rng);
            lo[i] = a;
            hi[i] = a + 255.0 * u(rng) * (t % 7 == 0 ? 0.0 : 1.0);
            p1[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
            p2[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
        }
        Bounds b(lo, hi);
        auto [c1, c2] = sbx_crossover(p1, p2, 20.0, b, 1.0, rng);
        violations += !b.contains(c1) + !b.contains(c2);
        violations += !b.contains(polynomial_mutation(c1, 20.0, b, 1.0, rng));
    }
    EXPECT_EQ(violations, 0u);
}

TEST(EnvironmentalSelection, KeepsExactlyNAndWholeFirstFront) {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 50; ++t) {
        auto pts = random_points(40, rng, false);
        std::vector<Individual<>> all;
        for (auto& p : pts) all.push_back(make_individual(p));
        EXPECT_EQ(environmental_selection(all, 20).size(), 20u);
    }
    // 10 points on a front plus 10 each dominated by one of them
    std::vector<Individual<>> combined;
    for (int i = 0; i < 10; ++i) combined.push_back(make_individual({double(i), double(9 - i)}));
    for (int i = 0; i < 10; ++i) combined.push_back(make_individual({double(i) + 0.5, double(9 - i) + 0.5}));
    auto kept = environmental_selection(combined, 10);
    ASSERT_EQ(kept.size(), 10u);
    for (const auto& k : kept) {
        EXPECT_EQ(k.rank, 0u);
        EXPECT_EQ(k.objectives[0] + k.objectives[1], 9.0);
    }
}

TEST(EnvironmentalSelection, TruncatedFrontKeepsExtremes) {
    std::vector<Individual<>> combined;
    for (int i = 0; i <= 10; ++i) combined.push_back(make_individual({double(i), 10.0 - i}));
    auto kept = environmental_selection(combined, 4);
    ASSERT_EQ(kept.size(), 4u);
    auto has = [&](double f1) {
        return std::any_of(kept.begin(), kept.end(), [&](auto& k) { return k.objectives[0] == f1; });
    };
    EXPECT_TRUE(has(0.0));
    EXPECT_TRUE(has(10.0));
}

TEST(Nsga2, BudgetAccountingAndBounds) {
    MoeaConfig cfg;
    cfg.population_size = 10;
    cfg.max_evaluations = 95;
    cfg.seed = 3;
    Nsga2 engine(Bounds::uniform(1, -5.0, 5.0), two_parabolas, cfg);
    engine.initialize();
    while (!engine.done()) {
        engine.step();
        EXPECT_EQ(engine.population().size(), 10u);
        for (const auto& ind : engine.population()) EXPECT_TRUE(engine.bounds().contains(ind.genome));
    }
    EXPECT_EQ(engine.evaluations(), 95u); // last generation truncated to 5 offspring
    EXPECT_EQ(engine.history().size(), 95u);
    for (std::size_t i = 0; i < engine.history().size(); ++i) EXPECT_EQ(engine.history()[i].eval_index, i);
}

TEST(Nsga2, SameSeedSameHistory) {
    MoeaConfig cfg;
    cfg.population_size = 20;
    cfg.max_evaluations = 600;
    cfg.seed = 77;
    auto a = run_nsga2(BoundedProblem{Bounds::uniform(3, -5, 5), [](std::span<const double> x) {
                                          return Objectives{x[0] * x[0] + x[1], (x[0] - 2) * (x[0] - 2) + x[2]};
                                      }},
                       cfg);
    auto b = run_nsga2(BoundedProblem{Bounds::uniform(3, -5, 5), [](std::span<const double> x) {
                                          return Objectives{x[0] * x[0] + x[1], (x[0] - 2) * (x[0] - 2) + x[2]};
                                      }},
                       cfg);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        EXPECT_EQ(a.history[i].genome, b.history[i].genome);
        EXPECT_EQ(a.history[i].objectives, b.history[i].objectives);
    }
}

TEST(Nsga2, ParallelEvaluationKeepsGenomeObjectivePairing) {
    MoeaConfig cfg;
    cfg.population_size = 16;
    cfg.max_evaluations = 400;
    cfg.threads = 4;
    auto r = run_nsga2(BoundedProblem{Bounds::uniform(2, -5, 5), [](std::span<const double> x) {
                                          return Objectives{x[0] * x[0] + x[1] * x[1], x[0] - x[1]};
                                      }},
                       cfg);
    for (const auto& h : r.history) {
        EXPECT_EQ(h.objectives[0], h.genome[0] * h.genome[0] + h.genome[1] * h.genome[1]);
        EXPECT_EQ(h.objectives[1], h.genome[0] - h.genome[1]);
    }
    EXPECT_EQ(r.evaluations, 400u);
}

TEST(Nsga2, ConvergesToParetoSetOfTwoParabolas) {
    MoeaConfig cfg;
    cfg.population_size = 50;
    cfg.max_evaluations = 5000;
    cfg.seed = 5;
    auto r = run_nsga2(BoundedProblem{Bounds::uniform(1, -5.0, 5.0), two_parabolas}, cfg);
    auto front = first_front(r.population);
    ASSERT_FALSE(front.empty());
    for (const auto& ind : front) {
        EXPECT_GE(ind.genome[0], -0.05);
        EXPECT_LE(ind.genome[0], 2.05);
    }
    for (const auto& a : front) {
        for (const auto& b : front) EXPECT_FALSE(dominates(a.objectives, b.objectives));
    }
}

TEST(Nsga2, EvaluationFailureCarriesContextAndKeepsHistory) {
    MoeaConfig cfg;
    cfg.population_size = 4;
    cfg.max_evaluations = 40;
    Nsga2 engine(Bounds::uniform(1, 0.0, 1.0),
                 [](std::span<const double> x, std::size_t idx) {
                     if (idx == 13) throw std::runtime_error("oracle down");
                     return Objectives{x[0], 1.0 - x[0]};
                 },
                 cfg);
    try {
        engine.run();
        FAIL() << "expected EvaluationError";
    } catch (const EvaluationError& e) {
        EXPECT_EQ(e.eval_index(), 13u);
        EXPECT_NE(std::string(e.what()).find("oracle down"), std::string::npos);
    }
    EXPECT_EQ(engine.history().size(), 13u);
}

TEST(Nsga2, ConfigValidation) {
    MoeaConfig cfg;
    cfg.population_size = 3;
    EXPECT_THROW(cfg.validate(1), ConfigError);
    cfg.population_size = 50;
    cfg.max_evaluations = 0;
    EXPECT_THROW(cfg.validate(1), ConfigError);
    cfg.max_evaluations = 100;
    EXPECT_THROW(cfg.validate(0), ConfigError);
    EXPECT_NO_THROW(cfg.validate(10));
    EXPECT_DOUBLE_EQ(cfg.mutation_rate(10), 0.1);
    EXPECT_THROW(Bounds({1.0}, {0.0}), ConfigError);
}
