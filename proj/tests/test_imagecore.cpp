#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "pica/image.hpp"
#include "pica/image_io.hpp"
#include "pica/mask.hpp"
#include "pica/perturbation.hpp"
#include "test_support.hpp"

using namespace pica;

namespace {

VariableIndex full_index(const Image& img) { return build_index(PixelMask::full(img.height(), img.width()), img.channels()); }

SparsePerturbation single(std::size_t var, double value) { return {{{var, value}}}; }

} // namespace

TEST(Image, RejectsBadChannelCountsAndLengths) {
    EXPECT_THROW(Image(Shape{2, 2, 2}), StructuralError);
    EXPECT_THROW(Image(Shape{2, 2, 3}, std::vector<std::uint8_t>(11)), StructuralError);
    Image img(Shape{2, 3, 3}, 7);
    EXPECT_EQ(img.data().size(), 18u);
    img(1, 2, 2) = 9;
    EXPECT_EQ(img.data()[17], 9);
}

TEST(Intensity, RoundsHalfAwayFromZeroAndClamps) {
    EXPECT_EQ(to_intensity(2.5), 3);
    EXPECT_EQ(to_intensity(2.4999), 2);
    EXPECT_EQ(to_intensity(-0.5), 0);
    EXPECT_EQ(to_intensity(254.5), 255);
    EXPECT_EQ(to_intensity(300.0), 255);
    EXPECT_EQ(to_intensity(-30.4), 0);
    EXPECT_EQ(to_intensity(std::nan("")), 0);
}

TEST(ApplyPerturbation, ZeroPerturbationIsIdentity) {
    std::mt19937_64 rng(1);
    auto img = testkit::random_image({5, 4, 3}, rng);
    auto index = full_index(img);
    auto out = apply_perturbation(img, SparsePerturbation::from_genome(std::vector<double>(index.size(), 0.0)), index);
    EXPECT_EQ(out, img);
}

TEST(ApplyPerturbation, ClampsAtBothEnds) {
    Image img(Shape{1, 2, 1});
    img(0, 0) = 250;
    img(0, 1) = 10;
    auto index = full_index(img);
    auto out = apply_perturbation(img, {{{0, 20.0}, {1, -30.4}}}, index);
    EXPECT_EQ(out(0, 0), 255);
    EXPECT_EQ(out(0, 1), 0);
}

TEST(ApplyPerturbation, UntouchedPixelsStayIdentical) {
    std::mt19937_64 rng(2);
    auto img = testkit::random_image({6, 6, 3}, rng);
    auto index = build_index(parity_refine(PixelMask::full(6, 6)), 3);
    std::vector<double> g(index.size(), 40.0);
    auto out = apply_perturbation(img, SparsePerturbation::from_genome(g), index);
    for (std::size_t l = 0; l < 6; ++l) {
        for (std::size_t w = 0; w < 6; ++w) {
            if ((l + w) % 2 == 0) continue;
            for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out(l, w, c), img(l, w, c));
        }
    }
}

TEST(ApplyPerturbation, DimensionMismatchIsStructuralError) {
    Image img(Shape{4, 4, 3});
    auto index = build_index(PixelMask::full(4, 5), 3);
    EXPECT_THROW(apply_perturbation(img, {}, index), StructuralError);
    auto gray_index = build_index(PixelMask::full(4, 4), 1);
    EXPECT_THROW(apply_perturbation(img, {}, gray_index), StructuralError);
    auto ok = full_index(img);
    EXPECT_THROW(apply_perturbation(img, single(ok.size(), 1.0), ok), StructuralError);
    EXPECT_THROW(apply_perturbation(img, {{{0, 1.0}, {0, 2.0}}}, ok), StructuralError);
}

TEST(EffectivePerturbation, ReportsRealisedChange) {
    Image img(Shape{1, 3, 1});
    img(0, 0) = 250;
    img(0, 1) = 100;
    img(0, 2) = 100;
    auto index = full_index(img);
    auto eff = effective_perturbation(img, {{{0, 20.0}, {1, -7.0}, {2, 0.0}}}, index);
    ASSERT_EQ(eff.entries.size(), 3u);
    EXPECT_EQ(eff.entries[0].value, 5.0);
    EXPECT_EQ(eff.entries[1].value, -7.0);
    EXPECT_EQ(eff.entries[2].value, 0.0); // zero entries are kept
}

TEST(EffectivePerturbation, RoundTripReproducesAttackedImage) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> x(-300.0, 300.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto img = testkit::random_image({7, 5, 3}, rng);
        auto index = full_index(img);
        std::vector<double> g(index.size());
        for (auto& v : g) v = x(rng);
        const auto pert = SparsePerturbation::from_genome(g);
        const auto attacked = apply_perturbation(img, pert, index);
        const auto eff = effective_perturbation(img, pert, index);
        EXPECT_EQ(apply_perturbation(img, eff, index), attacked);
        // every effective entry is integral and equals the pixel difference
        for (const auto& e : eff.entries) {
            const auto off = index.offset(e.variable);
            EXPECT_EQ(e.value, static_cast<double>(attacked.data()[off]) - img.data()[off]);
        }
    }
}

TEST(ApplyPerturbation, FuzzedOutputsStayInRange) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> x(-1000.0, 1000.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto img = testkit::random_image({4, 4, 3}, rng);
        auto index = full_index(img);
        std::vector<double> g(index.size());
        for (auto& v : g) v = x(rng);
        auto out = apply_perturbation(img, SparsePerturbation::from_genome(g), index);
        for (int v : out.data()) {
            ASSERT_GE(v, 0);
            ASSERT_LE(v, 255);
        }
    }
}

TEST(L2Norm, SimpleCases) {
    EXPECT_EQ(l2_norm({}), 0.0);
    EXPECT_DOUBLE_EQ(l2_norm({{{0, 3.0}, {5, 4.0}}}), 5.0);
}

TEST(L2Norm, MatchesIndependentSumOfSquares) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> x(0.0, 50.0);
    SparsePerturbation p;
    long double oracle = 0.0L;
    for (std::size_t i = 0; i < 100; ++i) {
        const double v = x(rng);
        p.entries.push_back({i, v});
        oracle += static_cast<long double>(v) * v;
    }
    EXPECT_NEAR(l2_norm(p), static_cast<double>(std::sqrt(oracle)), 1e-9);
}

TEST(L2Norm, ZeroIffAllEffectiveEntriesZero) {
    std::mt19937_64 rng(6);
    Image img(Shape{2, 2, 1});
    img(0, 0) = 255;
    img(0, 1) = 0;
    auto index = full_index(img);
    // pushes that the clamp swallows leave a zero effective perturbation
    auto eff = effective_perturbation(img, {{{0, 40.0}, {1, -12.0}, {2, 0.3}}}, index);
    EXPECT_EQ(l2_norm(eff), 0.0);
    eff = effective_perturbation(img, {{{0, -1.0}}}, index);
    EXPECT_GT(l2_norm(eff), 0.0);
}

class ImageFiles : public ::testing::Test {
protected:
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "pica_io_test";
    void SetUp() override { std::filesystem::create_directories(dir); }
    void TearDown() override { std::filesystem::remove_all(dir); }
};

TEST_F(ImageFiles, RoundTripAllFormats) {
    std::mt19937_64 rng(7);
    for (std::size_t ch : {1u, 3u}) {
        auto img = testkit::random_image({9, 13, ch}, rng);
        for (const char* ext : {".png", ".pnm"}) {
            auto path = dir / (std::string("img") + std::to_string(ch) + ext);
            io::write_image(path, img);
            EXPECT_EQ(io::read_image(path), img) << path;
        }
    }
}

TEST(Pnm, ParsesCommentsAndRejectsGarbage) {
    std::string data = "P5\n# a comment\n2 1\n255\n";
    data += '\x01';
    data += '\xff';
    std::istringstream in(data);
    auto img = io::read_pnm(in);
    EXPECT_EQ(img.shape(), (Shape{1, 2, 1}));
    EXPECT_EQ(img(0, 1), 255);

    std::istringstream truncated("P6\n2 2\n255\nabc");
    EXPECT_THROW(io::read_pnm(truncated), FormatError);
    std::istringstream ascii("P3\n1 1\n255\n0 0 0\n");
    EXPECT_THROW(io::read_pnm(ascii), FormatError);
    std::istringstream deep("P5\n1 1\n65535\n\0\0");
    EXPECT_THROW(io::read_pnm(deep), FormatError);
}

TEST_F(ImageFiles, MaskPgmUses0And255) {
    PixelMask m(3, 4);
    m.set(0, 0);
    m.set(2, 3);
    io::write_mask(dir / "m.pgm", m);
    auto raw = io::read_attention(dir / "m.pgm");
    EXPECT_EQ(raw(0, 0), 255);
    EXPECT_EQ(raw(1, 1), 0);
    EXPECT_EQ(io::read_mask(dir / "m.pgm"), m);
}
