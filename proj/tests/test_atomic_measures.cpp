#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "lowent/atomic_measures.hpp"
#include "support.hpp"

using namespace lowent;
namespace ts = testsupport;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected lowent::Error";
    return ErrorCode::Config;
}

void expect_distribution(const AtomicDistribution& d, const std::vector<double>& atoms,
                         const std::vector<double>& weights, double tol) {
    ASSERT_EQ(d.size(), atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        EXPECT_NEAR(d.atoms()[i], atoms[i], tol) << "atom " << i;
        EXPECT_NEAR(d.weights()[i], weights[i], tol) << "weight " << i;
    }
}

}  // namespace

TEST(AtomicDistribution, SortsMergesAndDropsZeroWeights) {
    const AtomicDistribution d({2.0, -1.0, 2.0 + 1e-14, 5.0}, {0.25, 0.5, 0.25, 0.0});
    expect_distribution(d, {-1.0, 2.0}, {0.5, 0.5}, 1e-12);
    EXPECT_EQ(code_of([] { AtomicDistribution({0.0, 1.0}, {0.5, 0.6}); }), ErrorCode::Normalization);
    EXPECT_EQ(code_of([] { AtomicDistribution({0.0, 1.0}, {1.5, -0.5}); }), ErrorCode::Domain);
    EXPECT_EQ(code_of([] { AtomicDistribution({0.0}, {0.5, 0.5}); }), ErrorCode::Length);
    EXPECT_EQ(code_of([] { AtomicDistribution({INFINITY}, {1.0}); }), ErrorCode::Domain);
}

TEST(Moments, Examples) {
    const auto coin = moments(AtomicDistribution({-1.0, 1.0}, {0.5, 0.5}), 4);
    EXPECT_EQ(coin, (MomentSequence{1, 0, 1, 0, 1}));
    const auto skew = moments(AtomicDistribution({-1.0, 2.0}, {2.0 / 3.0, 1.0 / 3.0}), 4);
    const auto oracle = ts::raw_moments({-1.0, 2.0}, {2.0 / 3.0, 1.0 / 3.0}, 4);
    const std::vector<double> expected{1, 0, 2, 2, 6};
    for (std::size_t n = 0; n <= 4; ++n) {
        EXPECT_NEAR(skew[n], oracle[n], 1e-14);
        EXPECT_NEAR(skew[n], expected[n], 1e-14);
    }
    const double c = 1.7;
    EXPECT_EQ(moments(AtomicDistribution::point(c), 2), (MomentSequence{1, c, c * c}));
}

TEST(Entropy, Examples) {
    EXPECT_EQ(entropy(AtomicDistribution::point(3.0)), 0.0);
    EXPECT_NEAR(entropy(AtomicDistribution({0.0, 1.0}, {0.5, 0.5}), kBits), 1.0, 1e-15);
    const double third = entropy(AtomicDistribution({0.0, 1.0}, {1.0 / 3.0, 2.0 / 3.0}), kBits);
    EXPECT_NEAR(third, ts::h2(1.0 / 3.0, 2.0), 1e-15);
    EXPECT_NEAR(third, 0.918296, 1e-6);
}

TEST(BinaryEntropy, Examples) {
    EXPECT_EQ(binary_entropy(0.0), 0.0);
    EXPECT_EQ(binary_entropy(1.0), 0.0);
    EXPECT_NEAR(binary_entropy(0.5, kBits), 1.0, 1e-15);
    EXPECT_NEAR(binary_entropy(1.0 / 3.0, kBits), std::log2(3.0) - 2.0 / 3.0, 1e-15);
    EXPECT_EQ(code_of([] { binary_entropy(1.5); }), ErrorCode::Domain);
    EXPECT_EQ(code_of([] { binary_entropy(-0.1); }), ErrorCode::Domain);
}

TEST(InverseBinaryEntropy, Examples) {
    EXPECT_EQ(inverse_binary_entropy(0.0), 0.0);
    EXPECT_NEAR(inverse_binary_entropy(1.0, kBits), 0.5, 1e-12);
    // Independent bisection on the oracle h2.
    double lo = 0.0, hi = 0.5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ts::h2(mid, 2.0) < 0.5 ? lo : hi) = mid;
    }
    EXPECT_NEAR(inverse_binary_entropy(0.5, kBits), lo, 1e-12);
    EXPECT_NEAR(lo, 0.1100279, 1e-7);
    EXPECT_EQ(code_of([] { inverse_binary_entropy(1.01, kBits); }), ErrorCode::Domain);
    EXPECT_EQ(code_of([] { inverse_binary_entropy(-1e-3); }), ErrorCode::Domain);
}

TEST(InverseBinaryEntropy, RoundTripsOnHalfInterval) {
    for (int i = 0; i <= 1000; ++i) {
        const double x = 0.5 * i / 1000.0;
        EXPECT_NEAR(inverse_binary_entropy(binary_entropy(x)), x, 1e-10) << x;
        const double y = std::log(2.0) * i / 1000.0;
        EXPECT_NEAR(binary_entropy(inverse_binary_entropy(y)), y, 1e-10) << y;
    }
}

TEST(Standardize, Examples) {
    expect_distribution(standardize(AtomicDistribution({0.0, 2.0}, {0.5, 0.5})), {-1, 1}, {0.5, 0.5}, 1e-15);
    expect_distribution(standardize(AtomicDistribution({-1.0, 1.0}, {0.5, 0.5})), {-1, 1}, {0.5, 0.5}, 1e-15);
    expect_distribution(standardize(AtomicDistribution({0.0, 1.0, 2.0}, {0.25, 0.5, 0.25})),
                        {-std::sqrt(2.0), 0.0, std::sqrt(2.0)}, {0.25, 0.5, 0.25}, 1e-15);
    EXPECT_EQ(code_of([] { standardize(AtomicDistribution::point(1.0)); }), ErrorCode::Degenerate);
}

TEST(Standardize, PreservesWeightsAndEntropy) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = ts::random_atoms(rng, 2 + trial % 6, -5.0, 5.0, 0.01, 0.01);
        const AtomicDistribution d(x.atoms, x.weights);
        const auto s = standardize(d);
        EXPECT_DOUBLE_EQ(entropy(s), entropy(d));
        EXPECT_NEAR(s.mean(), 0.0, 1e-12);
        EXPECT_NEAR(s.variance(), 1.0, 1e-12);
    }
}

TEST(MinimalExtension, Examples) {
    EXPECT_NEAR(minimal_extension(MomentSequence{1, 0, 1, 0}), 1.0, 1e-14);
    EXPECT_NEAR(minimal_extension(MomentSequence{1, 0, 2, 2}), 6.0, 1e-13);
    EXPECT_EQ(code_of([] { minimal_extension(MomentSequence{1, 1, 1, 1}); }), ErrorCode::Infeasible);
    // Oracle: the extension makes det H_2 vanish.
    const std::vector<double> s{1.0, 0.3, 1.2, -0.4};
    const double t = minimal_extension(MomentSequence(s));
    EXPECT_NEAR(ts::cofactor_det(ts::hankel_oracle({1.0, 0.3, 1.2, -0.4, t}, 2)), 0.0, 1e-12);
}

TEST(PronyRecover, Examples) {
    expect_distribution(prony_recover(MomentSequence{1, 0, 1, 0}), {-1, 1}, {0.5, 0.5}, 1e-12);
    expect_distribution(prony_recover(MomentSequence{1, 0, 2, 2}), {-1, 2}, {2.0 / 3.0, 1.0 / 3.0}, 1e-12);
    expect_distribution(prony_recover(MomentSequence{1, 2.5}), {2.5}, {1.0}, 0.0);
    // Even order with a singular H_1: the point mass at zero.
    expect_distribution(prony_recover(MomentSequence{1, 0, 0}), {0.0}, {1.0}, 0.0);
}

TEST(PronyRecover, EvenOrderUsesAtMostOneExtraAtom) {
    // (1,0,1) has many representing measures; the recovered one must match.
    const auto d = prony_recover(MomentSequence{1, 0, 1});
    EXPECT_LE(d.size(), 2u);
    const auto m = moments(d, 2);
    EXPECT_NEAR(m[1], 0.0, 1e-10);
    EXPECT_NEAR(m[2], 1.0, 1e-10);

    const auto g = prony_recover(MomentSequence{1, 0, 1, 0, 3});
    EXPECT_LE(g.size(), 3u);
    const auto mg = moments(g, 4);
    for (std::size_t n = 0; n <= 4; ++n) EXPECT_NEAR(mg[n], ts::normal_moment(n), 1e-9);
}

TEST(PronyRecover, InfeasibleSequences) {
    EXPECT_EQ(code_of([] { prony_recover(MomentSequence{1, 0, -1}); }), ErrorCode::Infeasible);
    EXPECT_EQ(code_of([] { prony_recover(MomentSequence{1, 0, 1, 0, 0.5}); }), ErrorCode::Infeasible);
    EXPECT_EQ(code_of([] { prony_recover(MomentSequence{1, 1, 1, 2}); }), ErrorCode::Infeasible);
    EXPECT_EQ(code_of([] { prony_recover(MomentSequence{0.5, 0}); }), ErrorCode::Normalization);
}

TEST(PronyRecover, RoundTripOnRandomMeasures) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
        const auto x = ts::random_atoms(rng, n, -5.0, 5.0, 0.5, 0.05);
        const AtomicDistribution d(x.atoms, x.weights);
        const auto r = prony_recover(moments(d, 2 * n - 1));
        ASSERT_EQ(r.size(), n) << "trial " << trial;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(r.atoms()[i], x.atoms[i], 1e-6) << "trial " << trial;
            EXPECT_NEAR(r.weights()[i], x.weights[i], 1e-6) << "trial " << trial;
        }
    }
}

TEST(GaussHermite, Examples) {
    expect_distribution(gauss_hermite(1), {0.0}, {1.0}, 0.0);
    expect_distribution(gauss_hermite(2), {-1.0, 1.0}, {0.5, 0.5}, 1e-14);
    expect_distribution(gauss_hermite(3), {-std::sqrt(3.0), 0.0, std::sqrt(3.0)}, {1.0 / 6, 2.0 / 3, 1.0 / 6},
                        1e-14);
    EXPECT_EQ(code_of([] { gauss_hermite(0); }), ErrorCode::Domain);
}

TEST(GaussHermite, MatchesNormalMomentsAndNotTheNext) {
    for (std::size_t m = 1; m <= 8; ++m) {
        const auto d = gauss_hermite(m);
        std::vector<double> a(d.atoms().begin(), d.atoms().end()), w(d.weights().begin(), d.weights().end());
        const auto s = ts::raw_moments(a, w, 2 * m);
        for (std::size_t n = 0; n < 2 * m; ++n)
            EXPECT_NEAR(s[n], ts::normal_moment(n), 1e-8) << "m " << m << " n " << n;
        if (m <= 6) {
            EXPECT_GT(std::abs(s[2 * m] - ts::normal_moment(2 * m)), 1e-3) << "m " << m;
        }
    }
}

TEST(GaussHermite, EntropyGrowsLikeHalfLogM) {
    double prev = -1.0;
    for (std::size_t m = 1; m <= 40; ++m) {
        const double h = entropy(gauss_hermite(m));
        EXPECT_GT(h, prev) << m;
        prev = h;
    }
    for (std::size_t m : {64, 128, 256}) {
        const auto d = gauss_hermite(m);
        const double ratio = ts::shannon({d.weights().begin(), d.weights().end()}) / (0.5 * std::log(double(m)));
        EXPECT_GE(ratio, 0.8);
        EXPECT_LE(ratio, 1.3);
    }
}
