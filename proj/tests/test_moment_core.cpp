#include <gtest/gtest.h>

#include <random>

#include "lowent/atomic_measures.hpp"
#include "lowent/moment_core.hpp"
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

}  // namespace

TEST(MomentSequence, RejectsEmptyAndNonFinite) {
    EXPECT_EQ(code_of([] { MomentSequence(std::vector<double>{}); }), ErrorCode::Length);
    EXPECT_EQ(code_of([] { MomentSequence({1.0, NAN}); }), ErrorCode::Domain);
    const MomentSequence s{1.0, 0.0, 1.0};
    EXPECT_EQ(s.order(), 2u);
    EXPECT_TRUE(s.is_probability());
    EXPECT_FALSE(MomentSequence({2.0, 0.0}).is_probability());
}

TEST(Hankel, StandardNormalOrderOne) {
    const auto h = hankel(MomentSequence{1.0, 0.0, 1.0}, 1);
    EXPECT_EQ(h.matrix(), Eigen::Matrix2d::Identity().eval());
}

TEST(Hankel, StandardNormalOrderTwoMatchesDoubleFactorials) {
    std::vector<double> s;
    for (std::size_t n = 0; n <= 4; ++n) s.push_back(ts::normal_moment(n));
    const auto h = hankel(MomentSequence(s), 2);
    const ts::Matrix expected{{1, 0, 1}, {0, 1, 0}, {1, 0, 3}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(h(i, j), expected[i][j]);
}

TEST(Hankel, TooShortIsLengthError) {
    EXPECT_EQ(code_of([] { hankel(MomentSequence{1.0}, 1); }), ErrorCode::Length);
}

TEST(PsdCheck, Examples) {
    EXPECT_EQ(psd_check(Eigen::Matrix2d::Identity().eval()), PsdVerdict::PositiveDefinite);
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
    EXPECT_EQ(psd_check(ones), PsdVerdict::PositiveSemidefinite);
    const auto h2 = hankel(MomentSequence{1, 0, 1, 0, 3}, 2);
    EXPECT_EQ(psd_check(h2), PsdVerdict::PositiveDefinite);
    EXPECT_DOUBLE_EQ(ts::cofactor_det(ts::hankel_oracle({1, 0, 1, 0, 3}, 2)), 2.0);
}

TEST(PsdCheck, IndefiniteAndTolerance) {
    Eigen::Matrix2d m;
    m << 1, 2, 2, 1;
    EXPECT_EQ(psd_check(m), PsdVerdict::Indefinite);
    Eigen::Matrix2d tiny;
    tiny << 1, 0, 0, -1e-14;
    EXPECT_EQ(psd_check(tiny), PsdVerdict::PositiveSemidefinite);
    EXPECT_EQ(psd_check(tiny, 0.0), PsdVerdict::Indefinite);
    Eigen::Matrix2d zero_diag;
    zero_diag << 0, 1, 1, 0;
    EXPECT_EQ(psd_check(zero_diag), PsdVerdict::Indefinite);
}

TEST(LeadingMinors, Examples) {
    const auto id = leading_minors(Eigen::Matrix2d::Identity().eval());
    ASSERT_EQ(id.size(), 2u);
    EXPECT_DOUBLE_EQ(id[0], 1.0);
    EXPECT_DOUBLE_EQ(id[1], 1.0);

    for (const std::vector<double> s : {std::vector<double>{1, 0, 1, 0, 3}, std::vector<double>{1, 0, 1, 0, 1}}) {
        const auto minors = leading_minors(hankel(MomentSequence(s), 2));
        const auto oracle = ts::hankel_oracle(s, 2);
        for (std::size_t k = 1; k <= 3; ++k)
            EXPECT_NEAR(minors[k - 1], ts::cofactor_det(ts::leading_block(oracle, k)), 1e-12);
    }
    const auto gauss = leading_minors(hankel(MomentSequence{1, 0, 1, 0, 3}, 2));
    EXPECT_NEAR(gauss[2], 2.0, 1e-12);
    const auto coin = leading_minors(hankel(MomentSequence{1, 0, 1, 0, 1}, 2));
    EXPECT_NEAR(coin[2], 0.0, 1e-12);
}

TEST(LeadingMinors, AgreeWithCofactorOracleOnRandomMatrices) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> entry(-10.0, 10.0);
    std::uniform_int_distribution<int> order(1, 5);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = order(rng);
        Eigen::MatrixXd m(n, n);
        ts::Matrix o(n, std::vector<double>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) o[i][j] = m(i, j) = entry(rng);
        const auto minors = leading_minors(m);
        for (int k = 1; k <= n; ++k) {
            const double ref = ts::cofactor_det(ts::leading_block(o, k));
            EXPECT_NEAR(minors[k - 1], ref, 1e-9 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST(CenterMoments, Examples) {
    EXPECT_EQ(center_moments(MomentSequence{1, 0, 1, 0, 3}), (MomentSequence{1, 0, 1, 0, 3}));
    const auto c = center_moments(MomentSequence{1, 1, 2});
    EXPECT_DOUBLE_EQ(c[1], 0.0);
    EXPECT_DOUBLE_EQ(c[2], 1.0);
    EXPECT_EQ(center_moments(MomentSequence{1, 2}), (MomentSequence{1, 0}));
    EXPECT_EQ(code_of([] { center_moments(MomentSequence{2, 1}); }), ErrorCode::Normalization);
}

TEST(CenterMoments, MatchesShiftedDistributionAndIsIdempotent) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = ts::random_atoms(rng, 1 + trial % 5, -3.0, 3.0, 0.1, 0.05);
        const auto raw = ts::raw_moments(x.atoms, x.weights, 6);
        std::vector<double> shifted = x.atoms;
        for (double& a : shifted) a -= raw[1];
        const auto oracle = ts::raw_moments(shifted, x.weights, 6);
        const auto once = center_moments(MomentSequence(raw));
        const auto twice = center_moments(once);
        for (std::size_t n = 0; n <= 6; ++n) {
            EXPECT_NEAR(once[n], oracle[n], 1e-9 * (1.0 + std::abs(oracle[n])));
            EXPECT_NEAR(twice[n], once[n], 1e-9 * (1.0 + std::abs(once[n])));
        }
    }
}

TEST(TruncatedFeasible, Examples) {
    const auto odd = truncated_feasible(MomentSequence{1, 0, 1, 0});
    ASSERT_EQ(odd.verdict, Feasibility::Feasible);
    ASSERT_EQ(odd.witness.size(), 1u);
    EXPECT_GE(odd.witness[0], 1.0 - 1e-12);
    // Oracle: the witness makes H_2 PSD, which for (1,0,1,0,t) means t >= 1.
    const auto ext = ts::hankel_oracle({1, 0, 1, 0, odd.witness[0]}, 2);
    EXPECT_GE(ts::cofactor_det(ext), -1e-10);

    EXPECT_EQ(truncated_feasible(MomentSequence{1, 0, -1}).verdict, Feasibility::Infeasible);
    const auto gauss = truncated_feasible(MomentSequence{1, 0, 1, 0, 3});
    EXPECT_EQ(gauss.verdict, Feasibility::Feasible);
    EXPECT_EQ(gauss.witness.size(), 2u);
    EXPECT_EQ(code_of([] { truncated_feasible(MomentSequence{2, 0, 1}); }), ErrorCode::Normalization);
}

TEST(TruncatedFeasible, RejectsSequencesWithoutMeasures) {
    // s4 < s2^2 is impossible (Var[X^2] < 0).
    EXPECT_EQ(truncated_feasible(MomentSequence{1, 0, 1, 0, 0.5}).verdict, Feasibility::Infeasible);
    // Singular H_1 with a nonzero odd border has no extension.
    EXPECT_EQ(truncated_feasible(MomentSequence{1, 1, 1, 2}).verdict, Feasibility::Infeasible);
}

TEST(MomentProperties, AtomicMeasuresHavePsdHankelsOfBoundedRank) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t d = 1 + static_cast<std::size_t>(trial % 4);
        const auto x = ts::random_atoms(rng, d, -2.0, 2.0, 0.3, 0.05);
        const auto seq = moments(AtomicDistribution(x.atoms, x.weights), 10);
        for (std::size_t n = 0; n <= 5; ++n) {
            const auto h = hankel(seq, n);
            EXPECT_NE(psd_check(h), PsdVerdict::Indefinite) << "trial " << trial << " n " << n;
            if (n >= d) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix());
                const double top = es.eigenvalues().maxCoeff();
                EXPECT_LE(es.eigenvalues().minCoeff(), 1e-9 * top) << "rank exceeds atom count";
            }
        }
        for (std::size_t k = 1; k <= 7; ++k) {
            std::vector<double> prefix(seq.values().begin(), seq.values().begin() + static_cast<long>(k) + 1);
            EXPECT_EQ(truncated_feasible(MomentSequence(prefix)).verdict, Feasibility::Feasible)
                << "trial " << trial << " k " << k;
        }
    }
}
