#include "flowdetect/layers.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "support/gradcheck.hpp"

using namespace flowdetect;

namespace {

Conv1dParams single_kernel(std::vector<double> taps, double bias) {
    const std::size_t k = taps.size();
    return Conv1dParams{Tensor({1, 1, k}, std::move(taps)), Tensor({1}, {bias})};
}

Tensor column(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor({n, 1}, std::move(v));
}

}  // namespace

TEST(Conv1d, IdentityKernel) {
    auto [y, cache] = conv1d_forward(column({1, 2, 3, 4}), single_kernel({1}, 0));
    ASSERT_EQ(y.dim(0), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(y.at(i, 0), static_cast<double>(i + 1));
}

TEST(Conv1d, BoxKernel) {
    auto [y, cache] = conv1d_forward(column({1, 2, 3, 4}), single_kernel({1, 1}, 0));
    ASSERT_EQ(y.dim(0), 3u);
    EXPECT_EQ(y.at(0, 0), 3.0);
    EXPECT_EQ(y.at(1, 0), 5.0);
    EXPECT_EQ(y.at(2, 0), 7.0);
}

TEST(Conv1d, ZeroKernelBiasOnly) {
    auto [y, cache] = conv1d_forward(column({1, 2, 3}), single_kernel({0, 0}, 5));
    ASSERT_EQ(y.dim(0), 2u);
    EXPECT_EQ(y.at(0, 0), 5.0);
    EXPECT_EQ(y.at(1, 0), 5.0);
}

TEST(Conv1d, SequenceTooShort) {
    EXPECT_THROW(conv1d_forward(column({1, 2}), single_kernel({1, 1, 1}, 0)), SequenceError);
}

TEST(Conv1d, OutputLengthLaw) {
    Rng rng(9);
    for (std::size_t t = 1; t <= 8; ++t) {
        for (std::size_t k = 1; k <= t; ++k) {
            const Tensor x = init_uniform(rng, {t, 2}, 1.0);
            const Conv1dParams p{init_uniform(rng, {3, 2, k}, 1.0), init_uniform(rng, {3}, 1.0)};
            auto [y, cache] = conv1d_forward(x, p);
            EXPECT_EQ(y.dim(0), t - k + 1);
            EXPECT_EQ(y.dim(1), 3u);
        }
    }
}

TEST(Conv1dBackward, ZeroGradGivesZeros) {
    auto [y, cache] = conv1d_forward(column({1, 2, 3, 4}), single_kernel({1, 1}, 0));
    const Conv1dGrads g = conv1d_backward(Tensor(y.shape()), cache, single_kernel({1, 1}, 0));
    for (std::size_t i = 0; i < g.x.numel(); ++i) EXPECT_EQ(g.x.at(i), 0.0);
    for (std::size_t i = 0; i < g.w.numel(); ++i) EXPECT_EQ(g.w.at(i), 0.0);
    EXPECT_EQ(g.b.at(0), 0.0);
}

TEST(Conv1dBackward, IdentityKernelPassesGradThrough) {
    const Conv1dParams p = single_kernel({1}, 0);
    auto [y, cache] = conv1d_forward(column({1, 2, 3, 4}), p);
    const Tensor grad_y({4, 1}, {0.5, -1, 2, 3});
    const Conv1dGrads g = conv1d_backward(grad_y, cache, p);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(g.x.at(i, 0), grad_y.at(i, 0));
}

TEST(Conv1dBackward, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EXPECT_LT(fdtest::check_conv1d(seed), 1e-6) << "seed " << seed;
    }
}

TEST(MaxPool, BasicWindowing) {
    auto [y, cache] = maxpool1d_forward(column({1, 3, 2, 8}), 2);
    ASSERT_EQ(y.dim(0), 2u);
    EXPECT_EQ(y.at(0, 0), 3.0);
    EXPECT_EQ(y.at(1, 0), 8.0);
}

TEST(MaxPool, WindowOneIsIdentity) {
    const Tensor x = column({4, 1, 7});
    auto [y, cache] = maxpool1d_forward(x, 1);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(y.at(i, 0), x.at(i, 0));
}

TEST(MaxPool, TieBreaksToLowestIndex) {
    auto [y, cache] = maxpool1d_forward(column({5, 5}), 2);
    EXPECT_EQ(y.at(0, 0), 5.0);
    EXPECT_EQ(cache.argmax[0], 0u);
    const Tensor grad_x = maxpool1d_backward(Tensor({1, 1}, {1.0}), cache);
    EXPECT_EQ(grad_x.at(0, 0), 1.0);
    EXPECT_EQ(grad_x.at(1, 0), 0.0);
}

TEST(MaxPool, TooShortAndRemainderDropped) {
    EXPECT_THROW(maxpool1d_forward(column({1}), 2), SequenceError);
    auto [y, cache] = maxpool1d_forward(column({1, 2, 3, 4, 9}), 2);
    EXPECT_EQ(y.dim(0), 2u);  // the trailing 9 is dropped
    EXPECT_EQ(y.at(1, 0), 4.0);
}

TEST(MaxPoolBackward, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EXPECT_LT(fdtest::check_maxpool1d(seed), 1e-6) << "seed " << seed;
    }
}

TEST(Dropout, InferenceIsIdentity) {
    Rng rng(1);
    const Tensor x = init_uniform(rng, {5, 3}, 1.0);
    auto [y, cache] = dropout_forward(x, 0.4, rng, false);
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.at(i), x.at(i));
    const Tensor g = dropout_backward(y, cache);
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(g.at(i), y.at(i));
}

TEST(Dropout, RateZeroIsIdentity) {
    Rng rng(2);
    const Tensor x = init_uniform(rng, {4, 4}, 1.0);
    auto [y, cache] = dropout_forward(x, 0.0, rng, true);
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.at(i), x.at(i));
}

TEST(Dropout, InvertedScalingPreservesTheMean) {
    Rng rng(3);
    const Tensor x({200, 100}, std::vector<double>(20000, 1.0));
    auto [y, cache] = dropout_forward(x, 0.5, rng, true);
    double mean = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) mean += y.at(i);
    mean /= static_cast<double>(y.numel());
    EXPECT_NEAR(mean, 1.0, 0.05);
}

TEST(Dropout, RejectsBadRate) {
    Rng rng(4);
    const Tensor x({2});
    EXPECT_THROW(dropout_forward(x, 1.0, rng, true), ConfigError);
    EXPECT_THROW(dropout_forward(x, -0.1, rng, true), ConfigError);
}

TEST(Dropout, BackwardMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EXPECT_LT(fdtest::check_dropout(seed), 1e-6) << "seed " << seed;
    }
}

TEST(Dense, IdentityWeights) {
    const Tensor x({2}, {3, 4});
    const Tensor eye({2, 2}, {1, 0, 0, 1});
    auto [y, cache] = dense_forward(x, eye, Tensor({2}));
    EXPECT_EQ(y.at(0), 3.0);
    EXPECT_EQ(y.at(1), 4.0);
}

TEST(Dense, HandComputedCase) {
    auto [y, cache] = dense_forward(Tensor({2}, {2, 3}), Tensor({1, 2}, {1, 1}), Tensor({1}, {1}));
    EXPECT_EQ(y.at(0), 6.0);
}

TEST(Dense, ShapeMismatch) {
    EXPECT_THROW(dense_forward(Tensor({3}), Tensor({1, 2}), Tensor({1})), DimensionError);
}

TEST(Dense, BackwardMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EXPECT_LT(fdtest::check_dense(seed), 1e-6) << "seed " << seed;
    }
}

TEST(LstmCell, ZeroParametersGiveZeroHidden) {
    const std::size_t n = 3, h = 4;
    const LstmParams p{Tensor({4 * h, n}), Tensor({4 * h, h}), Tensor({4 * h})};
    const auto out = lstm_cell_forward(Tensor({n}, {1, -2, 3}), Tensor({h}), Tensor({h}), p);
    for (std::size_t j = 0; j < h; ++j) {
        EXPECT_EQ(out.h.at(j), 0.0);  // o = 0.5 but tanh(c) = 0
        EXPECT_EQ(out.c.at(j), 0.0);
    }
}

TEST(LstmCell, HiddenStateStaysInOpenUnitInterval) {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 3, h = 4;
        const LstmParams p = fdtest::random_lstm(rng, n, h);
        Tensor h_t({h}), c_t({h});
        for (int t = 0; t < 5; ++t) {
            const auto out = lstm_cell_forward(init_uniform(rng, {n}, 2.0), h_t, c_t, p);
            h_t = out.h;
            c_t = out.c;
            for (std::size_t j = 0; j < h; ++j) {
                EXPECT_GT(h_t.at(j), -1.0);
                EXPECT_LT(h_t.at(j), 1.0);
            }
        }
    }
}

TEST(LstmCell, ThreeStepUnrollMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EXPECT_LT(fdtest::check_lstm_unroll(seed, 3), 1e-5) << "seed " << seed;
    }
}

TEST(Bilstm, SingleStepConcatenatesBothDirections) {
    Rng rng(21);
    const std::size_t n = 3, h = 2;
    const Tensor x = init_uniform(rng, {1, n}, 1.0);
    const LstmParams p_fwd = fdtest::random_lstm(rng, n, h);
    const LstmParams p_bwd = fdtest::random_lstm(rng, n, h);
    auto [hc, cache] = bilstm_forward(x, p_fwd, p_bwd);
    ASSERT_EQ(hc.dim(0), 2 * h);

    Tensor row({n});
    for (std::size_t c = 0; c < n; ++c) row.at(c) = x.at(0, c);
    const auto fwd = lstm_cell_forward(row, Tensor({h}), Tensor({h}), p_fwd);
    const auto bwd = lstm_cell_forward(row, Tensor({h}), Tensor({h}), p_bwd);
    for (std::size_t j = 0; j < h; ++j) {
        EXPECT_EQ(hc.at(j), fwd.h.at(j));
        EXPECT_EQ(hc.at(h + j), bwd.h.at(j));
    }
}

TEST(Bilstm, ReversalSwapsTheHalvesExactly) {
    Rng rng(22);
    const std::size_t t = 5, n = 3, h = 4;
    const Tensor x = init_uniform(rng, {t, n}, 1.0);
    Tensor reversed({t, n});
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t c = 0; c < n; ++c) reversed.at(i, c) = x.at(t - 1 - i, c);
    const LstmParams p_fwd = fdtest::random_lstm(rng, n, h);
    const LstmParams p_bwd = fdtest::random_lstm(rng, n, h);

    auto [hc, c1] = bilstm_forward(x, p_fwd, p_bwd);
    auto [hc_rev, c2] = bilstm_forward(reversed, p_bwd, p_fwd);
    for (std::size_t j = 0; j < h; ++j) {
        EXPECT_EQ(hc.at(j), hc_rev.at(h + j));
        EXPECT_EQ(hc.at(h + j), hc_rev.at(j));
    }
}

TEST(Bilstm, EmptySequenceAndOutputWidth) {
    Rng rng(23);
    const LstmParams p_fwd = fdtest::random_lstm(rng, 3, 5);
    const LstmParams p_bwd = fdtest::random_lstm(rng, 3, 5);
    for (std::size_t t = 1; t <= 4; ++t) {
        auto [hc, cache] = bilstm_forward(init_uniform(rng, {t, 3}, 1.0), p_fwd, p_bwd);
        EXPECT_EQ(hc.dim(0), 10u);
    }
}

TEST(BilstmBackward, ZeroGradGivesZeros) {
    Rng rng(24);
    const Tensor x = init_uniform(rng, {3, 2}, 1.0);
    const LstmParams p_fwd = fdtest::random_lstm(rng, 2, 2);
    const LstmParams p_bwd = fdtest::random_lstm(rng, 2, 2);
    auto [hc, cache] = bilstm_forward(x, p_fwd, p_bwd);
    const BilstmGrads g = bilstm_backward(Tensor({4}), cache, p_fwd, p_bwd);
    EXPECT_EQ(g.x.shape(), x.shape());
    for (std::size_t i = 0; i < g.x.numel(); ++i) EXPECT_EQ(g.x.at(i), 0.0);
    for (std::size_t i = 0; i < g.p_fwd.w.numel(); ++i) EXPECT_EQ(g.p_fwd.w.at(i), 0.0);
}

TEST(BilstmBackward, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EXPECT_LT(fdtest::check_bilstm(seed), 1e-5) << "seed " << seed;
    }
}

TEST(BilstmBackward, CacheMismatchIsRejected) {
    Rng rng(25);
    const Tensor x = init_uniform(rng, {3, 2}, 1.0);
    const LstmParams p_fwd = fdtest::random_lstm(rng, 2, 2);
    const LstmParams p_bwd = fdtest::random_lstm(rng, 2, 2);
    auto [hc, cache] = bilstm_forward(x, p_fwd, p_bwd);
    EXPECT_THROW(bilstm_backward(Tensor({6}), cache, p_fwd, p_bwd), ContractError);
}

TEST(BceLoss, KnownValues) {
    const BceResult mid = bce_loss(0.5, 0);
    EXPECT_NEAR(mid.loss, std::log(2.0), 1e-12);
    EXPECT_NEAR(bce_loss(0.5, 1).loss, std::log(2.0), 1e-12);

    const BceResult wrong = bce_loss(0.9, 0);
    EXPECT_NEAR(wrong.loss, -std::log(0.1), 1e-12);

    EXPECT_LT(bce_loss(0.9999999, 1).loss, 1e-6);  // eps-bounded near-perfect prediction
    EXPECT_THROW(bce_loss(0.5, 2), ContractError);
}

TEST(BceLoss, GradMatchesFiniteDifferences) {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        double s = rng.uniform(0.05, 0.95);
        const int label = rng.next_double() < 0.5 ? 0 : 1;
        const BceResult r = bce_loss(s, label);
        const double numeric =
            fdtest::central_diff([&] { return bce_loss(s, label).loss; }, s, 1e-7);
        EXPECT_LT(fdtest::rel_err(r.grad_score, numeric), 1e-5);
    }
}
