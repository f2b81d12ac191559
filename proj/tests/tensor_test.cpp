#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <numeric>

#include "signcraft/errors.hpp"
#include "signcraft/parallel.hpp"
#include "signcraft/rng.hpp"
#include "signcraft/tensor.hpp"

using namespace signcraft;

TEST(Tensor, NewFillsEveryElement) {
    const Tensor zeros = tensor_new<float>({2, 2}, 0.0f);
    EXPECT_EQ(zeros.size(), 4u);
    for (float v : zeros.data()) EXPECT_EQ(v, 0.0f);

    const Tensor single = tensor_new<float>({1}, 7.5f);
    ASSERT_EQ(single.size(), 1u);
    EXPECT_EQ(single[0], 7.5f);

    const Tensor ones = tensor_new<float>({3, 2, 1}, 1.0f);
    EXPECT_EQ(ones.shape(), (Shape{3, 2, 1}));
    EXPECT_EQ(ones.size(), 6u);
    for (float v : ones.data()) EXPECT_EQ(v, 1.0f);
}

TEST(Tensor, RejectsInvalidShapes) {
    EXPECT_THROW(tensor_new<float>({}, 0.0f), ShapeError);
    EXPECT_THROW(tensor_new<float>({2, 0, 3}, 0.0f), ShapeError);
    EXPECT_THROW(Tensor({2, 2}, std::vector<float>(3)), ShapeError);
}

TEST(Tensor, FillReadBackProperty) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Shape shape;
        const std::size_t rank = 1 + rng.below(4);
        for (std::size_t i = 0; i < rank; ++i) shape.push_back(1 + rng.below(5));
        const float fill = static_cast<float>(rng.uniform(-10, 10));
        const Tensor t = tensor_new<float>(shape, fill);
        EXPECT_EQ(t.size(), shape_size(shape));
        EXPECT_TRUE(std::all_of(t.data().begin(), t.data().end(), [&](float v) { return v == fill; }));
    }
}

TEST(Tensor, RowMajorIndexing) {
    Tensor t({2, 3, 4});
    std::iota(t.data().begin(), t.data().end(), 0.0f);
    EXPECT_EQ(t.strides(), (std::vector<std::size_t>{12, 4, 1}));
    EXPECT_EQ(t.at({1, 2, 3}), 23.0f);
    EXPECT_EQ(t.at({0, 1, 0}), 4.0f);
    EXPECT_THROW(t.at({2, 0, 0}), IndexError);
    EXPECT_THROW(t.at({0, 0}), ShapeError);
}

TEST(Tensor, ReshapeKeepsData) {
    Tensor t({2, 6});
    std::iota(t.data().begin(), t.data().end(), 1.0f);
    const Tensor r = t.reshaped({3, 4});
    EXPECT_EQ(r.shape(), (Shape{3, 4}));
    EXPECT_TRUE(std::equal(t.data().begin(), t.data().end(), r.data().begin()));
    EXPECT_THROW(t.reshaped({5}), ShapeError);
}

// Golden values from tests/oracles/splitmix64_oracle.py.
TEST(Rng, MatchesReferenceSplitmix64) {
    Rng raw(42);
    EXPECT_EQ(raw.next_u64(), 0xbdd732262feb6e95ULL);

    Rng rng(42);
    EXPECT_DOUBLE_EQ(rng.uniform(), 0.7415648787718233);
    EXPECT_DOUBLE_EQ(rng.uniform(), 0.1599103928769201);
    EXPECT_DOUBLE_EQ(rng.uniform(), 0.27860113025513866);
}

TEST(Rng, UniformRangeAndErrors) {
    Rng rng(0);
    const double v = rng.uniform(0.0, 1.0);
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double w = rng.uniform(-3.0, 2.0);
        EXPECT_GE(w, -3.0);
        EXPECT_LT(w, 2.0);
    }
    EXPECT_THROW(rng.uniform(1.0, 1.0), InvalidArgument);
    EXPECT_THROW(rng.uniform(2.0, 1.0), InvalidArgument);
}

TEST(Rng, SameSeedSameFirstTenThousandDraws) {
    Rng a(42), b(42);
    for (int i = 0; i < 10000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, NormalStatisticsAndShift) {
    Rng rng(42);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) sum += rng.normal(0.0, 1.0);
    EXPECT_NEAR(sum / 10000.0, 0.0, 0.05);

    Rng a(9), b(9);
    for (int i = 0; i < 100; ++i) EXPECT_DOUBLE_EQ(a.normal(5.0, 1.0), b.normal(0.0, 1.0) + 5.0);

    Rng c(1), d(1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(c.normal(), d.normal());

    EXPECT_THROW(rng.normal(0.0, 0.0), InvalidArgument);
    EXPECT_THROW(rng.normal(0.0, -1.0), InvalidArgument);
}

TEST(Rng, StreamsAreIndependentButReproducible) {
    Rng a = Rng::stream(42, 1), b = Rng::stream(42, 1), c = Rng::stream(42, 2);
    EXPECT_EQ(a.next_u64(), b.next_u64());
    EXPECT_NE(Rng::stream(42, 1).next_u64(), c.next_u64());
}

TEST(Shuffle, EdgeCasesAndGolden) {
    Rng rng(7);
    EXPECT_TRUE(shuffle_indices(rng, 0).empty());
    EXPECT_EQ(shuffle_indices(rng, 1), (std::vector<std::size_t>{0}));

    Rng seven(7);
    EXPECT_EQ(shuffle_indices(seven, 5), (std::vector<std::size_t>{4, 1, 3, 0, 2}));
}

TEST(Shuffle, IsAPermutationForAllSizesUpTo1000) {
    Rng rng(11);
    for (std::size_t n = 0; n <= 1000; n += (n < 20 ? 1 : 37)) {
        auto perm = shuffle_indices(rng, n);
        std::sort(perm.begin(), perm.end());
        for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(perm[i], i) << "n=" << n;
    }
}

TEST(Parallel, VisitsEveryIndexOnceRegardlessOfWorkers) {
    for (std::size_t workers : {1u, 3u, 8u}) {
        set_worker_count(workers);
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) ASSERT_EQ(h.load(), 1);
    }
    set_worker_count(0);
}

TEST(Parallel, PropagatesExceptions) {
    set_worker_count(4);
    EXPECT_THROW(parallel_for(100, [](std::size_t i) {
                     if (i == 57) throw ShapeError("boom");
                 }),
                 ShapeError);
    set_worker_count(0);
}
