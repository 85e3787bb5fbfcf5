#include <doctest.h>

#include <cmath>
#include <random>

#include "san/graph.hpp"

using namespace san;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
    return t;
}

// independent six-nested-loop cross-correlation
Tensor conv_oracle(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                   int padding) {
    const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const std::size_t K = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const std::size_t Ho = (H + 2 * padding - kh) / stride + 1;
    const std::size_t Wo = (W + 2 * padding - kw) / stride + 1;
    Tensor out({K, Ho, Wo});
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t oi = 0; oi < Ho; ++oi)
            for (std::size_t oj = 0; oj < Wo; ++oj) {
                double acc = b[k];
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t di = 0; di < kh; ++di)
                        for (std::size_t dj = 0; dj < kw; ++dj) {
                            long ii = static_cast<long>(oi) * stride + di - padding;
                            long jj = static_cast<long>(oj) * stride + dj - padding;
                            if (ii < 0 || jj < 0 || ii >= static_cast<long>(H) ||
                                jj >= static_cast<long>(W))
                                continue;
                            acc += x.at(c, ii, jj) * w.at(k, c, di, dj);
                        }
                out.at(k, oi, oj) = acc;
            }
    return out;
}

Tensor pool_oracle(const Tensor& x, int sh, int sw) {
    Tensor out({x.dim(0) / sh, x.dim(1) / sw});
    for (std::size_t oi = 0; oi < out.dim(0); ++oi)
        for (std::size_t oj = 0; oj < out.dim(1); ++oj) {
            double acc = 0.0;
            for (int di = 0; di < sh; ++di)
                for (int dj = 0; dj < sw; ++dj) acc += x.at(oi * sh + di, oj * sw + dj);
            out.at(oi, oj) = acc / (sh * sw);
        }
    return out;
}

}  // namespace

TEST_CASE("conv2d: 1x1 kernel of 2 scales a map of ones") {
    Graph g;
    Var x = g.input(Tensor::full({1, 3, 3}, 1.0));
    Var w = g.input(Tensor::from({1, 1, 1, 1}, {2.0}));
    Var b = g.input(Tensor({1}));
    const Tensor& y = g.value(g.conv2d(x, w, b, 1, 0));
    REQUIRE(y.shape() == std::vector<std::size_t>{1, 3, 3});
    for (std::size_t i = 0; i < y.numel(); ++i) CHECK(y[i] == 2.0);
}

TEST_CASE("conv2d: all-ones 2x2 kernel sums the input") {
    Graph g;
    Var x = g.input(Tensor::from({1, 2, 2}, {1, 2, 3, 4}));
    Var w = g.input(Tensor::full({1, 1, 2, 2}, 1.0));
    Var b = g.input(Tensor({1}));
    const Tensor& y = g.value(g.conv2d(x, w, b, 1, 0));
    REQUIRE(y.shape() == std::vector<std::size_t>{1, 1, 1});
    CHECK(y[0] == 10.0);
}

TEST_CASE("conv2d matches the nested-loop oracle bit-for-bit") {
    std::mt19937 rng(7);
    struct Case {
        std::size_t C, K, H, k;
        int stride, padding;
    };
    for (Case c : {Case{2, 3, 5, 3, 1, 0}, Case{2, 3, 5, 3, 1, 1}, Case{1, 2, 8, 4, 2, 1},
                   Case{3, 1, 8, 3, 1, 2}, Case{2, 2, 7, 2, 1, 0}}) {
        Tensor x = random_tensor({c.C, c.H, c.H}, rng);
        Tensor w = random_tensor({c.K, c.C, c.k, c.k}, rng);
        Tensor b = random_tensor({c.K}, rng);
        Graph g;
        const Tensor& y = g.value(g.conv2d(g.input(x), g.input(w), g.input(b), c.stride,
                                           c.padding));
        Tensor expect = conv_oracle(x, w, b, c.stride, c.padding);
        REQUIRE(y.shape() == expect.shape());
        for (std::size_t i = 0; i < y.numel(); ++i) CHECK(y[i] == expect[i]);
    }
}

TEST_CASE("conv2d rejects non-integral output sizes") {
    Graph g;
    Var x = g.input(Tensor({1, 6, 6}));
    Var w = g.input(Tensor({1, 1, 3, 3}));
    Var b = g.input(Tensor({1}));
    CHECK_THROWS_AS(g.conv2d(x, w, b, 2, 1), ConfigError);
}

TEST_CASE("avg_pool2d: constant map stays constant") {
    Graph g;
    const Tensor& y = g.value(g.avg_pool2d(g.input(Tensor::full({4, 4}, 1.0)), 2, 2));
    REQUIRE(y.shape() == std::vector<std::size_t>{2, 2});
    for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == 1.0);
}

TEST_CASE("avg_pool2d: mean of four values") {
    Graph g;
    const Tensor& y = g.value(g.avg_pool2d(g.input(Tensor::from({2, 2}, {1, 3, 5, 7})), 2, 2));
    REQUIRE(y.numel() == 1);
    CHECK(y[0] == 4.0);
}

TEST_CASE("avg_pool2d matches the block-mean oracle bit-for-bit") {
    std::mt19937 rng(11);
    struct Case {
        std::size_t H, W;
        int sh, sw;
    };
    for (Case c : {Case{6, 6, 3, 2}, Case{8, 8, 2, 2}, Case{4, 8, 4, 2}, Case{8, 6, 1, 3}}) {
        Tensor x = random_tensor({c.H, c.W}, rng);
        Graph g;
        const Tensor& y = g.value(g.avg_pool2d(g.input(x), c.sh, c.sw));
        Tensor expect = pool_oracle(x, c.sh, c.sw);
        REQUIRE(y.shape() == expect.shape());
        for (std::size_t i = 0; i < y.numel(); ++i) CHECK(y[i] == expect[i]);
    }
}

TEST_CASE("avg_pool2d rejects non-divisible dimensions") {
    Graph g;
    CHECK_THROWS_AS(g.avg_pool2d(g.input(Tensor({5, 4})), 2, 2), ConfigError);
}

TEST_CASE("sigmoid(0) = 0.5, softmax of constants is uniform") {
    Graph g;
    CHECK(g.value(g.sigmoid(g.constant(0.0))).scalar_value() == 0.5);
    const Tensor& s = g.value(g.softmax(g.input(Tensor::full({3}, 1.7))));
    for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("softmax entries lie in [0,1] and sum to 1 within 1e-12") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = random_tensor({7}, rng);
        for (std::size_t i = 0; i < 7; ++i) x[i] *= 20.0;  // include large logits
        Graph g;
        const Tensor& s = g.value(g.softmax(g.input(x)));
        double sum = 0.0;
        for (std::size_t i = 0; i < 7; ++i) {
            CHECK(s[i] >= 0.0);
            CHECK(s[i] <= 1.0);
            sum += s[i];
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("softmax along rank-2 axes normalizes the declared axis") {
    std::mt19937 rng(5);
    Tensor x = random_tensor({3, 4}, rng);
    Graph g;
    const Tensor& rows = g.value(g.softmax(g.input(x), 1));
    for (std::size_t i = 0; i < 3; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 4; ++j) sum += rows.at(i, j);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    const Tensor& cols = g.value(g.softmax(g.input(x), 0));
    for (std::size_t j = 0; j < 4; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < 3; ++i) sum += cols.at(i, j);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("prelu: identity for positives, slope-scaled for negatives") {
    Graph g;
    Var x = g.input(Tensor::from({2, 1, 2}, {1.0, -2.0, -0.5, 3.0}));
    Var a = g.input(Tensor::from({2}, {0.25, 0.5}));
    const Tensor& y = g.value(g.prelu(x, a));
    CHECK(y[0] == 1.0);
    CHECK(y[1] == -0.5);
    CHECK(y[2] == -0.25);
    CHECK(y[3] == 3.0);
}

TEST_CASE("forward ops are deterministic across repeated evaluation") {
    std::mt19937 rng(13);
    Tensor x = random_tensor({2, 6, 6}, rng);
    Tensor w = random_tensor({3, 2, 3, 3}, rng);
    Tensor b = random_tensor({3}, rng);
    auto run = [&]() {
        Graph g;
        Var y = g.conv2d(g.input(x), g.input(w), g.input(b), 1, 1);
        return g.value(g.sum_all(g.tanh_(y))).scalar_value();
    };
    double first = run();
    for (int i = 0; i < 5; ++i) CHECK(run() == first);
}

TEST_CASE("mean_axis and concat_channels basic contracts") {
    Graph g;
    Var x = g.input(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}));
    const Tensor& m0 = g.value(g.mean_axis(x, 0));
    CHECK(m0[0] == 2.5);
    CHECK(m0[1] == 3.5);
    CHECK(m0[2] == 4.5);
    Var a = g.input(Tensor::full({1, 2, 2}, 1.0));
    Var b = g.input(Tensor::full({2, 2, 2}, 2.0));
    const Tensor& c = g.value(g.concat_channels(a, b));
    REQUIRE(c.shape() == std::vector<std::size_t>{3, 2, 2});
    CHECK(c.at(0, 0, 0) == 1.0);
    CHECK(c.at(1, 1, 1) == 2.0);
    CHECK(c.at(2, 0, 1) == 2.0);
}

TEST_CASE("upsample2d repeats values nearest-neighbor") {
    Graph g;
    const Tensor& y = g.value(g.upsample2d(g.input(Tensor::from({2, 2}, {1, 2, 3, 4})), 2));
    REQUIRE(y.shape() == std::vector<std::size_t>{4, 4});
    CHECK(y.at(std::size_t{0}, std::size_t{1}) == 1.0);
    CHECK(y.at(std::size_t{1}, std::size_t{0}) == 1.0);
    CHECK(y.at(std::size_t{1}, std::size_t{3}) == 2.0);
    CHECK(y.at(std::size_t{3}, std::size_t{2}) == 4.0);
}
