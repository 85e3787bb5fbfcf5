#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "san/gradcheck.hpp"
#include "san/objective.hpp"

using namespace san;

namespace {

std::vector<std::vector<double>> random_matrix(std::size_t b, std::mt19937& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<std::vector<double>> s(b, std::vector<double>(b));
    for (auto& row : s)
        for (auto& v : row) v = dist(rng);
    return s;
}

double eval_loss(const std::vector<std::vector<double>>& s, const objective::MarginConfig& cfg) {
    ParamStore params;
    Graph g(&params);
    std::vector<std::vector<Var>> vars(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        for (double v : s[i]) vars[i].push_back(g.constant(v));
    return g.value(objective::triplet_loss(g, vars, cfg)).scalar_value();
}

// brute-force Eq.-10 evaluation over every (i,j) hinge term, mirroring the
// summation order of the implementation so the match can be exact
double oracle_loss(const std::vector<std::vector<double>>& s, double margin, bool hardest) {
    const std::size_t b = s.size();
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        std::vector<double> sent, img;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            sent.push_back(std::max(0.0, margin - s[i][i] + s[i][j]));
            img.push_back(std::max(0.0, margin - s[i][i] + s[j][i]));
        }
        auto agg = [&](const std::vector<double>& terms) {
            if (hardest) return *std::max_element(terms.begin(), terms.end());
            double acc = terms[0];
            for (std::size_t t = 1; t < terms.size(); ++t) acc += terms[t];
            return acc;
        };
        total += agg(sent) + agg(img);
    }
    return total;
}

}  // namespace

TEST_CASE("cosine basics") {
    std::vector<double> x = {0.3, -1.2, 0.7};
    CHECK(objective::cosine(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(objective::cosine({1.0, 0.0}, {0.0, 1.0}) == 0.0);

    std::vector<double> y = {0.5, 0.25, -0.9};
    std::vector<double> scaled = {3.0 * 0.3, 3.0 * -1.2, 3.0 * 0.7};
    CHECK(objective::cosine(scaled, y) ==
          doctest::Approx(objective::cosine(x, y)).epsilon(1e-14));

    CHECK_THROWS_AS(objective::cosine({0.0, 0.0}, {1.0, 0.0}), NumericError);
    CHECK_THROWS_AS(objective::cosine({1.0, 0.0}, {0.0, 0.0}), NumericError);
}

TEST_CASE("cosine stays clamped inside [-1,1]") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(4), b(4);
        for (auto& v : a) v = dist(rng);
        for (auto& v : b) v = dist(rng);
        double c = objective::cosine(a, b);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
    }
}

TEST_CASE("perfect similarity matrix gives zero loss") {
    objective::MarginConfig cfg;
    CHECK(eval_loss({{1.0, 0.0}, {0.0, 1.0}}, cfg) == 0.0);
}

TEST_CASE("B=2 worked example evaluates to 0.3") {
    objective::MarginConfig cfg;  // margin 0.2, sum-all
    CHECK(eval_loss({{0.5, 0.1}, {0.6, 0.9}}, cfg) == 0.3);
}

TEST_CASE("sum-all loss matches the brute-force oracle on random 4x4 matrices") {
    std::mt19937 rng(7);
    objective::MarginConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        auto s = random_matrix(4, rng);
        CHECK(eval_loss(s, cfg) == oracle_loss(s, cfg.margin, false));
    }
}

TEST_CASE("hardest mode matches its oracle and never exceeds sum-all") {
    std::mt19937 rng(11);
    objective::MarginConfig sum_cfg;
    objective::MarginConfig hard_cfg;
    hard_cfg.mode = objective::NegativeMode::Hardest;
    for (int trial = 0; trial < 100; ++trial) {
        auto s = random_matrix(4, rng);
        double hard = eval_loss(s, hard_cfg);
        CHECK(hard == oracle_loss(s, hard_cfg.margin, true));
        CHECK(hard <= eval_loss(s, sum_cfg));
    }
}

TEST_CASE("transposing the similarity matrix leaves the sum-all loss unchanged") {
    std::mt19937 rng(13);
    objective::MarginConfig cfg;
    for (int trial = 0; trial < 50; ++trial) {
        auto s = random_matrix(5, rng);
        auto t = s;
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j) t[i][j] = s[j][i];
        CHECK(eval_loss(s, cfg) == eval_loss(t, cfg));
    }
}

TEST_CASE("loss is nonnegative and zero iff every margin is satisfied") {
    std::mt19937 rng(17);
    objective::MarginConfig cfg;
    for (int trial = 0; trial < 50; ++trial) {
        auto s = random_matrix(3, rng);
        double loss = eval_loss(s, cfg);
        CHECK(loss >= 0.0);
        bool satisfied = true;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                if (j == i) continue;
                if (s[i][i] - s[i][j] < cfg.margin || s[i][i] - s[j][i] < cfg.margin)
                    satisfied = false;
            }
        CHECK((loss == 0.0) == satisfied);
    }
}

TEST_CASE("degenerate batches and margins are rejected") {
    ParamStore params;
    objective::MarginConfig cfg;
    {
        Graph g(&params);
        std::vector<std::vector<Var>> one = {{g.constant(1.0)}};
        CHECK_THROWS_AS(objective::triplet_loss(g, one, cfg), UsageError);
    }
    {
        Graph g(&params);
        std::vector<std::vector<Var>> ragged = {{g.constant(1.0), g.constant(0.0)},
                                                {g.constant(0.0)}};
        CHECK_THROWS_AS(objective::triplet_loss(g, ragged, cfg), ShapeError);
    }
    {
        Graph g(&params);
        std::vector<std::vector<Var>> s = {{g.constant(1.0), g.constant(0.0)},
                                           {g.constant(0.0), g.constant(1.0)}};
        objective::MarginConfig bad;
        bad.margin = 0.0;
        CHECK_THROWS_AS(objective::triplet_loss(g, s, bad), UsageError);
    }
}

TEST_CASE("hinge subgradient passes gradcheck away from the kinks") {
    const std::size_t b = 3, k = 4;
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    objective::MarginConfig cfg;

    // resample until every hinge argument is comfortably away from zero, so
    // the finite-difference probe never straddles a kink
    for (int attempt = 0;; ++attempt) {
        REQUIRE(attempt < 200);
        Tensor img({b, k}), txt({b, k});
        for (std::size_t i = 0; i < img.numel(); ++i) img[i] = dist(rng);
        for (std::size_t i = 0; i < txt.numel(); ++i) txt[i] = dist(rng);

        std::vector<std::vector<double>> s(b, std::vector<double>(b));
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < b; ++j) {
                std::vector<double> a(k), c(k);
                for (std::size_t x = 0; x < k; ++x) {
                    a[x] = img.at(i, x);
                    c[x] = txt.at(j, x);
                }
                s[i][j] = objective::cosine(a, c);
            }
        bool clear = true;
        for (std::size_t i = 0; i < b && clear; ++i)
            for (std::size_t j = 0; j < b && clear; ++j) {
                if (j == i) continue;
                if (std::fabs(cfg.margin - s[i][i] + s[i][j]) < 1e-3 ||
                    std::fabs(cfg.margin - s[i][i] + s[j][i]) < 1e-3)
                    clear = false;
            }
        if (!clear) continue;

        ParamStore params;
        params.add("img", img);
        params.add("txt", txt);
        auto build = [b, &cfg](Graph& g) {
            Var vi = g.param("img");
            Var vt = g.param("txt");
            std::vector<std::vector<Var>> vars(b);
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < b; ++j)
                    vars[i].push_back(g.cosine(g.row(vi, i), g.row(vt, j)));
            return objective::triplet_loss(g, vars, cfg);
        };
        auto r = gradcheck(params, build, 1e-5);
        CAPTURE(r.worst_param);
        CHECK(r.max_rel_err <= 1e-4);
        break;
    }
}
