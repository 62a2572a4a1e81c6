#include <cmath>

#include "doctest.h"

#include "imv/errors.hpp"
#include "imv/evalx.hpp"
#include "testutil.hpp"

using namespace imv;
using namespace imv::test;

TEST_CASE("rmse and mae") {
    std::vector<double> y{1, 2}, same{1, 2}, off{2, 2};
    CHECK(rmse(y, same) == 0.0);
    CHECK(mae(y, same) == 0.0);
    CHECK(rmse(y, off) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(rmse(y, off) == doctest::Approx(0.70711).epsilon(1e-5));
    CHECK(mae(y, off) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), ArgumentError);

    // brute force on random vectors plus the power-mean inequality
    Rng rng(41);
    for (int iter = 0; iter < 30; ++iter) {
        const std::size_t k = 1 + rng.index(50);
        std::vector<double> a(k), b(k);
        for (std::size_t i = 0; i < k; ++i) {
            a[i] = rng.uniform(-5, 5);
            b[i] = rng.uniform(-5, 5);
        }
        double sq = 0.0, ab = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            sq += (a[i] - b[i]) * (a[i] - b[i]);
            ab += std::abs(a[i] - b[i]);
        }
        CHECK(rmse(a, b) == doctest::Approx(std::sqrt(sq / k)).epsilon(1e-12));
        CHECK(mae(a, b) == doctest::Approx(ab / k).epsilon(1e-12));
        CHECK(rmse(a, b) >= mae(a, b) - 1e-12);
    }
}

TEST_CASE("rank_variables ordering and ties") {
    NdArray I = NdArray::vector({0.1, 0.7, 0.2});
    CHECK(rank_variables(I) == std::vector<int>{2, 3, 1});

    NdArray uni = NdArray::full({4}, 0.25);
    CHECK(rank_variables(uni) == std::vector<int>{1, 2, 3, 4});

    // permuting importance permutes the ranking consistently: J maps
    // variable 1 -> 3, 2 -> 1, 3 -> 2 relative to I
    NdArray J = NdArray::vector({0.7, 0.2, 0.1});
    auto rI = rank_variables(I);
    auto rJ = rank_variables(J);
    auto back = [](int v) { return v == 1 ? 2 : (v == 2 ? 3 : 1); };
    for (std::size_t k = 0; k < 3; ++k) CHECK(back(rJ[k]) == rI[k]);
}

TEST_CASE("pearson_rank identifies a shifted copy of the target") {
    Rng rng(42);
    const std::size_t L = 400;
    SeriesTable t;
    t.columns = {"copy", "noise", "y"};
    t.n_rows = L;
    std::vector<double> y(L + 1);
    for (double& v : y) v = rng.normal();
    for (std::size_t r = 0; r < L; ++r) {
        t.values.push_back(y[r + 1]);      // equals next-step target
        t.values.push_back(rng.normal());  // independent noise
        t.values.push_back(y[r]);
    }
    std::vector<int> rank = pearson_rank(t, L);
    REQUIRE(rank.size() == 2);
    CHECK(rank[0] == 1);
    CHECK(rank[1] == 2);

    // affine rescaling of a column leaves the ranking unchanged
    SeriesTable t2 = t;
    for (std::size_t r = 0; r < L; ++r) t2.at(r, 0) = -3.0 * t2.at(r, 0) + 11.0;
    CHECK(pearson_rank(t2, L) == rank);

    // zero-variance column ranks last
    SeriesTable t3 = t;
    for (std::size_t r = 0; r < L; ++r) t3.at(r, 0) = 5.0;
    std::vector<int> rank3 = pearson_rank(t3, L);
    CHECK(rank3[1] == 1);
}

TEST_CASE("select_top_k keeps the ranking prefix plus target") {
    Rng rng(43);
    SeriesTable t;
    t.columns = {"v1", "v2", "v3", "v4", "v5", "v6", "y"};
    t.n_rows = 30;
    for (std::size_t r = 0; r < 30; ++r)
        for (std::size_t c = 0; c < 7; ++c) t.values.push_back(rng.uniform());
    WindowedDataset ds = prepare_dataset(t, 5, {0.6, 0.2, 0.2});

    std::vector<int> ranking{3, 5, 1, 7, 2, 4, 6};  // includes the target channel (7)
    WindowedDataset full = select_top_k(ds, ranking, 1.0);
    CHECK(full.n_vars == 7);
    CHECK(full.columns == ds.columns);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(full.inputs[i].data == ds.inputs[i].data);

    WindowedDataset half = select_top_k(ds, ranking, 0.5);
    CHECK(half.n_vars == 4);  // ceil(0.5 * 6) = 3 exogenous + target
    CHECK(half.columns == std::vector<std::string>{"v1", "v3", "v5", "y"});
    CHECK(half.size() == ds.size());
    CHECK(half.targets == ds.targets);
    // values follow the kept channels
    CHECK(half.inputs[0].at2(0, 0) == ds.inputs[0].at2(0, 0));
    CHECK(half.inputs[0].at2(0, 1) == ds.inputs[0].at2(0, 2));
    CHECK(half.inputs[0].at2(0, 2) == ds.inputs[0].at2(0, 4));
    CHECK(half.inputs[0].at2(0, 3) == ds.inputs[0].at2(0, 6));

    // determinism: same ranking, same result
    WindowedDataset again = select_top_k(ds, ranking, 0.5);
    CHECK(again.columns == half.columns);
    for (std::size_t i = 0; i < half.size(); ++i)
        CHECK(again.inputs[i].data == half.inputs[i].data);

    CHECK_THROWS_AS(select_top_k(ds, ranking, 0.0), ArgumentError);
}

TEST_CASE("generate_synthetic copy construction and zero drivers") {
    SyntheticSpec spec;
    spec.n_exo = 2;
    spec.length = 50;
    spec.seed = 7;
    spec.noise_std = 0.0;
    spec.drivers = {{1, 0, 1.0}};
    spec.nonlinear = false;
    SeriesTable t = generate_synthetic(spec);
    REQUIRE(t.cols() == 3);
    const std::size_t ycol = 2;
    for (std::size_t r = 1; r < t.rows(); ++r)
        CHECK(t.at(r, ycol) == t.at(r - 1, 0));  // y_{t+1} == v1(t) exactly

    SyntheticSpec none;
    none.n_exo = 2;
    none.length = 4000;
    none.seed = 8;
    none.drivers = {};
    none.noise_std = 1.0;
    SeriesTable tn = generate_synthetic(none);
    double mean = 0.0;
    for (std::size_t r = 0; r < tn.rows(); ++r) mean += tn.at(r, 2);
    mean /= static_cast<double>(tn.rows());
    CHECK(std::abs(mean) < 0.05);
}

TEST_CASE("default benchmark generator is deterministic with a pinned hash") {
    SeriesTable a = generate_synthetic(default_benchmark());
    SeriesTable b = generate_synthetic(default_benchmark());
    CHECK(a.values == b.values);
    CHECK(table_hash(a) == table_hash(b));
    CHECK(a.rows() == 2500);
    CHECK(a.cols() == 7);
    // pinned once from the first run of this generator at seed 42
    CHECK(table_hash(a) == 0x9557c9144fefb154ull);
}

TEST_CASE("Bayes oracle RMSE matches the noise floor within 5 percent") {
    SyntheticSpec spec = default_benchmark();
    SeriesTable t = generate_synthetic(spec);
    std::vector<double> signal = synthetic_true_signal(spec);
    REQUIRE(signal.size() == t.rows());
    std::vector<double> y(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) y[r] = t.at(r, 6);
    const double bayes = rmse(y, signal);
    CHECK(bayes == doctest::Approx(spec.noise_std).epsilon(0.05));

    // the mean predictor is far worse than the noise floor
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    std::vector<double> mp(y.size(), mean);
    CHECK(rmse(y, mp) > 5.0 * bayes);
}

TEST_CASE("metrics_report JSON") {
    std::vector<double> y{1, 2, 3}, yh{1, 2, 4};
    std::string s = metrics_report(y, yh);
    CHECK(s.find("\"rmse\"") != std::string::npos);
    CHECK(s.find("\"mae\"") != std::string::npos);
    CHECK(s.find("\"n_test\":3") != std::string::npos);
}
