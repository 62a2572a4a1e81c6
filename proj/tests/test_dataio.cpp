#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"

#include "imv/dataio.hpp"
#include "imv/errors.hpp"
#include "testutil.hpp"

using namespace imv;
using namespace imv::test;

TEST_CASE("parse_csv happy path and target reordering") {
    const std::string text =
        "b,y,a\n"
        "1,10,100\n"
        "2,20,200\n"
        "3,30,300\n"
        "4,40,400\n"
        "5,50,500\n";
    SeriesTable t = parse_csv(text, "y", "test");
    REQUIRE(t.rows() == 5);
    REQUIRE(t.cols() == 3);
    CHECK(t.columns == std::vector<std::string>{"b", "a", "y"});
    CHECK(t.at(0, 0) == 1.0);
    CHECK(t.at(0, 1) == 100.0);
    CHECK(t.at(0, 2) == 10.0);
    CHECK(t.dropped_rows == 0);
}

TEST_CASE("rows with missing cells are dropped and counted") {
    const std::string text =
        "x,y\n"
        "1,2\n"
        ",3\n"
        "4,5\n"
        "6,NaN\n"
        "7,8\n";
    SeriesTable t = parse_csv(text, "y", "test");
    CHECK(t.rows() == 3);
    CHECK(t.dropped_rows == 2);
}

TEST_CASE("missing target column names the available ones") {
    try {
        parse_csv("a,b\n1,2\n", "y", "test");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("'y'") != std::string::npos);
        CHECK(msg.find("a, b") != std::string::npos);
    }
}

TEST_CASE("garbage cell in a numeric column reports row and column") {
    try {
        parse_csv("x,y\n1,2\n5,oops\n3,4\n", "y", "test");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("row 3") != std::string::npos);
        CHECK(msg.find("'y'") != std::string::npos);
        CHECK(msg.find("oops") != std::string::npos);
    }
}

TEST_CASE("entirely non-numeric columns are ignored, quoted fields parse") {
    const std::string text =
        "ts,x,y\n"
        "2024-01-01,\"1\",2\n"
        "2024-01-02,3,\"4\"\n";
    SeriesTable t = parse_csv(text, "y", "test");
    CHECK(t.cols() == 2);
    REQUIRE(t.ignored_columns.size() == 1);
    CHECK(t.ignored_columns[0] == "ts");
    CHECK(t.at(1, 0) == 3.0);
    CHECK(t.at(1, 1) == 4.0);
}

TEST_CASE("load_csv missing file carries the path") {
    try {
        load_csv("/no/such/file.csv", "y");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("/no/such/file.csv") != std::string::npos);
    }
}

TEST_CASE("standardize train-row statistics, round trip, constant column") {
    SeriesTable t;
    t.columns = {"x", "c", "y"};
    t.n_rows = 6;
    // x = 1..6, c constant, y = 10..60
    for (int r = 1; r <= 6; ++r) {
        t.values.push_back(r);
        t.values.push_back(7.0);
        t.values.push_back(10.0 * r);
    }
    auto [std_t, st] = standardize(t, 4);

    // constant column becomes all zeros
    for (std::size_t r = 0; r < 6; ++r) CHECK(std_t.at(r, 1) == 0.0);

    // train rows of each non-constant column have mean 0, std 1
    for (std::size_t c : {std::size_t{0}, std::size_t{2}}) {
        double m = 0.0, v = 0.0;
        for (std::size_t r = 0; r < 4; ++r) m += std_t.at(r, c);
        m /= 4;
        for (std::size_t r = 0; r < 4; ++r) v += std_t.at(r, c) * std_t.at(r, c);
        v = v / 4 - m * m;
        CHECK(std::abs(m) <= 1e-12);
        CHECK(std::abs(std::sqrt(v) - 1.0) <= 1e-12);
    }

    // inverse transform recovers originals
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(st.to_orig(std_t.at(r, c), c) == doctest::Approx(t.at(r, c)).epsilon(1e-10));

    // no leakage: stats ignore rows past train_rows
    SeriesTable t2 = t;
    t2.at(5, 0) = 1e6;
    auto [std2, st2] = standardize(t2, 4);
    CHECK(st2.mean[0] == st.mean[0]);
    CHECK(st2.stdev[0] == st.stdev[0]);

    CHECK_THROWS_AS(standardize(t, 1), ArgumentError);
}

TEST_CASE("make_windows counts, boundary split and indexing contract") {
    SeriesTable t;
    t.columns = {"x", "y"};
    t.n_rows = 12;
    for (int r = 0; r < 12; ++r) {
        t.values.push_back(r);
        t.values.push_back(100 + r);
    }
    WindowedDataset ds = make_windows(t, 10, {0.7, 0.15, 0.15});
    CHECK(ds.size() == 2);

    // window 0 covers rows 0..9, target = row 10's y
    CHECK(ds.inputs[0].at2(0, 0) == 0.0);
    CHECK(ds.inputs[0].at2(9, 0) == 9.0);
    CHECK(ds.inputs[0].at2(9, 1) == 109.0);
    CHECK(ds.targets[0] == 110.0);
    CHECK(ds.targets[1] == 111.0);

    // single-window table lands in train
    SeriesTable t11 = t;
    t11.n_rows = 11;
    t11.values.resize(22);
    WindowedDataset one = make_windows(t11, 10, {0.7, 0.15, 0.15});
    REQUIRE(one.size() == 1);
    CHECK(one.split[0] == Split::Train);

    SeriesTable t10 = t;
    t10.n_rows = 10;
    t10.values.resize(20);
    CHECK_THROWS_AS(make_windows(t10, 10, {0.7, 0.15, 0.15}), ArgumentError);

    std::array<double, 3> bad{0.5, 0.2, 0.2};
    CHECK_THROWS_AS(make_windows(t, 10, bad), ArgumentError);
}

TEST_CASE("window starts partition the valid range exactly once") {
    Rng rng(31);
    SeriesTable t;
    t.columns = {"a", "y"};
    t.n_rows = 57;
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        t.values.push_back(rng.uniform());
        t.values.push_back(rng.uniform());
    }
    const std::size_t T = 7;
    WindowedDataset ds = make_windows(t, T, {0.6, 0.2, 0.2});
    REQUIRE(ds.size() == t.n_rows - T);
    std::vector<bool> seen(ds.size(), false);
    for (std::size_t s : ds.start) {
        REQUIRE(s < seen.size());
        CHECK(!seen[s]);
        seen[s] = true;
    }
    for (bool b : seen) CHECK(b);
    // chronological split boundaries
    for (std::size_t i = 1; i < ds.size(); ++i)
        CHECK(static_cast<int>(ds.split[i - 1]) <= static_cast<int>(ds.split[i]));
}

TEST_CASE("prepare_dataset statistics come from train rows only") {
    Rng rng(32);
    SeriesTable t;
    t.columns = {"a", "y"};
    t.n_rows = 100;
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        t.values.push_back(rng.uniform(-1, 1));
        t.values.push_back(rng.uniform(-1, 1));
    }
    WindowedDataset ds = prepare_dataset(t, 10, {0.5, 0.25, 0.25});

    // corrupt all rows past the train range: train windows must be unchanged
    const std::size_t m_train = ds.count(Split::Train);
    const std::size_t train_rows = m_train + 10;
    SeriesTable t2 = t;
    for (std::size_t r = train_rows; r < t.n_rows; ++r)
        for (std::size_t c = 0; c < 2; ++c) t2.at(r, c) = 1e9;
    WindowedDataset ds2 = prepare_dataset(t2, 10, {0.5, 0.25, 0.25});
    CHECK(ds2.standardization.mean == ds.standardization.mean);
    CHECK(ds2.standardization.stdev == ds.standardization.stdev);
    for (std::size_t i = 0; i < m_train; ++i)
        CHECK(ds2.inputs[i].data == ds.inputs[i].data);
}

TEST_CASE("write_csv and load_csv round trip") {
    SeriesTable t;
    t.columns = {"a", "y"};
    t.n_rows = 3;
    t.values = {0.1, 1.0000000000000002, -2.5e-13, 3.0, 17.25, -0.0625};
    const std::string path = "/tmp/imv_test_roundtrip.csv";
    write_csv(t, path);
    SeriesTable back = load_csv(path, "y");
    REQUIRE(back.rows() == 3);
    CHECK(back.columns == t.columns);
    for (std::size_t i = 0; i < t.values.size(); ++i) CHECK(back.values[i] == t.values[i]);
    std::remove(path.c_str());
}
