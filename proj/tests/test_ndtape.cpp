#include <array>
#include <cmath>

#include "doctest.h"

#include "imv/errors.hpp"
#include "imv/ndarray.hpp"
#include "imv/rng.hpp"
#include "imv/tape.hpp"
#include "testutil.hpp"

using namespace imv;
using namespace imv::test;

TEST_CASE("matmul basics") {
    NdArray a = NdArray::matrix(2, 2, {1, 2, 3, 4});
    CHECK(matmul(NdArray::identity(2), a).data == a.data);

    NdArray z = NdArray::zeros({2, 3});
    Rng rng(1);
    NdArray any = random_array({3, 2}, rng);
    NdArray r = matmul(z, any);
    for (double v : r.data) CHECK(v == 0.0);

    NdArray row = NdArray::matrix(1, 2, {1, 2});
    NdArray col = NdArray::matrix(2, 1, {3, 4});
    NdArray p = matmul(row, col);
    CHECK(p.shape == std::vector<std::size_t>{1, 1});
    CHECK(p.data[0] == doctest::Approx(11.0).epsilon(1e-15));
}

TEST_CASE("matmul shape error names both shapes") {
    NdArray a = NdArray::zeros({2, 3});
    NdArray b = NdArray::zeros({4, 2});
    try {
        matmul(a, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[4x2]") != std::string::npos);
    }
}

TEST_CASE("tensor_dot examples") {
    // identity blocks pass h through
    const std::size_t n = 3, d = 4;
    NdArray w = NdArray::zeros({n, d, d});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < d; ++i) w.at3(b, i, i) = 1.0;
    Rng rng(2);
    NdArray h = random_array({n, d}, rng);
    CHECK(tensor_dot(w, h).data == h.data);

    // scalar blocks
    NdArray w2({2, 1, 1}, {2, 3});
    NdArray h2 = NdArray::matrix(2, 1, {1, -1});
    NdArray out = tensor_dot(w2, h2);
    CHECK(out.data[0] == doctest::Approx(2.0));
    CHECK(out.data[1] == doctest::Approx(-3.0));

    // annihilator
    NdArray wz = NdArray::zeros({n, d, d});
    NdArray hz = tensor_dot(wz, h);
    for (double v : hz.data) CHECK(v == 0.0);

    CHECK_THROWS_AS(tensor_dot(NdArray::zeros({2, 3, 4}), NdArray::zeros({3, 4})),
                    DimensionError);
    CHECK_THROWS_AS(tensor_dot(NdArray::zeros({2, 3, 4}), NdArray::zeros({2, 5})),
                    DimensionError);
}

TEST_CASE("tensor_dot equals per-block matmul exactly") {
    Rng rng(3);
    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t n = 1 + rng.index(4), d = 1 + rng.index(5), k = 1 + rng.index(5);
        NdArray w = random_array({n, d, k}, rng);
        NdArray h = random_array({n, k}, rng);
        NdArray out = tensor_dot(w, h);
        for (std::size_t b = 0; b < n; ++b) {
            NdArray wb = NdArray::zeros({d, k});
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < k; ++j) wb.at2(i, j) = w.at3(b, i, j);
            NdArray hb = NdArray::zeros({k, 1});
            for (std::size_t j = 0; j < k; ++j) hb.data[j] = h.at2(b, j);
            NdArray ref = matmul(wb, hb);
            for (std::size_t i = 0; i < d; ++i) CHECK(out.at2(b, i) == ref.data[i]);
        }
    }
}

TEST_CASE("elementwise maps and fixed values") {
    NdArray z = NdArray::vector({0.0, 0.0});
    NdArray s = sigmoid(z);
    CHECK(s.data[0] == doctest::Approx(0.5).epsilon(1e-15));
    NdArray t = imv::tanh(NdArray::vector({0.7}));
    CHECK(t.data[0] == doctest::Approx(std::tanh(0.7)).epsilon(1e-15));
    CHECK(t.data[0] == doctest::Approx(0.60436778).epsilon(1e-7));
}

TEST_CASE("vectorize / matricize round trip and order") {
    Rng rng(4);
    for (int iter = 0; iter < 30; ++iter) {
        const std::size_t n = 1 + rng.index(30), d = 1 + rng.index(30);
        NdArray m = random_array({n, d}, rng);
        NdArray v = vectorize(m);
        REQUIRE(v.numel() == n * d);
        NdArray back = matricize(v, n, d);
        CHECK(back.data == m.data);
    }
    // column-major: vec([[1,2],[3,4]]) = [1,3,2,4]
    NdArray m = NdArray::matrix(2, 2, {1, 2, 3, 4});
    NdArray v = vectorize(m);
    CHECK(v.data == std::vector<double>{1, 3, 2, 4});
    CHECK_THROWS_AS(matricize(NdArray::vector({1, 2, 3}), 2, 2), DimensionError);
}

TEST_CASE("concat along both axes") {
    NdArray a = NdArray::vector({1, 2});
    NdArray b = NdArray::vector({3});
    CHECK(concat(a, b, 0).data == std::vector<double>{1, 2, 3});

    NdArray m = NdArray::matrix(2, 2, {1, 2, 3, 4});
    NdArray r = NdArray::matrix(1, 2, {5, 6});
    CHECK(concat(m, r, 0).data == std::vector<double>{1, 2, 3, 4, 5, 6});
    NdArray c = NdArray::matrix(2, 1, {7, 8});
    NdArray mc = concat(m, c, 1);
    CHECK(mc.shape == std::vector<std::size_t>{2, 3});
    CHECK(mc.data == std::vector<double>{1, 2, 7, 3, 4, 8});

    CHECK_THROWS_AS(concat(m, c, 0), DimensionError);
    CHECK_THROWS_AS(concat(m, r, 1), DimensionError);
}

TEST_CASE("softmax contract") {
    NdArray u = softmax(NdArray::vector({3.5, 3.5, 3.5}));
    for (double v : u.data) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

    NdArray p = softmax(NdArray::vector({0.0, std::log(3.0)}));
    CHECK(p.data[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.data[1] == doctest::Approx(0.75).epsilon(1e-12));

    Rng rng(5);
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t k = 1 + rng.index(8);
        NdArray x = random_array({k}, rng, 30.0);
        NdArray sm = softmax(x);
        double sum = 0.0;
        for (double v : sm.data) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        // shift invariance within float tolerance for arbitrary shifts
        NdArray shifted = x;
        const double c = rng.uniform(-100.0, 100.0);
        for (double& v : shifted.data) v += c;
        NdArray sm2 = softmax(shifted);
        for (std::size_t i = 0; i < k; ++i)
            CHECK(sm2.data[i] == doctest::Approx(sm.data[i]).epsilon(1e-12));
    }

    // bit-for-bit shift invariance when the shifted logits subtract exactly
    NdArray x = NdArray::vector({1.0, 2.0, -3.0, 0.5});
    NdArray y = x;
    for (double& v : y.data) v += 4.0;  // exact in binary
    CHECK(softmax(x).data == softmax(y).data);

    CHECK_THROWS_AS(softmax(NdArray::zeros({0})), ArgumentError);
}

TEST_CASE("backward linear and quadratic") {
    Tape tape;
    Rng rng(6);
    NdArray p = random_array({7}, rng);
    Var vp = tape.param(p);
    Var loss = tape.sum(vp);
    tape.backward(loss);
    for (double g : tape.grad(vp).data) CHECK(g == 1.0);

    tape.reset();
    vp = tape.param(p);
    Var half = tape.scalar(0.5);
    loss = tape.scale(tape.sum(tape.mul(vp, vp)), half);
    tape.backward(loss);
    for (std::size_t i = 0; i < p.numel(); ++i)
        CHECK(tape.grad(vp).data[i] == doctest::Approx(p.data[i]).epsilon(1e-15));
}

TEST_CASE("backward rejects non-scalar loss; unreachable params get zeros") {
    Tape tape;
    Var a = tape.param(NdArray::vector({1, 2}));
    CHECK_THROWS_AS(tape.backward(a), ContractError);

    tape.reset();
    a = tape.param(NdArray::vector({1, 2}));
    Var b = tape.param(NdArray::vector({3, 4}));
    Var loss = tape.sum(a);
    tape.backward(loss);
    for (double g : tape.grad(b).data) CHECK(g == 0.0);
}

namespace {

// graph templates covering every op; together with randomized values they
// form the random-graph gradient check
struct Template {
    const char* name;
    std::vector<std::vector<std::size_t>> leaf_shapes;
    GraphBuilder build;
};

std::vector<Template> graph_templates() {
    std::vector<Template> ts;
    ts.push_back({"matmul-chain",
                  {{2, 3}, {3, 4}, {4, 2}},
                  [](Tape& t, const std::vector<Var>& v) {
                      return t.sum(t.tanh(t.matmul(t.matmul(v[0], v[1]), v[2])));
                  }});
    ts.push_back({"matmul_bt+row+softmax",
                  {{3, 4}, {2, 4}},
                  [](Tape& t, const std::vector<Var>& v) {
                      Var m = t.matmul_bt(v[0], v[1]);  // [3 x 2]
                      Var r = t.softmax(t.row(m, 1));
                      return t.sum(t.mul(r, r));
                  }});
    ts.push_back({"matvec+vecmat+dot",
                  {{3, 4}, {4}, {3}},
                  [](Tape& t, const std::vector<Var>& v) {
                      Var y = t.matvec(v[0], v[1]);   // [3]
                      Var z = t.vecmat(v[2], v[0]);   // [4]
                      return t.add(t.dot(y, v[2]), t.dot(z, v[1]));
                  }});
    ts.push_back({"tensor_dot+sigmoid",
                  {{2, 3, 2}, {2, 2}},
                  [](Tape& t, const std::vector<Var>& v) {
                      return t.sum(t.sigmoid(t.tensor_dot(v[0], v[1])));
                  }});
    ts.push_back({"elementwise mix",
                  {{5}, {5}, {5}},
                  [](Tape& t, const std::vector<Var>& v) {
                      Var s = t.softplus(v[2]);
                      Var one = t.constant(NdArray::full({5}, 1.0));
                      Var d = t.div(v[0], t.add(s, one));
                      return t.sum(t.mul(t.neg(d), t.sub(v[1], v[0])));
                  }});
    ts.push_back({"log+logsumexp",
                  {{4}, {4}},
                  [](Tape& t, const std::vector<Var>& v) {
                      Var sm = t.softmax(v[0]);
                      Var lg = t.log(sm);
                      return t.add(t.logsumexp(t.add(lg, v[1])), t.dot(sm, v[1]));
                  }});
    ts.push_back({"vectorize/matricize+slice",
                  {{3, 2}, {6}},
                  [](Tape& t, const std::vector<Var>& v) {
                      Var vec = t.vectorize(v[0]);
                      Var m = t.matricize(t.add(vec, v[1]), 3, 2);
                      Var head = t.slice(t.vectorize(m), 1, 4);
                      return t.sum(t.tanh(head));
                  }});
    ts.push_back({"concat+stack_rows+slice_cols",
                  {{2, 3}, {2, 3}, {3}},
                  [](Tape& t, const std::vector<Var>& v) {
                      std::array<Var, 2> mats{v[0], v[1]};
                      Var st = t.stack_rows(mats, 1);        // [2 x 3]
                      Var sc = t.slice_cols(st, 1, 2);       // [2 x 2]
                      std::array<Var, 2> parts{t.row(sc, 0), t.row(sc, 1)};
                      Var cat = t.concat_n(parts);           // [4]
                      Var more = t.concat_n(std::array<Var, 2>{cat, v[2]});
                      return t.sum(t.sigmoid(more));
                  }});
    ts.push_back({"broadcasts",
                  {{3, 4}, {4}, {1}},
                  [](Tape& t, const std::vector<Var>& v) {
                      Var m = t.add_row(v[0], v[1]);
                      Var s = t.scale(t.tanh(m), v[2]);
                      Var vv = t.add_scalar(t.matvec(s, v[1]), v[2]);
                      return t.sum(vv);
                  }});
    ts.push_back({"softmax-through-attention",
                  {{4, 3}, {4}, {3}},
                  [](Tape& t, const std::vector<Var>& v) {
                      Var a = t.softmax(t.matvec(v[0], v[2]));  // [4]
                      Var g = t.vecmat(t.mul(a, t.softmax(v[1])), v[0]);
                      return t.dot(g, v[2]);
                  }});
    return ts;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences on 100 random graphs") {
    Rng rng(7);
    auto templates = graph_templates();
    int graphs = 0;
    double worst = 0.0;
    for (int round = 0; round < 10; ++round) {
        for (const Template& tpl : templates) {
            std::vector<NdArray> leaves;
            for (const auto& s : tpl.leaf_shapes) leaves.push_back(random_array(s, rng));
            const double err = graph_grad_max_err(tpl.build, std::move(leaves));
            INFO(tpl.name);
            CHECK(err < 1e-4);
            worst = std::max(worst, err);
            ++graphs;
        }
    }
    CHECK(graphs == 100);
    MESSAGE("worst relative error over ", graphs, " graphs: ", worst);
}

TEST_CASE("tape values stay finite on finite inputs") {
    Rng rng(8);
    for (int iter = 0; iter < 20; ++iter) {
        NdArray a = random_array({4, 4}, rng, 40.0);
        CHECK(sigmoid(a).all_finite());
        CHECK(imv::tanh(a).all_finite());
        CHECK(softmax(vectorize(a)).all_finite());
        CHECK(matmul(a, a).all_finite());
    }
}
