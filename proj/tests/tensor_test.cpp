#include <doctest.h>

#include "bdris/tensor.hpp"
#include "helpers.hpp"

using namespace bdris;
using namespace bdris::ad;
using testutil::gradcheck;
using testutil::random_away_from_zero;
using testutil::random_tensor;

TEST_CASE("matmul identity and hand-computed products") {
    Tape tp;
    Tensor m = Tensor::matrix(2, 2, {1.0, 2.0, 3.0, 4.0});
    Tensor out = matmul(tp, Tensor::identity(2), m);
    for (std::size_t k = 0; k < 4; ++k) CHECK(out[k] == m[k]);

    Tensor a = Tensor::matrix(1, 2, {1.0, 2.0});
    Tensor b = Tensor::matrix(2, 1, {3.0, 4.0});
    CHECK(matmul(tp, a, b).value() == doctest::Approx(11.0));
}

TEST_CASE("matmul rejects mismatched shapes, naming both") {
    Tape tp;
    Tensor a = Tensor::zeros(2, 3), b = Tensor::zeros(4, 2);
    CHECK_THROWS_WITH_AS(matmul(tp, a, b), doctest::Contains("2x3"), ShapeError);
}

TEST_CASE("backward: sum and squared norm of a matrix") {
    Rng rng(7);
    Tape tp;
    Tensor w = tp.var(random_tensor(rng, 3, 3));
    Tensor loss = sum_all(tp, w);
    auto g = tp.backward(loss);
    for (double v : g.at(w).data()) CHECK(v == 1.0);

    Tape tp2;
    Tensor w2 = tp2.var(w.detached());
    Tensor loss2 = sum_all(tp2, mul(tp2, w2, w2));
    auto g2 = tp2.backward(loss2);
    for (std::size_t k = 0; k < w2.size(); ++k) {
        CHECK(g2.at(w2)[k] == doctest::Approx(2.0 * w2[k]).epsilon(1e-12));
    }
}

TEST_CASE("backward rejects non-scalar loss") {
    Tape tp;
    Tensor w = tp.var(Tensor::zeros(2, 2));
    Tensor y = relu(tp, w);
    CHECK_THROWS_AS(tp.backward(y), ContractError);
}

TEST_CASE("activation values") {
    Tape tp;
    Tensor x = Tensor::row({-1.0, 0.0, 2.0});
    Tensor r = relu(tp, x);
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 2.0);
    CHECK(sigmoid(tp, Tensor::scalar(0.0)).value() == doctest::Approx(0.5));
    Tensor s = softmax_rows(tp, Tensor::row({1.5, 1.5, 1.5, 1.5}));
    for (std::size_t k = 0; k < 4; ++k) CHECK(s[k] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("mean_rows is exactly invariant to row permutations") {
    Rng rng(11);
    Tensor x = random_tensor(rng, 6, 5);
    Tensor perm = Tensor::zeros(6, 5);
    std::vector<std::size_t> order = {3, 0, 5, 1, 4, 2};
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 5; ++j) perm.at(i, j) = x.at(order[i], j);
    Tape tp;
    Tensor m1 = mean_rows(tp, x), m2 = mean_rows(tp, perm);
    for (std::size_t k = 0; k < m1.size(); ++k) CHECK(m1[k] == m2[k]);
}

TEST_CASE("structure ops round-trip") {
    Rng rng(3);
    Tape tp;
    Tensor d = random_tensor(rng, 4, 1);
    Tensor l = random_tensor(rng, 6, 1);
    Tensor m = sym_matrix(tp, d, l);
    Tensor d2 = diag_part(tp, m), l2 = tril_part(tp, m);
    for (std::size_t k = 0; k < 4; ++k) CHECK(d2[k] == d[k]);
    for (std::size_t k = 0; k < 6; ++k) CHECK(l2[k] == l[k]);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(m.at(i, j) == m.at(j, i));
}

TEST_CASE("branch_matrix assembles nodal form") {
    Tape tp;
    Tensor d = Tensor::col({1.0, 2.0, 3.0});
    Tensor l = Tensor::col({10.0, 20.0, 30.0});  // (1,0), (2,0), (2,1)
    Tensor y = branch_matrix(tp, d, l);
    CHECK(y.at(1, 0) == -10.0);
    CHECK(y.at(2, 0) == -20.0);
    CHECK(y.at(2, 1) == -30.0);
    CHECK(y.at(0, 0) == doctest::Approx(1.0 + 10.0 + 20.0));
    CHECK(y.at(1, 1) == doctest::Approx(2.0 + 10.0 + 30.0));
    CHECK(y.at(2, 2) == doctest::Approx(3.0 + 20.0 + 30.0));
}

TEST_CASE("ste_identity passes the upstream gradient through unchanged") {
    Tape tp;
    Tensor p = tp.var(Tensor::row({0.2, 0.8, 0.5}));
    Tensor hard = Tensor::row({0.0, 1.0, 1.0});
    Tensor b = ste_identity(tp, p, hard);
    for (std::size_t k = 0; k < 3; ++k) CHECK(b[k] == hard[k]);
    Tensor c = Tensor::row({3.0, -2.0, 5.0});
    Tensor loss = sum_all(tp, mul(tp, b, c));
    auto g = tp.backward(loss);
    for (std::size_t k = 0; k < 3; ++k) CHECK(g.at(p)[k] == c[k]);
}

TEST_CASE("reverse-mode gradients match central finite differences across primitives") {
    // 20 seeds per the engine's gradient contract
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        {
            Tensor a = random_tensor(rng, 5, 4), b = random_tensor(rng, 4, 3);
            auto res = gradcheck(
                [](Tape& tp, std::vector<Tensor>& in) {
                    return sum_all(tp, matmul(tp, in[0], in[1]));
                },
                {a, b}, 1e-5);
            CHECK_MESSAGE(res.ok, "matmul seed ", seed, " err ", res.max_abs);
        }
        {
            Tensor x = random_away_from_zero(rng, 3, 4);
            auto res = gradcheck(
                [](Tape& tp, std::vector<Tensor>& in) {
                    Tensor h = relu(tp, in[0]);
                    h = sigmoid(tp, h);
                    h = abs_val(tp, sub(tp, h, Tensor::full(3, 4, 0.25)));
                    return sum_all(tp, h);
                },
                {x});
            CHECK_MESSAGE(res.ok, "elementwise chain seed ", seed, " err ", res.max_abs);
        }
        {
            Tensor x = random_tensor(rng, 2, 6);
            auto res = gradcheck(
                [](Tape& tp, std::vector<Tensor>& in) {
                    Tensor s = softmax_rows(tp, in[0]);
                    return sum_all(tp, mul(tp, s, s));
                },
                {x});
            CHECK_MESSAGE(res.ok, "softmax seed ", seed, " err ", res.max_abs);
        }
        {
            Tensor x = random_tensor(rng, 4, 3);
            Tensor b = random_tensor(rng, 1, 3);
            auto res = gradcheck(
                [](Tape& tp, std::vector<Tensor>& in) {
                    Tensor h = add_rowvec(tp, in[0], in[1]);
                    Tensor m = mean_rows(tp, h);
                    Tensor r = row_sum(tp, transpose(tp, h));
                    return add(tp, sum_all(tp, mul(tp, m, m)), sum_all(tp, mul(tp, r, r)));
                },
                {x, b});
            CHECK_MESSAGE(res.ok, "reductions seed ", seed, " err ", res.max_abs);
        }
        {
            Tensor x = random_tensor(rng, 3, 3, 0.2, 1.5);
            auto res = gradcheck(
                [](Tape& tp, std::vector<Tensor>& in) {
                    Tensor h = recip(tp, in[0]);
                    h = sqrt_el(tp, h);
                    return sum_all(tp, h);
                },
                {x});
            CHECK_MESSAGE(res.ok, "recip/sqrt seed ", seed, " err ", res.max_abs);
        }
        {
            Tensor d = random_tensor(rng, 4, 1), l = random_tensor(rng, 6, 1);
            auto res = gradcheck(
                [](Tape& tp, std::vector<Tensor>& in) {
                    Tensor s = sym_matrix(tp, in[0], in[1]);
                    Tensor y = branch_matrix(tp, in[0], in[1]);
                    Tensor mixed = mul(tp, s, y);
                    return sum_all(tp, mul(tp, mixed, mixed));
                },
                {d, l});
            CHECK_MESSAGE(res.ok, "assembly seed ", seed, " err ", res.max_abs);
        }
        {
            Tensor a = random_tensor(rng, 3, 5), b = random_tensor(rng, 3, 2);
            auto res = gradcheck(
                [](Tape& tp, std::vector<Tensor>& in) {
                    Tensor c = concat_cols(tp, in[0], in[1]);
                    Tensor s = slice(tp, c, 1, 3, 2, 6);
                    Tensor g = gather_rows(tp, c, {2, 0, 2});
                    return add(tp, sum_all(tp, mul(tp, s, s)), sum_all(tp, mul(tp, g, g)));
                },
                {a, b});
            CHECK_MESSAGE(res.ok, "concat/slice/gather seed ", seed, " err ", res.max_abs);
        }
        {
            Tensor a = testutil::random_spd(rng, 4);
            auto res = gradcheck(
                [](Tape& tp, std::vector<Tensor>& in) { return logdet_spd(tp, in[0]); }, {a});
            CHECK_MESSAGE(res.ok, "logdet_spd seed ", seed, " err ", res.max_abs);
        }
        {
            Tensor a = testutil::random_spd(rng, 4);  // well away from singular
            auto res = gradcheck(
                [](Tape& tp, std::vector<Tensor>& in) {
                    Tensor inv = mat_inverse(tp, in[0]);
                    return sum_all(tp, mul(tp, inv, inv));
                },
                {a}, 1e-4, 1e-7, 1e-5);
            CHECK_MESSAGE(res.ok, "mat_inverse seed ", seed, " err ", res.max_abs);
        }
    }
}

TEST_CASE("mat_inverse: identity, contract checks and singularity guard") {
    Tape tp;
    Tensor inv = mat_inverse(tp, Tensor::identity(3));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(inv.at(i, j) == (i == j ? 1.0 : 0.0));
    Tensor sing = Tensor::matrix(2, 2, {1.0, 2.0, 2.0, 4.0});
    CHECK_THROWS_AS(mat_inverse(tp, sing), SingularityError);
    Tensor nearsing = Tensor::matrix(2, 2, {1.0, 1.0, 1.0, 1.0 + 1e-14});
    CHECK_THROWS_AS(mat_inverse(tp, nearsing), SingularityError);
}

TEST_CASE("logdet_spd rejects non-PD input") {
    Tape tp;
    Tensor a = Tensor::matrix(2, 2, {1.0, 0.0, 0.0, -2.0});
    CHECK_THROWS_AS(logdet_spd(tp, a), DomainError);
}

TEST_CASE("forward and gradients are bit-identical across repeated runs") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor a = random_tensor(rng, 4, 4), b = random_tensor(rng, 4, 4);
        Tape tp;
        Tensor ta = tp.var(a), tb = tp.var(b);
        Tensor h = relu(tp, matmul(tp, ta, tb));
        Tensor loss = sum_all(tp, mul(tp, h, h));
        auto g = tp.backward(loss);
        std::vector<double> out = {loss.value()};
        for (double v : g.at(ta).data()) out.push_back(v);
        for (double v : g.at(tb).data()) out.push_back(v);
        return out;
    };
    auto r1 = run(42), r2 = run(42);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t k = 0; k < r1.size(); ++k) CHECK(r1[k] == r2[k]);
}
