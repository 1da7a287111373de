#include <doctest.h>

#include "bdris/architecture.hpp"
#include "bdris/errors.hpp"

using namespace bdris;

TEST_CASE("circuit complexity of the reference topologies") {
    CHECK(make_baseline(BaselineKind::Single, 64).circuit_complexity() == 64);
    CHECK(make_baseline(BaselineKind::Tridiagonal, 64).circuit_complexity() == 127);
    CHECK(make_baseline(BaselineKind::Arrowhead, 64).circuit_complexity() == 127);
    CHECK(make_baseline(BaselineKind::Band, 64, 15).circuit_complexity() == 904);
    CHECK(make_baseline(BaselineKind::Stem, 64, 15).circuit_complexity() == 904);
    CHECK(make_baseline(BaselineKind::Fully, 64).circuit_complexity() == 2080);
    CHECK(make_baseline(BaselineKind::Arrowhead, 4).circuit_complexity() == 7);
}

TEST_CASE("baseline structural properties") {
    for (std::size_t n : {4u, 8u, 16u}) {
        auto fully = make_baseline(BaselineKind::Fully, n);
        auto single = make_baseline(BaselineKind::Single, n);
        CHECK(fully.circuit_complexity() - single.circuit_complexity() == n * (n - 1) / 2);

        // width-1 band is the tridiagonal; wider bands nest entrywise
        CHECK(make_baseline(BaselineKind::Band, n, 1) == make_baseline(BaselineKind::Tridiagonal, n));
        CHECK(make_baseline(BaselineKind::Stem, n, 1) == make_baseline(BaselineKind::Arrowhead, n));
        auto band3 = make_baseline(BaselineKind::Band, n, 3);
        auto band5 = make_baseline(BaselineKind::Band, n, 5);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (band3.edge(i, j)) CHECK(band5.edge(i, j));
    }
}

TEST_CASE("stem and band reproduce L(2N-2L+1) for odd widths") {
    const std::size_t n = 64;
    for (std::size_t l = 1; l <= 8; ++l) {
        std::size_t q = 2 * l - 1;
        std::size_t expected = l * (2 * n - 2 * l + 1);
        CHECK(make_baseline(BaselineKind::Band, n, q).circuit_complexity() == expected);
        CHECK(make_baseline(BaselineKind::Stem, n, q).circuit_complexity() == expected);
    }
}

TEST_CASE("baselines satisfy the architecture invariants") {
    auto check_valid = [](const Architecture& a) {
        auto t = a.to_tensor();
        for (std::size_t i = 0; i < a.n(); ++i) {
            CHECK(t.at(i, i) == 1.0);
            for (std::size_t j = 0; j < a.n(); ++j) {
                CHECK((t.at(i, j) == 0.0 || t.at(i, j) == 1.0));
                CHECK(t.at(i, j) == t.at(j, i));
            }
        }
    };
    for (auto kind : {BaselineKind::Single, BaselineKind::Tridiagonal, BaselineKind::Arrowhead,
                      BaselineKind::Fully}) {
        check_valid(make_baseline(kind, 9));
    }
    check_valid(make_baseline(BaselineKind::Band, 9, 5));
    check_valid(make_baseline(BaselineKind::Stem, 9, 5));
}

TEST_CASE("invalid band/stem widths are rejected") {
    CHECK_THROWS_AS(make_baseline(BaselineKind::Band, 8, 2), ConfigError);
    CHECK_THROWS_AS(make_baseline(BaselineKind::Band, 8, 0), ConfigError);
    CHECK_THROWS_AS(make_baseline(BaselineKind::Stem, 8, 9), ConfigError);
}

TEST_CASE("degree matrix") {
    CHECK(degree_matrix(make_baseline(BaselineKind::Single, 5)).at(2, 2) == 1.0);
    auto d3 = degree_matrix(make_baseline(BaselineKind::Fully, 3));
    for (std::size_t i = 0; i < 3; ++i) CHECK(d3.at(i, i) == 3.0);
    auto dt = degree_matrix(make_baseline(BaselineKind::Tridiagonal, 4));
    CHECK(dt.at(0, 0) == 2.0);
    CHECK(dt.at(1, 1) == 3.0);
    CHECK(dt.at(2, 2) == 3.0);
    CHECK(dt.at(3, 3) == 2.0);
    CHECK(dt.at(0, 1) == 0.0);
}

TEST_CASE("architecture text round-trip and rejection of malformed input") {
    auto a = make_baseline(BaselineKind::Stem, 10, 3);
    auto b = Architecture::parse(a.serialize());
    CHECK(a == b);
    CHECK_THROWS_AS(Architecture::parse("not-an-arch"), IoError);
    CHECK_THROWS_AS(Architecture::parse("bdris-arch v1\nn 4\n10"), IoError);
    CHECK_THROWS_AS(Architecture::parse("bdris-arch v1\nn 4\n10x011"), IoError);
}
