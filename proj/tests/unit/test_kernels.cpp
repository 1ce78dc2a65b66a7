#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "lexiport/error.hpp"
#include "lexiport/kernels.hpp"
#include "lexiport/rng.hpp"

using namespace lexiport;
using namespace lexiport::kernels;

namespace {

Matrix random_rows(Rng& rng, std::size_t n, std::size_t d) {
    Matrix m(n, d);
    for (auto& v : m.data()) v = static_cast<float>(rng.normal());
    return m;
}

bool same(const std::vector<std::vector<Neighbor>>& a, const std::vector<std::vector<Neighbor>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) return false;
        for (std::size_t j = 0; j < a[i].size(); ++j)
            if (a[i][j].index != b[i][j].index || a[i][j].cosine != b[i][j].cosine) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("topk serial and parallel paths agree exactly") {
    Rng rng(1);
    const auto q = random_rows(rng, 300, 12);
    const auto k = random_rows(rng, 500, 12);
    std::vector<std::uint8_t> qskip(300, 0), kskip(500, 0);
    for (std::size_t i = 0; i < 300; i += 7) qskip[i] = 1;
    for (std::size_t i = 0; i < 500; i += 5) kskip[i] = 1;
    const auto a = topk_cosine(q, qskip, k, kskip, 10, Exec::serial);
    const auto b = topk_cosine(q, qskip, k, kskip, 10, Exec::parallel);
    CHECK(same(a, b));
    for (std::size_t i = 0; i < 300; ++i) {
        CHECK(a[i].size() == (qskip[i] ? 0u : 10u));
        for (const auto& n : a[i]) CHECK(kskip[n.index] == 0);
        for (std::size_t j = 1; j < a[i].size(); ++j) CHECK(a[i][j - 1].cosine >= a[i][j].cosine);
    }
}

TEST_CASE("topk matches a full sort") {
    Rng rng(2);
    const auto q = random_rows(rng, 20, 5);
    const auto k = random_rows(rng, 60, 5);
    const auto got = topk_cosine(q, {}, k, {}, 60, Exec::serial);
    for (std::size_t i = 0; i < 20; ++i) {
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t s = 0; s < 60; ++s) {
            double dot = 0, a = 0, b = 0;
            for (std::size_t j = 0; j < 5; ++j) {
                dot += double(q(i, j)) * k(s, j);
                a += double(q(i, j)) * q(i, j);
                b += double(k(s, j)) * k(s, j);
            }
            all.emplace_back(-dot / std::sqrt(a * b), s);
        }
        std::sort(all.begin(), all.end());
        for (std::size_t j = 0; j < 60; ++j) {
            CHECK(got[i][j].index == all[j].second);
            CHECK(got[i][j].cosine == doctest::Approx(-all[j].first).epsilon(1e-12));
        }
    }
}

TEST_CASE("topk edge cases") {
    Matrix keys(3, 2);
    keys(0, 0) = 1;
    keys(1, 1) = 2;
    keys(2, 0) = -3;
    Matrix q(2, 2);
    q(0, 0) = 5;  // parallel to key 0
    q(1, 1) = 0;  // zero query
    const auto r = topk_cosine(q, {}, keys, {}, 3, Exec::serial);
    CHECK(r[0][0].index == 0);
    CHECK(r[0][0].cosine == 1.0);
    CHECK(r[0][1].index == 1);
    CHECK(r[0][1].cosine == 0.0);
    CHECK(r[0][2].cosine == -1.0);
    for (const auto& n : r[1]) CHECK(n.cosine == 0.0);
    CHECK(topk_cosine(q, {}, keys, {}, 10, Exec::serial)[0].size() == 3);
    CHECK_THROWS_AS(topk_cosine(Matrix(1, 3), {}, keys, {}, 1), DimensionError);
    std::vector<std::uint8_t> short_mask(2, 0);
    CHECK_THROWS_AS(topk_cosine(q, {}, keys, short_mask, 1), ContractError);
}

TEST_CASE("row multiplication paths agree and match Eigen") {
    Rng rng(3);
    const auto rows = random_rows(rng, 257, 9);
    Eigen::MatrixXd map(9, 9);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) map(i, j) = rng.normal();
    Matrix a = rows, b = rows;
    right_multiply_rows(a, map, Exec::serial);
    right_multiply_rows(b, map, Exec::parallel);
    CHECK(a == b);
    for (std::size_t i = 0; i < rows.rows(); ++i)
        for (std::size_t j = 0; j < 9; ++j) {
            double expect = 0;
            for (std::size_t k = 0; k < 9; ++k) expect += double(rows(i, k)) * map(k, j);
            CHECK(a(i, j) == doctest::Approx(expect).epsilon(1e-5));
        }
    Matrix wrong(2, 3);
    CHECK_THROWS_AS(right_multiply_rows(wrong, map), DimensionError);
}
