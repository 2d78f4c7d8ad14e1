#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "grace/kernels.hpp"
#include "grace/rng.hpp"

using grace::kernels::Matrix;
namespace k = grace::kernels;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, grace::Rng& rng) {
    Matrix m(rows, cols);
    for (auto& v : m.data) v = rng.uniform(-2.0, 2.0);
    return m;
}

// Naive triple-loop oracle, deliberately independent of the kernel code.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < a.cols; ++l) acc += a(i, l) * b(l, j);
            out(i, j) = acc;
        }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
    return t;
}

void check_close(const Matrix& got, const Matrix& want) {
    REQUIRE(got.rows == want.rows);
    REQUIRE(got.cols == want.cols);
    for (std::size_t i = 0; i < got.data.size(); ++i)
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
}

}  // namespace

TEST_CASE("matmul matches naive oracle") {
    grace::Rng rng(11);
    for (auto [r, inner, c] : {std::tuple{1ul, 1ul, 1ul}, {3ul, 5ul, 2ul}, {17ul, 9ul, 23ul}}) {
        Matrix a = random_matrix(r, inner, rng);
        Matrix b = random_matrix(inner, c, rng);
        Matrix out;
        k::matmul(a, b, out);
        check_close(out, naive_matmul(a, b));
    }
}

TEST_CASE("matmul_tn and matmul_nt match explicit transpose") {
    grace::Rng rng(12);
    Matrix a = random_matrix(7, 13, rng);
    Matrix b = random_matrix(7, 5, rng);
    Matrix out;
    k::matmul_tn(a, b, out);
    check_close(out, naive_matmul(transpose(a), b));

    Matrix c = random_matrix(4, 13, rng);
    k::matmul_nt(a, c, out);
    check_close(out, naive_matmul(a, transpose(c)));
}

TEST_CASE("add_row_bias and col_sums") {
    Matrix m(2, 3);
    m.data = {1, 2, 3, 4, 5, 6};
    k::add_row_bias(m, {10, 20, 30});
    CHECK(m.data == std::vector<double>{11, 22, 33, 14, 25, 36});

    std::vector<double> sums;
    k::col_sums(m, sums);
    CHECK(sums == std::vector<double>{25, 47, 69});
}

TEST_CASE("pairwise_sqdist matches per-pair expansion") {
    grace::Rng rng(13);
    Matrix points = random_matrix(9, 4, rng);
    Matrix centroids = random_matrix(3, 4, rng);
    Matrix out;
    k::pairwise_sqdist(points, centroids, out);
    REQUIRE(out.rows == 9);
    REQUIRE(out.cols == 3);
    for (std::size_t i = 0; i < points.rows; ++i)
        for (std::size_t j = 0; j < centroids.rows; ++j) {
            double d = 0.0;
            for (std::size_t f = 0; f < points.cols; ++f) {
                const double diff = points(i, f) - centroids(j, f);
                d += diff * diff;
            }
            CHECK(out(i, j) == doctest::Approx(d).epsilon(1e-12));
        }
}

TEST_CASE("serial and OpenMP backends are bitwise identical") {
    grace::Rng rng(14);
    Matrix a = random_matrix(33, 47, rng);
    Matrix b = random_matrix(47, 29, rng);

    Matrix s, p;
    k::serial::matmul(a, b, s);
    k::omp::matmul(a, b, p);
    CHECK(s == p);

    Matrix a2 = random_matrix(47, 33, rng);
    k::serial::matmul_tn(a2, b, s);
    k::omp::matmul_tn(a2, b, p);
    CHECK(s == p);

    Matrix b2 = random_matrix(29, 47, rng);
    k::serial::matmul_nt(a, b2, s);
    k::omp::matmul_nt(a, b2, p);
    CHECK(s == p);

    Matrix pts = random_matrix(64, 6, rng);
    Matrix cen = random_matrix(5, 6, rng);
    k::serial::pairwise_sqdist(pts, cen, s);
    k::omp::pairwise_sqdist(pts, cen, p);
    CHECK(s == p);

    std::vector<double> cs, cp;
    k::serial::col_sums(a, cs);
    k::omp::col_sums(a, cp);
    CHECK(cs == cp);

    Matrix ms = a, mp = a;
    std::vector<double> bias(a.cols, 0.25);
    k::serial::add_row_bias(ms, bias);
    k::omp::add_row_bias(mp, bias);
    CHECK(ms == mp);
}

TEST_CASE("backend switch dispatches without changing results") {
    grace::Rng rng(15);
    Matrix a = random_matrix(8, 8, rng);
    Matrix b = random_matrix(8, 8, rng);
    const auto before = k::backend();

    Matrix r1, r2;
    k::set_backend(k::Backend::Serial);
    k::matmul(a, b, r1);
    k::set_backend(k::Backend::OpenMP);
    k::matmul(a, b, r2);
    CHECK(r1 == r2);

    k::set_backend(before);
}
