#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "grace/kernels.hpp"
#include "grace/rng.hpp"

using grace::kernels::Matrix;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, grace::Rng& rng) {
    Matrix m(rows, cols);
    for (auto& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

double time_ms(const std::function<void()>& fn, std::size_t reps) {
    fn();  // warmup
    auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < reps; ++i) fn();
    auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const std::string& name, double serial_ms, double omp_ms, bool identical) {
    std::printf("%-18s serial %9.3f ms   openmp %9.3f ms   speedup %5.2fx   %s\n", name.c_str(),
                serial_ms, omp_ms, serial_ms / omp_ms, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
    grace::Rng rng(42);
    const std::size_t n = 512, reps = 5;
    Matrix a = random_matrix(n, n, rng);
    Matrix b = random_matrix(n, n, rng);
    Matrix out_s(n, n), out_p(n, n);

    report("matmul",
           time_ms([&] { grace::kernels::serial::matmul(a, b, out_s); }, reps),
           time_ms([&] { grace::kernels::omp::matmul(a, b, out_p); }, reps), out_s == out_p);

    report("matmul_tn",
           time_ms([&] { grace::kernels::serial::matmul_tn(a, b, out_s); }, reps),
           time_ms([&] { grace::kernels::omp::matmul_tn(a, b, out_p); }, reps), out_s == out_p);

    report("matmul_nt",
           time_ms([&] { grace::kernels::serial::matmul_nt(a, b, out_s); }, reps),
           time_ms([&] { grace::kernels::omp::matmul_nt(a, b, out_p); }, reps), out_s == out_p);

    Matrix points = random_matrix(20000, 16, rng);
    Matrix centroids = random_matrix(64, 16, rng);
    Matrix d_s(points.rows, centroids.rows), d_p(points.rows, centroids.rows);
    report("pairwise_sqdist",
           time_ms([&] { grace::kernels::serial::pairwise_sqdist(points, centroids, d_s); }, reps),
           time_ms([&] { grace::kernels::omp::pairwise_sqdist(points, centroids, d_p); }, reps),
           d_s == d_p);

    std::vector<double> cs_s, cs_p;
    report("col_sums",
           time_ms([&] { grace::kernels::serial::col_sums(a, cs_s); }, reps * 20),
           time_ms([&] { grace::kernels::omp::col_sums(a, cs_p); }, reps * 20), cs_s == cs_p);

    return 0;
}
