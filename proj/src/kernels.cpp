#include "grace/kernels.hpp"

#include <cassert>
#include <cstdint>

namespace grace::kernels {

namespace {

Backend g_backend =
#ifdef GRACE_HAVE_OPENMP
    Backend::OpenMP;
#else
    Backend::Serial;
#endif

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    const std::size_t k_dim = a.cols;
    const std::size_t n = b.cols;
    double* out_row = &out.data[i * n];
    const double* a_row = &a.data[i * k_dim];
    for (std::size_t j = 0; j < n; ++j) out_row[j] = 0.0;
    for (std::size_t k = 0; k < k_dim; ++k) {
        const double aik = a_row[k];
        const double* b_row = &b.data[k * n];
        for (std::size_t j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
    }
}

// Row i of out = a^T b, i.e. column i of a dotted against b. The k loop runs
// in a fixed order so the result does not depend on the thread count.
inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    const std::size_t n = b.cols;
    const std::size_t k_dim = a.rows;
    double* out_row = &out.data[i * n];
    for (std::size_t j = 0; j < n; ++j) out_row[j] = 0.0;
    for (std::size_t k = 0; k < k_dim; ++k) {
        const double aki = a.data[k * a.cols + i];
        const double* b_row = &b.data[k * n];
        for (std::size_t j = 0; j < n; ++j) out_row[j] += aki * b_row[j];
    }
}

inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    const std::size_t k_dim = a.cols;
    const double* a_row = &a.data[i * k_dim];
    double* out_row = &out.data[i * b.rows];
    for (std::size_t j = 0; j < b.rows; ++j) {
        const double* b_row = &b.data[j * k_dim];
        double acc = 0.0;
        for (std::size_t k = 0; k < k_dim; ++k) acc += a_row[k] * b_row[k];
        out_row[j] = acc;
    }
}

inline void sqdist_row(const Matrix& points, const Matrix& centroids, Matrix& out, std::size_t i) {
    const std::size_t d = points.cols;
    const double* p = &points.data[i * d];
    for (std::size_t c = 0; c < centroids.rows; ++c) {
        const double* q = &centroids.data[c * d];
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = p[k] - q[k];
            acc += diff * diff;
        }
        out(i, c) = acc;
    }
}

}  // namespace

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols == b.rows);
    out = Matrix(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.rows == b.rows);
    out = Matrix(a.cols, b.cols);
    for (std::size_t i = 0; i < a.cols; ++i) matmul_tn_row(a, b, out, i);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols == b.cols);
    out = Matrix(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) matmul_nt_row(a, b, out, i);
}

void add_row_bias(Matrix& m, const std::vector<double>& bias) {
    assert(bias.size() == m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) += bias[j];
}

void col_sums(const Matrix& m, std::vector<double>& out) {
    out.assign(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out[j] += m(i, j);
}

void pairwise_sqdist(const Matrix& points, const Matrix& centroids, Matrix& out) {
    assert(points.cols == centroids.cols);
    out = Matrix(points.rows, centroids.rows);
    for (std::size_t i = 0; i < points.rows; ++i) sqdist_row(points, centroids, out, i);
}

}  // namespace serial

namespace omp {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols == b.rows);
    out = Matrix(a.rows, b.cols);
    const std::int64_t rows = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) matmul_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.rows == b.rows);
    out = Matrix(a.cols, b.cols);
    const std::int64_t rows = static_cast<std::int64_t>(a.cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) matmul_tn_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols == b.cols);
    out = Matrix(a.rows, b.rows);
    const std::int64_t rows = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) matmul_nt_row(a, b, out, static_cast<std::size_t>(i));
}

void add_row_bias(Matrix& m, const std::vector<double>& bias) {
    assert(bias.size() == m.cols);
    const std::int64_t rows = static_cast<std::int64_t>(m.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m(static_cast<std::size_t>(i), j) += bias[j];
}

void col_sums(const Matrix& m, std::vector<double>& out) {
    out.assign(m.cols, 0.0);
    const std::int64_t cols = static_cast<std::int64_t>(m.cols);
    // Parallel over columns: each output element keeps its serial sum order.
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < cols; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) acc += m(i, static_cast<std::size_t>(j));
        out[static_cast<std::size_t>(j)] = acc;
    }
}

void pairwise_sqdist(const Matrix& points, const Matrix& centroids, Matrix& out) {
    assert(points.cols == centroids.cols);
    out = Matrix(points.rows, centroids.rows);
    const std::int64_t rows = static_cast<std::int64_t>(points.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) sqdist_row(points, centroids, out, static_cast<std::size_t>(i));
}

}  // namespace omp

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    g_backend == Backend::OpenMP ? omp::matmul(a, b, out) : serial::matmul(a, b, out);
}
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    g_backend == Backend::OpenMP ? omp::matmul_tn(a, b, out) : serial::matmul_tn(a, b, out);
}
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    g_backend == Backend::OpenMP ? omp::matmul_nt(a, b, out) : serial::matmul_nt(a, b, out);
}
void add_row_bias(Matrix& m, const std::vector<double>& bias) {
    g_backend == Backend::OpenMP ? omp::add_row_bias(m, bias) : serial::add_row_bias(m, bias);
}
void col_sums(const Matrix& m, std::vector<double>& out) {
    g_backend == Backend::OpenMP ? omp::col_sums(m, out) : serial::col_sums(m, out);
}
void pairwise_sqdist(const Matrix& points, const Matrix& centroids, Matrix& out) {
    g_backend == Backend::OpenMP ? omp::pairwise_sqdist(points, centroids, out)
                                 : serial::pairwise_sqdist(points, centroids, out);
}

}  // namespace grace::kernels
