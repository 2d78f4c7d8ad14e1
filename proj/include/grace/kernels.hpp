#pragma once

#include <cstddef>
#include <vector>

namespace grace::kernels {

// Row-major dense matrix. All training math in the project runs through the
// kernels below so the serial and OpenMP paths stay interchangeable.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool operator==(const Matrix& other) const = default;
};

enum class Backend { Serial, OpenMP };

// Process-wide backend switch. Defaults to OpenMP when compiled in.
Backend backend();
void set_backend(Backend b);

// Parallelism is always over independent output elements, so both backends
// produce bitwise-identical results; the serial path is the reference the
// tests compare against.
namespace serial {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);      // out = a * b
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);   // out = a^T * b
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);   // out = a * b^T
void add_row_bias(Matrix& m, const std::vector<double>& bias);
void col_sums(const Matrix& m, std::vector<double>& out);
// Squared Euclidean distance of every row of `points` to every row of
// `centroids`; out is points.rows x centroids.rows.
void pairwise_sqdist(const Matrix& points, const Matrix& centroids, Matrix& out);
}  // namespace serial

namespace omp {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void add_row_bias(Matrix& m, const std::vector<double>& bias);
void col_sums(const Matrix& m, std::vector<double>& out);
void pairwise_sqdist(const Matrix& points, const Matrix& centroids, Matrix& out);
}  // namespace omp

// Dispatching entry points used by the rest of the project.
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void add_row_bias(Matrix& m, const std::vector<double>& bias);
void col_sums(const Matrix& m, std::vector<double>& out);
void pairwise_sqdist(const Matrix& points, const Matrix& centroids, Matrix& out);

}  // namespace grace::kernels
