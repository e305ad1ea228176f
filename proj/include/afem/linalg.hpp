#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace afem {

struct Triplet
{
    int row;
    int col;
    double value;
};

/// Compressed sparse row matrix. Duplicate triplets are summed on construction.
class SparseMatrix
{
public:
    SparseMatrix() = default;
    SparseMatrix(int n, std::vector<Triplet> triplets);

    int size() const { return n_; }
    std::size_t nonzeros() const { return values_.size(); }

    std::span<const int> row_ptr() const { return row_ptr_; }
    std::span<const int> col_index() const { return col_; }
    std::span<const double> values() const { return values_; }

    double at(int i, int j) const;
    std::vector<double> diagonal() const;

    /// y = A x. Throws std::invalid_argument on size mismatch.
    void multiply(std::span<const double> x, std::span<double> y) const;

private:
    int n_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_;
    std::vector<double> values_;
};

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x);

struct CgReport
{
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

struct CgOptions
{
    double tol = 1e-10;  // relative residual ||b - Ax|| / ||b||
    int max_iter = 10000;
    bool jacobi = true;
};

/// Preconditioned conjugate gradients. `x` holds the initial guess on entry.
/// Non-convergence (including breakdown on indefinite operators) is reported, not thrown.
CgReport cg_solve(const SparseMatrix& a, std::span<const double> rhs, std::span<double> x,
                  const CgOptions& options = {},
                  const std::function<void(int, std::span<const double>)>& on_iterate = {});

std::pair<std::vector<double>, CgReport> cg_solve(const SparseMatrix& a, std::span<const double> rhs,
                                                  double tol = 1e-10, int max_iter = 10000);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

} // namespace afem
