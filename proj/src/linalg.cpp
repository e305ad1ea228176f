#include "afem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace afem {

SparseMatrix::SparseMatrix(int n, std::vector<Triplet> triplets)
    : n_(n)
{
    if (n < 0)
        throw std::invalid_argument("sparse matrix: negative dimension");
    for (const auto& t : triplets)
        if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
            throw std::out_of_range("sparse matrix: triplet index out of range");

    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    col_.reserve(triplets.size());
    values_.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size();) {
        const int r = triplets[k].row, c = triplets[k].col;
        double sum = 0.0;
        for (; k < triplets.size() && triplets[k].row == r && triplets[k].col == c; ++k)
            sum += triplets[k].value;
        col_.push_back(c);
        values_.push_back(sum);
        ++row_ptr_[static_cast<std::size_t>(r) + 1];
    }
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
}

double SparseMatrix::at(int i, int j) const
{
    const auto begin = col_.begin() + row_ptr_[static_cast<std::size_t>(i)];
    const auto end = col_.begin() + row_ptr_[static_cast<std::size_t>(i) + 1];
    const auto it = std::lower_bound(begin, end, j);
    return it != end && *it == j ? values_[static_cast<std::size_t>(it - col_.begin())] : 0.0;
}

std::vector<double> SparseMatrix::diagonal() const
{
    std::vector<double> d(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i)
        d[static_cast<std::size_t>(i)] = at(i, i);
    return d;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
    if (x.size() != static_cast<std::size_t>(n_) || y.size() != static_cast<std::size_t>(n_))
        throw std::invalid_argument("spmv: dimension mismatch");
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k)
            s += values_[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col_[static_cast<std::size_t>(k)])];
        y[static_cast<std::size_t>(i)] = s;
    }
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x)
{
    std::vector<double> y(static_cast<std::size_t>(a.size()));
    a.multiply(x, y);
    return y;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

CgReport cg_solve(const SparseMatrix& a, std::span<const double> rhs, std::span<double> x,
                  const CgOptions& options, const std::function<void(int, std::span<const double>)>& on_iterate)
{
    const auto n = static_cast<std::size_t>(a.size());
    if (rhs.size() != n || x.size() != n)
        throw std::invalid_argument("cg: dimension mismatch");
    if (!(options.tol > 0.0))
        throw std::invalid_argument("cg: tolerance must be positive");

    CgReport report;
    const double bnorm = norm2(rhs);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        report.converged = true;
        return report;
    }

    std::vector<double> inv_diag(n, 1.0);
    if (options.jacobi) {
        const auto d = a.diagonal();
        for (std::size_t i = 0; i < n; ++i)
            inv_diag[i] = d[i] > 0.0 ? 1.0 / d[i] : 1.0;
    }

    std::vector<double> r(n), z(n), p(n), q(n);
    a.multiply(x, q);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = rhs[i] - q[i];
    report.relative_residual = norm2(r) / bnorm;
    if (report.relative_residual <= options.tol) {
        report.converged = true;
        return report;
    }
    for (std::size_t i = 0; i < n; ++i)
        z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);

    for (int it = 1; it <= options.max_iter; ++it) {
        a.multiply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0))  // non-positive curvature: operator is not SPD
            break;
        const double step = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += step * p[i];
            r[i] -= step * q[i];
        }
        report.iterations = it;
        report.relative_residual = norm2(r) / bnorm;
        if (on_iterate)
            on_iterate(it, x);
        if (report.relative_residual <= options.tol) {
            report.converged = true;
            break;
        }
        for (std::size_t i = 0; i < n; ++i)
            z[i] = inv_diag[i] * r[i];
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i)
            p[i] = z[i] + beta * p[i];
    }
    return report;
}

std::pair<std::vector<double>, CgReport> cg_solve(const SparseMatrix& a, std::span<const double> rhs,
                                                  double tol, int max_iter)
{
    std::vector<double> x(static_cast<std::size_t>(a.size()), 0.0);
    CgOptions options;
    options.tol = tol;
    options.max_iter = max_iter;
    const auto report = cg_solve(a, rhs, x, options);
    return {std::move(x), report};
}

} // namespace afem
