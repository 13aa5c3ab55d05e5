#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <scaledreg/errors.hpp>

namespace scaledreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Sorted list of 0-based column indices.
using IndexSet = std::vector<Index>;

/**
 * Design matrix and response.
 *
 * Immutable after construction. When `standardized` is set every column
 * satisfies |x_j|_2^2 = n; `column_norms` keeps the norms the columns had
 * before standardization (all sqrt(n) for data that was never rescaled).
 */
class Dataset {
public:
    Dataset() = default;

    /// Wraps (x, y) as given. Set `standardize` to rescale columns to |x_j|^2 = n.
    Dataset(Matrix x, Vector y, bool standardize = true);

    const Matrix& x() const noexcept { return x_; }
    const Vector& y() const noexcept { return y_; }
    Index n() const noexcept { return x_.rows(); }
    Index p() const noexcept { return x_.cols(); }
    bool standardized() const noexcept { return standardized_; }
    const Vector& column_norms() const noexcept { return column_norms_; }

    /// |x_j|^2 / n for every column (all ones when standardized).
    const Vector& column_scale() const noexcept { return column_scale_; }

    /// Same design, different response.
    Dataset with_response(Vector y) const;

    /// Rows selected by `rows`; columns are NOT restandardized.
    Dataset subset_rows(const std::vector<Index>& rows) const;

private:
    Matrix x_;
    Vector y_;
    bool standardized_ = false;
    Vector column_norms_;
    Vector column_scale_;
};

/// True regression coefficients and noise level of a simulated model.
struct TruthSpec {
    Vector beta_star;
    double sigma = 1.0;
};

/**
 * Rescale every column to |x_j|_2^2 = n.
 *
 * Returns the rescaled matrix and the original column norms. Throws
 * ZeroColumn for a column of zero norm.
 */
inline std::pair<Matrix, Vector> standardize_columns(const Matrix& x)
{
    const double root_n = std::sqrt(static_cast<double>(x.rows()));
    Matrix out(x.rows(), x.cols());
    Vector norms(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        const double nrm = x.col(j).norm();
        if (!(nrm > 0.0)) throw ZeroColumn(static_cast<std::size_t>(j));
        norms(j) = nrm;
        out.col(j) = x.col(j) * (root_n / nrm);
    }
    return {std::move(out), std::move(norms)};
}

/// Centre y and every column of x (opt-in intercept handling).
inline void center_in_place(Matrix& x, Vector& y)
{
    y.array() -= y.mean();
    for (Index j = 0; j < x.cols(); ++j) x.col(j).array() -= x.col(j).mean();
}

inline Dataset::Dataset(Matrix x, Vector y, bool standardize)
{
    if (x.rows() < 1 || x.cols() < 1)
        throw InvalidArgument("dataset needs n >= 1 and p >= 1");
    if (y.size() != x.rows())
        throw DimensionMismatch("y has length " + std::to_string(y.size()) +
                                " but x has " + std::to_string(x.rows()) +
                                " rows");
    if (!x.allFinite() || !y.allFinite())
        throw InvalidArgument("dataset contains NaN or Inf");
    if (standardize) {
        auto [xs, norms] = standardize_columns(x);
        x_ = std::move(xs);
        column_norms_ = std::move(norms);
        standardized_ = true;
    } else {
        column_norms_ = x.colwise().norm().transpose();
        x_ = std::move(x);
        const double n = static_cast<double>(x_.rows());
        standardized_ =
            (column_norms_.array().square() - n).abs().maxCoeff() <= 1e-10 * n;
    }
    y_ = std::move(y);
    const double n = static_cast<double>(x_.rows());
    column_scale_ = x_.colwise().squaredNorm().transpose() / n;
}

inline Dataset Dataset::with_response(Vector y) const
{
    if (y.size() != n())
        throw DimensionMismatch("response length does not match design rows");
    Dataset out = *this;
    out.y_ = std::move(y);
    return out;
}

inline Dataset Dataset::subset_rows(const std::vector<Index>& rows) const
{
    Matrix xs(static_cast<Index>(rows.size()), p());
    Vector ys(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        xs.row(static_cast<Index>(i)) = x_.row(rows[i]);
        ys(static_cast<Index>(i)) = y_(rows[i]);
    }
    return Dataset(std::move(xs), std::move(ys), false);
}

// ---------------------------------------------------------------------------
// small helpers shared by the modules

/// Indices of the nonzero entries of v.
inline IndexSet support_of(const Vector& v)
{
    IndexSet s;
    for (Index j = 0; j < v.size(); ++j)
        if (v(j) != 0.0) s.push_back(j);
    return s;
}

/// Complement of a sorted index set within {0, ..., p-1}.
inline IndexSet complement(const IndexSet& s, Index p)
{
    IndexSet out;
    out.reserve(static_cast<std::size_t>(p) - s.size());
    std::size_t k = 0;
    for (Index j = 0; j < p; ++j) {
        if (k < s.size() && s[k] == j) {
            ++k;
            continue;
        }
        out.push_back(j);
    }
    return out;
}

inline bool is_subset(const IndexSet& a, const IndexSet& b)
{
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline IndexSet set_difference(const IndexSet& a, const IndexSet& b)
{
    IndexSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
    return out;
}

inline IndexSet set_union(const IndexSet& a, const IndexSet& b)
{
    IndexSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                   std::back_inserter(out));
    return out;
}

/// Sub-vector v_S.
inline Vector gather(const Vector& v, const IndexSet& s)
{
    Vector out(static_cast<Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) out(static_cast<Index>(k)) = v(s[k]);
    return out;
}

/// Principal sub-matrix G_{A,B}.
inline Matrix gather(const Matrix& g, const IndexSet& rows, const IndexSet& cols)
{
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b)
            out(static_cast<Index>(a), static_cast<Index>(b)) = g(rows[a], cols[b]);
    return out;
}

/// Columns X_S.
inline Matrix columns(const Matrix& x, const IndexSet& s)
{
    Matrix out(x.rows(), static_cast<Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) out.col(static_cast<Index>(k)) = x.col(s[k]);
    return out;
}

/// X'X / n.
inline Matrix gram(const Dataset& data)
{
    Matrix g(data.p(), data.p());
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(data.x().transpose());
    g.triangularView<Eigen::Upper>() = g.transpose();
    return g / static_cast<double>(data.n());
}

/// Calls f(const IndexSet&) for every k-subset of `pool`, in lexicographic order.
template <class F>
void for_each_subset(const IndexSet& pool, std::size_t k, F&& f)
{
    const std::size_t m = pool.size();
    if (k > m) return;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    IndexSet cur(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i) cur[i] = pool[idx[i]];
        f(static_cast<const IndexSet&>(cur));
        if (k == 0) return;
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == m - k + (i - 1)) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

/// Binomial coefficient as a double (saturates gracefully for large inputs).
inline double binomial(std::size_t n, std::size_t k)
{
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i)
        r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return std::round(r);
}

} // namespace scaledreg
