#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include <scaledreg/core.hpp>
#include <scaledreg/penalty.hpp>

namespace scaledreg {

struct SolverOptions {
    double tol = 1e-7;
    int max_sweeps = 200000;  ///< near-interpolation fits can need tens of thousands
};

/// Geometric lambda grid; may be extended below lambda_min_ratio down to `floor_ratio`.
struct GridSpec {
    int n_points = 100;
    double lambda_min_ratio = 1e-3;
    double floor_ratio = 1e-9;

    double step_ratio() const
    {
        return n_points > 1 ? std::pow(lambda_min_ratio, 1.0 / (n_points - 1)) : lambda_min_ratio;
    }
};

struct PathPoint {
    double lambda = 0.0;
    Vector beta;
    double residual_norm = 0.0;
    IndexSet support;
    double kkt_residual = 0.0;
    int sweeps = 0;
};

/// Points in strictly decreasing lambda, starting at lambda_max with beta = 0.
struct Path {
    std::vector<PathPoint> points;
    PenaltySpec penalty;
};

inline double lambda_max(const Dataset& data)
{
    return (data.x().transpose() * data.y()).cwiseAbs().maxCoeff() / static_cast<double>(data.n());
}

/// lambda_max for per-coordinate penalty factors (zero factors are unpenalized).
inline double lambda_max(const Dataset& data, const Vector& factors)
{
    if (factors.size() == 0) return lambda_max(data);
    const Vector g = (data.x().transpose() * data.y()) / static_cast<double>(data.n());
    double m = 0.0;
    for (Index j = 0; j < g.size(); ++j)
        if (factors(j) > 0.0) m = std::max(m, std::fabs(g(j)) / factors(j));
    return m;
}

/// |y - X beta|^2 / (2n) + sum_j lambda^2 rho(|beta_j| / lambda).
inline double objective(const Dataset& data, const Vector& beta, double lambda,
                        const PenaltySpec& penalty)
{
    const double n = static_cast<double>(data.n());
    double pen = 0.0;
    for (Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) pen += penalty_value(penalty, beta(j), lambda);
    return (data.y() - data.x() * beta).squaredNorm() / (2.0 * n) + pen;
}

namespace detail {

inline double kkt_from_gradient(const Vector& g, const Vector& beta, double lambda,
                                const PenaltySpec& penalty, const Vector& factors)
{
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        const double lj = factors.size() ? lambda * factors(j) : lambda;
        double v;
        if (beta(j) != 0.0) {
            const double s = beta(j) > 0.0 ? 1.0 : -1.0;
            const double slope = penalty.is_l1() || lj == 0.0
                                     ? 1.0
                                     : rho_prime(penalty, std::fabs(beta(j)) / lj);
            v = std::fabs(g(j) - lj * s * slope);
        } else {
            v = std::max(0.0, std::fabs(g(j)) - lj);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

} // namespace detail

/**
 * Max violation of the stationarity conditions:
 * |x_j'r/n - lambda sgn(b_j) rho'(|b_j|/lambda)| on the support and
 * (|x_j'r/n| - lambda)_+ off it. Zero iff they hold exactly.
 */
inline double kkt_residual(const Dataset& data, const Vector& beta, double lambda,
                           const PenaltySpec& penalty, const Vector& factors = Vector())
{
    const Vector g = data.x().transpose() * (data.y() - data.x() * beta) /
                     static_cast<double>(data.n());
    return detail::kkt_from_gradient(g, beta, lambda, penalty, factors);
}

/**
 * Cyclic coordinate descent with residual updates and an active-set cycle
 * (full sweep, active sweeps until stable, full verification sweep).
 *
 * Keeps its iterate between calls so consecutive solves warm-start. With
 * per-coordinate factors w_j the penalty on b_j is lambda * w_j * |b_j|
 * (L1 only). Non-unit Gram diagonals are accepted for L1 only.
 */
class CoordinateDescent {
public:
    CoordinateDescent(const Dataset& data, PenaltySpec penalty, Vector factors = Vector())
        : data_(data), penalty_(penalty), factors_(std::move(factors)),
          beta_(Vector::Zero(data.p())), r_(data.y())
    {
        if (factors_.size() != 0) {
            if (factors_.size() != data.p())
                throw DimensionMismatch("penalty factors must have length p");
            if (!penalty_.is_l1())
                throw InvalidArgument("per-coordinate penalty factors require the l1 penalty");
        }
        if (!penalty_.is_l1()) {
            const Vector& d = data.column_scale();
            if ((d.array() - 1.0).abs().maxCoeff() > 1e-8)
                throw InvalidArgument("nonconvex penalties require standardized columns");
        }
    }

    const Vector& beta() const noexcept { return beta_; }

    void set_beta(const Vector& b)
    {
        if (b.size() == 0) {
            beta_.setZero();
            r_ = data_.y();
            return;
        }
        if (b.size() != data_.p()) throw DimensionMismatch("warm start must have length p");
        beta_ = b;
        r_ = data_.y() - data_.x() * beta_;
    }

    PathPoint solve(double lambda, const SolverOptions& opt)
    {
        if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
        if (!(opt.tol > 0.0)) throw InvalidArgument("tol must be positive");
        const Index p = data_.p();
        std::vector<Index> all(static_cast<std::size_t>(p));
        for (Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;

        int sweeps = 0;
        double best_kkt = std::numeric_limits<double>::infinity();
        Vector best = beta_;
        while (sweeps < opt.max_sweeps) {
            double change = sweep(all, lambda);
            ++sweeps;
            if (change <= threshold(opt.tol)) {
                r_ = data_.y() - data_.x() * beta_;
                const double kkt = current_kkt(lambda);
                if (kkt < best_kkt) {
                    best_kkt = kkt;
                    best = beta_;
                }
                if (kkt <= opt.tol) return make_point(lambda, kkt, sweeps);
            }
            std::vector<Index> active;
            for (Index j = 0; j < p; ++j)
                if (beta_(j) != 0.0) active.push_back(j);
            while (!active.empty() && sweeps < opt.max_sweeps) {
                change = sweep(active, lambda);
                ++sweeps;
                if (change <= threshold(opt.tol)) break;
            }
        }
        r_ = data_.y() - data_.x() * beta_;
        const double kkt = current_kkt(lambda);
        if (kkt < best_kkt) {
            best_kkt = kkt;
            best = beta_;
        }
        throw NoConvergence("coordinate descent at lambda=" + std::to_string(lambda) +
                                " did not reach kkt tolerance",
                            sweeps, best_kkt, std::vector<double>(best.data(), best.data() + best.size()));
    }

private:
    double threshold(double tol) const
    {
        return tol * std::max(1.0, beta_.cwiseAbs().maxCoeff());
    }

    double current_kkt(double lambda) const
    {
        const Vector g = data_.x().transpose() * r_ / static_cast<double>(data_.n());
        return detail::kkt_from_gradient(g, beta_, lambda, penalty_, factors_);
    }

    double sweep(const std::vector<Index>& coords, double lambda)
    {
        const double inv_n = 1.0 / static_cast<double>(data_.n());
        const Vector& d = data_.column_scale();
        double change = 0.0;
        for (Index j : coords) {
            const auto xj = data_.x().col(j);
            const double old = beta_(j);
            const double z = xj.dot(r_) * inv_n + d(j) * old;
            const double lj = factors_.size() ? lambda * factors_(j) : lambda;
            double b;
            if (lj == 0.0)
                b = z / d(j);
            else
                b = coordinate_update(penalty_, z, lj, d(j));
            if (b != old) {
                r_.noalias() -= (b - old) * xj;
                beta_(j) = b;
                change = std::max(change, std::fabs(b - old));
            }
        }
        return change;
    }

    PathPoint make_point(double lambda, double kkt, int sweeps) const
    {
        PathPoint pt;
        pt.lambda = lambda;
        pt.beta = beta_;
        pt.residual_norm = r_.norm();
        pt.support = support_of(beta_);
        pt.kkt_residual = kkt;
        pt.sweeps = sweeps;
        return pt;
    }

    const Dataset& data_;
    PenaltySpec penalty_;
    Vector factors_;
    Vector beta_;
    Vector r_;
};

/// Solves the penalized least squares problem at one lambda from `warm_start` (empty = 0).
inline PathPoint solve_fixed_lambda(const Dataset& data, double lambda, const PenaltySpec& penalty,
                                    const Vector& warm_start = Vector(),
                                    double tol = 1e-7, int max_sweeps = 200000)
{
    CoordinateDescent cd(data, penalty);
    cd.set_beta(warm_start);
    return cd.solve(lambda, SolverOptions{tol, max_sweeps});
}

/**
 * Solution path on a geometric grid, computed on demand.
 *
 * Point k sits at lambda_max * r^k with r = grid.step_ratio(); points are
 * solved in order with warm starts. Indices beyond the nominal grid extend
 * it downward until lambda would drop below lambda_max * floor_ratio.
 */
class LazyPath {
public:
    LazyPath(const Dataset& data, PenaltySpec penalty, GridSpec grid = {},
             SolverOptions opt = {}, Vector factors = Vector())
        : data_(data), penalty_(penalty), grid_(grid), opt_(opt), factors_(factors),
          solver_(data, penalty, factors)
    {
        if (grid_.n_points < 1) throw InvalidArgument("grid needs at least one point");
        if (!(grid_.lambda_min_ratio > 0.0 && grid_.lambda_min_ratio < 1.0) && grid_.n_points > 1)
            throw InvalidArgument("lambda_min_ratio must lie in (0, 1)");
        lmax_ = scaledreg::lambda_max(data, factors_);
        log_ratio_ = std::log(grid_.step_ratio());
        max_index_ = static_cast<std::size_t>(
            std::floor(std::log(grid_.floor_ratio) / log_ratio_ + 1e-9));
        max_index_ = std::max<std::size_t>(max_index_, static_cast<std::size_t>(grid_.n_points - 1));
    }

    const Dataset& data() const noexcept { return data_; }
    const PenaltySpec& penalty() const noexcept { return penalty_; }
    const GridSpec& grid() const noexcept { return grid_; }
    const SolverOptions& options() const noexcept { return opt_; }
    double lambda_max() const noexcept { return lmax_; }
    double step_ratio() const noexcept { return std::exp(log_ratio_); }
    std::size_t computed() const noexcept { return points_.size(); }
    std::size_t max_index() const noexcept { return max_index_; }

    double grid_lambda(std::size_t k) const
    {
        return k == 0 ? lmax_ : lmax_ * std::exp(log_ratio_ * static_cast<double>(k));
    }

    /// Smallest k with grid_lambda(k) <= lambda (the nearest grid value not larger).
    std::size_t index_at_or_below(double lambda) const
    {
        if (lambda >= lmax_) return 0;
        if (!(lambda > 0.0)) throw PathExhausted("lambda must be positive for grid lookup");
        double kf = std::ceil(std::log(lambda / lmax_) / log_ratio_);
        if (!(kf < 1e9)) throw PathExhausted("lambda far below the grid floor");
        auto k = static_cast<std::size_t>(std::max(0.0, kf));
        while (k > 0 && grid_lambda(k - 1) <= lambda) --k;
        while (grid_lambda(k) > lambda) ++k;
        return k;
    }

    const PathPoint& point(std::size_t k)
    {
        if (k > max_index_)
            throw PathExhausted("grid cannot be extended below lambda_max * " +
                                std::to_string(grid_.floor_ratio));
        if (lmax_ == 0.0) {
            if (points_.empty()) points_.push_back(null_point(0.0));
            return points_.front();
        }
        while (points_.size() <= k) {
            const std::size_t i = points_.size();
            if (i == 0) {
                points_.push_back(null_point(lmax_));
            } else {
                points_.push_back(solver_.solve(grid_lambda(i), opt_));
            }
        }
        return points_[k];
    }

    const PathPoint& at_or_below(double lambda)
    {
        if (lmax_ == 0.0) return point(0);
        return point(index_at_or_below(lambda));
    }

    /// Solves at exactly `lambda`, warm-started from the grid point just above it.
    PathPoint solve_exact(double lambda)
    {
        if (lambda >= lmax_ || lmax_ == 0.0) return null_point(lambda);
        const std::size_t k = index_at_or_below(lambda);
        if (k > max_index_) throw PathExhausted("lambda below the grid floor");
        if (grid_lambda(k) == lambda) return point(k);
        const PathPoint& above = point(k - 1);
        CoordinateDescent cd(data_, penalty_, factors_);
        cd.set_beta(above.beta);
        return cd.solve(lambda, opt_);
    }

    /// Path object holding the points computed so far.
    Path to_path() const
    {
        Path out;
        out.points.assign(points_.begin(), points_.end());
        out.penalty = penalty_;
        return out;
    }

private:
    PathPoint null_point(double lambda) const
    {
        PathPoint pt;
        pt.lambda = lambda;
        pt.beta = Vector::Zero(data_.p());
        pt.residual_norm = data_.y().norm();
        pt.kkt_residual = std::max(0.0, lmax_ - lambda);
        return pt;
    }

    const Dataset& data_;
    PenaltySpec penalty_;
    GridSpec grid_;
    SolverOptions opt_;
    Vector factors_;
    CoordinateDescent solver_;
    double lmax_ = 0.0;
    double log_ratio_ = 0.0;
    std::size_t max_index_ = 0;
    std::deque<PathPoint> points_;
};

/// The full nominal grid, each point warm-started from the previous one.
inline Path compute_path(const Dataset& data, const PenaltySpec& penalty, const GridSpec& grid = {},
                         const SolverOptions& opt = {})
{
    LazyPath lazy(data, penalty, grid, opt);
    lazy.point(static_cast<std::size_t>(grid.n_points - 1));
    return lazy.to_path();
}

} // namespace scaledreg
