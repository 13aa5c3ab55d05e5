#pragma once
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <scaledreg/core.hpp>
#include <scaledreg/path.hpp>
#include <scaledreg/penalty.hpp>

namespace scaledreg {

/// How beta-hat(lambda) is obtained inside the outer iteration.
enum class Lookup {
    grid,   ///< nearest grid point not larger than lambda, grid extended on demand
    exact,  ///< solve at lambda itself, warm-started from the previous iterate
};

struct ScaledOptions {
    double a = 0.0;
    double tol = 1e-6;
    int max_iter = 100;
    Lookup lookup = Lookup::grid;
    double sigma0 = 0.0;  ///< starting sigma; <= 0 means the null-model value
    GridSpec grid{};
    SolverOptions solver{};
};

struct ScaledFit {
    Vector beta;
    double sigma = 0.0;
    double lambda_hat = 0.0;   ///< sigma * lambda0
    double lambda0 = 0.0;
    double a = 0.0;
    PenaltySpec penalty;
    int iterations = 0;
    bool converged = false;
    double joint_loss = 0.0;
    double lambda_beta = 0.0;  ///< the lambda at which beta solves the KKT system
    std::vector<double> sigma_trace;
    std::vector<double> loss_trace;  ///< joint loss after each beta update
};

namespace detail {

inline double penalty_sum(const PenaltySpec& penalty, const Vector& beta, double lambda)
{
    double s = 0.0;
    for (Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) s += penalty_value(penalty, beta(j), lambda);
    return s;
}

/// |r|^2/(2 n sigma) + (1-a) sigma / 2 + pen(sigma lambda0) / sigma; the l1 case is the joint loss.
inline double joint_loss_any(const Dataset& data, const Vector& beta, double sigma, double lambda0,
                             double a, const PenaltySpec& penalty)
{
    const double n = static_cast<double>(data.n());
    const double rss = (data.y() - data.x() * beta).squaredNorm();
    const double pen = penalty.is_l1() ? lambda0 * beta.lpNorm<1>()
                                       : penalty_sum(penalty, beta, sigma * lambda0) / sigma;
    return rss / (2.0 * n * sigma) + (1.0 - a) * sigma / 2.0 + pen;
}

inline void check_scaled_args(double lambda0, double a)
{
    if (!(lambda0 > 0.0)) throw InvalidArgument("lambda0 must be positive");
    if (!(a >= 0.0 && a < 1.0)) throw InvalidArgument("a must lie in [0, 1)");
}

} // namespace detail

/// |y - X beta|^2 / (2 n sigma) + (1 - a) sigma / 2 + lambda0 |beta|_1.
inline double joint_loss(const Dataset& data, const Vector& beta, double sigma, double lambda0,
                         double a = 0.0, const PenaltySpec& penalty = PenaltySpec::l1())
{
    if (!penalty.is_l1()) throw NonL1Penalty("joint loss is defined for the l1 penalty only");
    if (!(sigma > 0.0)) throw NonpositiveSigma("sigma must be positive");
    return detail::joint_loss_any(data, beta, sigma, lambda0, a, penalty);
}

/// (1 - a)/2 - |y - X beta-hat(sigma lambda0)|^2 / (2 n sigma^2).
inline double profile_loss_derivative(LazyPath& path, double sigma, double lambda0, double a = 0.0,
                                      Lookup lookup = Lookup::grid)
{
    if (!(sigma > 0.0)) throw NonpositiveSigma("sigma must be positive");
    const Dataset& data = path.data();
    const double n = static_cast<double>(data.n());
    double rn;
    if (lookup == Lookup::grid)
        rn = path.at_or_below(sigma * lambda0).residual_norm;
    else
        rn = path.solve_exact(sigma * lambda0).residual_norm;
    return (1.0 - a) / 2.0 - rn * rn / (2.0 * n * sigma * sigma);
}

namespace detail {

enum class SigmaRule { scaled, pmle };

/// Shared outer loop of the scaled and penalized-likelihood iterations.
inline ScaledFit equilibrium(LazyPath& path, double lambda0, const ScaledOptions& opt, SigmaRule rule)
{
    const Dataset& data = path.data();
    const double a = rule == SigmaRule::pmle ? 0.0 : opt.a;
    check_scaled_args(lambda0, a);
    const double n = static_cast<double>(data.n());
    const double ynorm = data.y().norm();
    const double floor = 1e-8 * ynorm / std::sqrt(n);

    std::optional<CoordinateDescent> cd;
    if (opt.lookup == Lookup::exact) cd.emplace(data, path.penalty());

    auto beta_at = [&](double lambda) -> PathPoint {
        if (opt.lookup == Lookup::grid) return path.at_or_below(lambda);
        if (lambda >= path.lambda_max() || path.lambda_max() == 0.0) {
            cd->set_beta(Vector());
            PathPoint pt;
            pt.lambda = lambda;
            pt.beta = Vector::Zero(data.p());
            pt.residual_norm = ynorm;
            return pt;
        }
        return cd->solve(lambda, path.options());
    };
    auto next_sigma = [&](const PathPoint& pt) {
        if (rule == SigmaRule::scaled) return pt.residual_norm / std::sqrt((1.0 - a) * n);
        const double ip = data.y().dot(data.y() - data.x() * pt.beta) / n;
        if (!(ip > 0.0)) throw NegativeInnerProduct("y'(y - X beta) <= 0 in the likelihood iteration");
        return std::sqrt(ip);
    };

    ScaledFit fit;
    fit.lambda0 = lambda0;
    fit.a = a;
    fit.penalty = path.penalty();

    double sigma = opt.sigma0 > 0.0 ? opt.sigma0
                                    : (rule == SigmaRule::scaled ? ynorm / std::sqrt((1.0 - a) * n)
                                                                 : ynorm / std::sqrt(n));
    if (!(sigma > floor) || !(sigma > 0.0))
        throw SigmaFloorHit("initial sigma is at the floor (y is zero)");
    fit.sigma_trace.push_back(sigma);

    PathPoint pt;
    for (int it = 1; it <= opt.max_iter; ++it) {
        pt = beta_at(sigma * lambda0);
        fit.loss_trace.push_back(joint_loss_any(data, pt.beta, sigma, lambda0, a, fit.penalty));
        const double s_new = next_sigma(pt);
        if (!(s_new >= floor) || s_new == 0.0)
            throw SigmaFloorHit("sigma fell below " + std::to_string(floor) +
                                " (near interpolation)");
        fit.sigma_trace.push_back(s_new);
        fit.iterations = it;
        const bool done = std::fabs(s_new - sigma) <= opt.tol * sigma;
        sigma = s_new;
        if (done) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged)
        throw NoConvergence("sigma iteration did not reach a fixed point", fit.iterations,
                            std::fabs(fit.sigma_trace.back() - fit.sigma_trace[fit.sigma_trace.size() - 2]),
                            std::vector<double>(pt.beta.data(), pt.beta.data() + pt.beta.size()));
    pt = beta_at(sigma * lambda0);
    fit.beta = pt.beta;
    fit.lambda_beta = pt.lambda;
    fit.sigma = sigma;
    fit.lambda_hat = sigma * lambda0;
    fit.joint_loss = joint_loss_any(data, fit.beta, sigma, lambda0, a, fit.penalty);
    return fit;
}

} // namespace detail

/**
 * Scaled estimator: alternate sigma <- |y - X beta| / sqrt((1 - a) n) and
 * beta <- beta-hat(sigma lambda0) until |sigma_new - sigma| <= tol sigma.
 * `path` is shared and may be reused across lambda0 values and estimators.
 */
inline ScaledFit scaled_fit(LazyPath& path, double lambda0, const ScaledOptions& opt = {})
{
    return detail::equilibrium(path, lambda0, opt, detail::SigmaRule::scaled);
}

inline ScaledFit scaled_fit(const Dataset& data, double lambda0,
                            const PenaltySpec& penalty = PenaltySpec::l1(),
                            const ScaledOptions& opt = {})
{
    detail::check_scaled_args(lambda0, opt.a);
    LazyPath path(data, penalty, opt.grid, opt.solver);
    return scaled_fit(path, lambda0, opt);
}

/// Penalized likelihood equilibrium: sigma <- sqrt(y'(y - X beta) / n).
inline ScaledFit pmle_fit(LazyPath& path, double lambda0, const ScaledOptions& opt = {})
{
    return detail::equilibrium(path, lambda0, opt, detail::SigmaRule::pmle);
}

inline ScaledFit pmle_fit(const Dataset& data, double lambda0,
                          const PenaltySpec& penalty = PenaltySpec::l1(),
                          const ScaledOptions& opt = {})
{
    detail::check_scaled_args(lambda0, 0.0);
    LazyPath path(data, penalty, opt.grid, opt.solver);
    return pmle_fit(path, lambda0, opt);
}

/// One scaled step from the likelihood fit: sigma_bc = |y - X beta_pmle| / sqrt(n).
inline ScaledFit bias_corrected_fit(LazyPath& path, double lambda0, const ScaledOptions& opt = {})
{
    ScaledFit pm = pmle_fit(path, lambda0, opt);
    const Dataset& data = path.data();
    const double n = static_cast<double>(data.n());
    const double s_bc = (data.y() - data.x() * pm.beta).norm() / std::sqrt(n);
    if (!(s_bc > 0.0)) throw SigmaFloorHit("bias-corrected sigma is zero");
    PathPoint pt = opt.lookup == Lookup::grid ? path.at_or_below(s_bc * lambda0)
                                              : path.solve_exact(s_bc * lambda0);
    ScaledFit out = pm;
    out.beta = pt.beta;
    out.lambda_beta = pt.lambda;
    out.sigma = s_bc;
    out.lambda_hat = s_bc * lambda0;
    out.iterations = pm.iterations + 1;
    out.sigma_trace.push_back(s_bc);
    out.joint_loss = detail::joint_loss_any(data, out.beta, s_bc, lambda0, 0.0, out.penalty);
    return out;
}

inline ScaledFit bias_corrected_fit(const Dataset& data, double lambda0,
                                    const PenaltySpec& penalty = PenaltySpec::l1(),
                                    const ScaledOptions& opt = {})
{
    detail::check_scaled_args(lambda0, 0.0);
    LazyPath path(data, penalty, opt.grid, opt.solver);
    return bias_corrected_fit(path, lambda0, opt);
}

struct LambdaCharacterization {
    double lambda_hat = 0.0;
    double sigma_hat = 0.0;
    std::size_t index = 0;  ///< grid index of lambda_hat (0 also covers the null solution)
};

/**
 * lambda-hat = min{lambda on the grid: sigma-hat(lambda)^2 <= n lambda^2 / (2 log p)}
 * with sigma-hat(lambda) = |y - X beta-hat(lambda)| / sqrt((1 - a) n).
 *
 * When the condition already fails at lambda_max the equilibrium is the null
 * model and lambda-hat = sigma-hat(lambda_max) sqrt(2 log p / n).
 */
inline LambdaCharacterization lambda_hat_characterization(LazyPath& path, double a = 0.0)
{
    const Dataset& data = path.data();
    const double n = static_cast<double>(data.n());
    const double logp = std::log(static_cast<double>(data.p()));
    if (!(logp > 0.0)) throw InvalidArgument("characterization needs p >= 2");
    const double lam0 = std::sqrt(2.0 * logp / n);
    auto sig = [&](const PathPoint& pt) { return pt.residual_norm / std::sqrt((1.0 - a) * n); };
    auto holds = [&](const PathPoint& pt, double lam) {
        const double s = sig(pt);
        return s * s <= n * lam * lam / (2.0 * logp);
    };
    LambdaCharacterization out;
    const PathPoint& top = path.point(0);
    if (path.lambda_max() == 0.0 || !holds(top, path.lambda_max())) {
        out.sigma_hat = sig(top);
        out.lambda_hat = out.sigma_hat * lam0;
        out.index = 0;
        return out;
    }
    std::size_t k = 0;
    while (true) {
        if (k + 1 > path.max_index())
            throw NotBracketed("characterization crossing lies below the extended grid");
        const PathPoint& next = path.point(k + 1);
        if (!holds(next, path.grid_lambda(k + 1))) break;
        ++k;
    }
    const PathPoint& at = path.point(k);
    out.lambda_hat = path.grid_lambda(k);
    out.sigma_hat = sig(at);
    out.index = k;
    return out;
}

/// sqrt(2^(j-1) log(p) / n).
inline double universal_lambda0(Index n, Index p, int j)
{
    if (j < 1 || j > 3) throw InvalidArgument("penalty level index must be 1, 2 or 3");
    if (n < 2 || p < 2) throw InvalidArgument("universal penalty needs n, p >= 2");
    return std::sqrt(std::ldexp(1.0, j - 1) * std::log(static_cast<double>(p)) / static_cast<double>(n));
}

/// 2 / (1 - max_{k != j} |x_k'x_j| / n).
inline double auto_gamma(const Dataset& data)
{
    if (data.p() < 2) throw InvalidArgument("auto gamma needs p >= 2");
    const Matrix g = gram(data);
    double m = 0.0;
    for (Index j = 0; j < g.cols(); ++j)
        for (Index k = 0; k < j; ++k) m = std::max(m, std::fabs(g(k, j)));
    if (m >= 1.0 - 1e-9) throw DegenerateDesign("duplicate columns: max |x_k'x_j|/n reaches 1");
    return 2.0 / (1.0 - m);
}

} // namespace scaledreg
