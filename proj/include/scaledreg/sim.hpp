#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <scaledreg/core.hpp>
#include <scaledreg/parallel.hpp>
#include <scaledreg/path.hpp>
#include <scaledreg/postsel.hpp>
#include <scaledreg/rng.hpp>
#include <scaledreg/scaled.hpp>

namespace scaledreg {

using Instance = std::pair<Dataset, TruthSpec>;

/**
 * Equicorrelated first 50 covariates (corr r0), independent elsewhere,
 * beta* = 1/sqrt(3) on the first three, unit Gaussian noise. The columns are
 * standardized after y is formed, and beta* is reported on the standardized
 * scale so that y - X beta* is exactly the noise.
 */
inline Instance generate_example1(double r0, SeededRng& rng, Index n = 200, Index p = 2000)
{
    if (!(r0 >= 0.0 && r0 < 1.0)) throw InvalidArgument("r0 must lie in [0, 1)");
    if (p < 3) throw InvalidArgument("example 1 needs p >= 3");
    const Index block = std::min<Index>(50, p);
    const double a = std::sqrt(r0), b = std::sqrt(1.0 - r0);
    Matrix x(n, p);
    for (Index i = 0; i < n; ++i) {
        const double common = rng.normal();
        for (Index j = 0; j < p; ++j) {
            const double z = rng.normal();
            x(i, j) = j < block ? a * common + b * z : z;
        }
    }
    Vector beta_raw = Vector::Zero(p);
    beta_raw.head(3).setConstant(1.0 / std::sqrt(3.0));
    const Vector eps = gaussian_vector(rng, n);
    Vector y = x * beta_raw + eps;
    Dataset data(std::move(x), std::move(y), true);
    TruthSpec truth;
    truth.sigma = 1.0;
    truth.beta_star = beta_raw.cwiseProduct(data.column_norms()) / std::sqrt(static_cast<double>(n));
    return {std::move(data), std::move(truth)};
}

/// 1-based centers of the five coefficient blocks: distinct multiples of 25 with c-3 >= 1, c+3 <= p.
inline std::vector<Index> example2_centers(SeededRng& rng, Index p)
{
    std::vector<Index> pool;
    for (Index c = 25; c + 3 <= p; c += 25) pool.push_back(c);
    if (pool.size() < 5) throw InvalidArgument("example 2 needs p >= 128");
    std::vector<Index> out;
    for (int k = 0; k < 5; ++k) {
        const auto i = static_cast<std::size_t>(rng.uniform_int(pool.size()));
        out.push_back(pool[i]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
    }
    std::sort(out.begin(), out.end());
    return out;
}

/**
 * AR(1) Gaussian rows (corr r0^|k-j|), standardized columns, five
 * (1,2,3,4,3,2,1) blocks scaled so that |X beta*|^2 = 3n for the realized X.
 */
inline Instance generate_example2(double r0, SeededRng& rng, Index n = 600, Index p = 3000)
{
    if (!(r0 >= 0.0 && r0 < 1.0)) throw InvalidArgument("r0 must lie in [0, 1)");
    const std::vector<Index> centers = example2_centers(rng, p);
    const double b = std::sqrt(1.0 - r0 * r0);
    Matrix x(n, p);
    for (Index i = 0; i < n; ++i) {
        double prev = rng.normal();
        x(i, 0) = prev;
        for (Index j = 1; j < p; ++j) {
            prev = r0 * prev + b * rng.normal();
            x(i, j) = prev;
        }
    }
    Dataset design(std::move(x), Vector::Zero(n), true);
    static constexpr double shape[7] = {1, 2, 3, 4, 3, 2, 1};
    Vector beta = Vector::Zero(p);
    for (Index c : centers)
        for (int k = 0; k < 7; ++k) beta(c - 1 - 3 + k) = shape[k];
    const Vector mean = design.x() * beta;
    const double scale = std::sqrt(3.0 * static_cast<double>(n)) / mean.norm();
    beta *= scale;
    const Vector eps = gaussian_vector(rng, n);
    Vector y = design.x() * beta + eps;
    TruthSpec truth;
    truth.beta_star = std::move(beta);
    truth.sigma = 1.0;
    return {design.with_response(std::move(y)), std::move(truth)};
}

// ---------------------------------------------------------------------------
// replicated experiments

enum class Design { Example1, Example2 };

enum class Estimator { ScaledLasso, ScaledMCP, ScaledSCAD, PMLE, BC };

inline std::string estimator_name(Estimator e)
{
    switch (e) {
    case Estimator::ScaledLasso: return "scaled-lasso";
    case Estimator::ScaledMCP: return "scaled-mcp";
    case Estimator::ScaledSCAD: return "scaled-scad";
    case Estimator::PMLE: return "pmle";
    case Estimator::BC: return "bc";
    }
    return "?";
}

inline Estimator parse_estimator(const std::string& s)
{
    for (Estimator e : {Estimator::ScaledLasso, Estimator::ScaledMCP, Estimator::ScaledSCAD,
                        Estimator::PMLE, Estimator::BC})
        if (estimator_name(e) == s) return e;
    throw InvalidArgument("unknown estimator '" + s + "'");
}

struct SimConfig {
    Design design = Design::Example1;
    double r0 = 0.0;
    Index n = 200;
    Index p = 2000;
    int replications = 100;
    std::vector<int> levels{1, 2, 3};
    std::vector<Estimator> estimators{Estimator::ScaledLasso, Estimator::ScaledMCP,
                                      Estimator::PMLE, Estimator::BC};
    std::uint64_t seed = 1;
    ScaledOptions fit{};
    unsigned threads = 1;

    /// Presets: full uses the design's nominal size, half and smoke shrink it.
    static SimConfig preset(Design d, const std::string& scale)
    {
        SimConfig c;
        c.design = d;
        const bool ex1 = d == Design::Example1;
        if (scale == "full") {
            c.n = ex1 ? 200 : 600;
            c.p = ex1 ? 2000 : 3000;
            c.replications = 100;
        } else if (scale == "half") {
            c.n = ex1 ? 100 : 300;
            c.p = ex1 ? 1000 : 1500;
            c.replications = 50;
        } else if (scale == "smoke") {
            c.n = 50;
            c.p = 200;
            c.replications = 10;
        } else {
            throw InvalidArgument("scale must be full, half or smoke");
        }
        return c;
    }
};

/// One (replication, estimator, level) outcome.
struct SimRecord {
    int replication = 0;
    Estimator estimator = Estimator::ScaledLasso;
    int level = 0;
    bool ok = false;
    std::string error;
    double sigma_ratio = 0.0;      ///< sigma-hat / sigma
    double sigma_bar_ratio = 0.0;  ///< sigma-bar / sigma
    int model_size = 0;
    bool sure_screening = false;
    int false_positive = 0;
    int false_negative = 0;
    int iterations = 0;
};

struct SimMetrics {
    double bias_sigma = 0.0;
    double se_sigma = 0.0;
    double bias_sigma_bar = 0.0;
    double se_sigma_bar = 0.0;
    double avg_model_size = 0.0;
    double sure_screening_prop = 0.0;
    double false_positive = 0.0;
    double false_negative = 0.0;
    int count = 0;
    int failures = 0;
};

struct SimTable {
    SimConfig config;
    std::vector<std::pair<Estimator, int>> keys;  ///< row order
    std::map<std::pair<Estimator, int>, SimMetrics> rows;
    std::vector<SimRecord> records;  ///< replication-major, then estimator, then level
};

inline Instance generate(const SimConfig& c, SeededRng& rng)
{
    return c.design == Design::Example1 ? generate_example1(c.r0, rng, c.n, c.p)
                                        : generate_example2(c.r0, rng, c.n, c.p);
}

/// All estimator/level records for one replication (rng stream = replication index).
inline std::vector<SimRecord> run_one_replication(const SimConfig& c, int rep)
{
    SeededRng rng(c.seed, static_cast<std::uint64_t>(rep));
    auto [data, truth] = generate(c, rng);
    const IndexSet s_true = support_of(truth.beta_star);

    std::optional<LazyPath> l1, mcp, scad;
    auto path_for = [&](Estimator e) -> LazyPath& {
        switch (e) {
        case Estimator::ScaledMCP:
            if (!mcp) mcp.emplace(data, PenaltySpec::mcp(auto_gamma(data)), c.fit.grid, c.fit.solver);
            return *mcp;
        case Estimator::ScaledSCAD:
            if (!scad) scad.emplace(data, PenaltySpec::scad(auto_gamma(data)), c.fit.grid, c.fit.solver);
            return *scad;
        default:
            if (!l1) l1.emplace(data, PenaltySpec::l1(), c.fit.grid, c.fit.solver);
            return *l1;
        }
    };

    std::vector<SimRecord> out;
    for (Estimator e : c.estimators) {
        for (int level : c.levels) {
            SimRecord r;
            r.replication = rep;
            r.estimator = e;
            r.level = level;
            try {
                const double lam0 = universal_lambda0(data.n(), data.p(), level);
                LazyPath& path = path_for(e);
                ScaledFit fit;
                if (e == Estimator::PMLE)
                    fit = pmle_fit(path, lam0, c.fit);
                else if (e == Estimator::BC)
                    fit = bias_corrected_fit(path, lam0, c.fit);
                else
                    fit = scaled_fit(path, lam0, c.fit);
                const IndexSet sel = support_of(fit.beta);
                const PostSelectionFit post = lse_after_selection(data, sel);
                r.sigma_ratio = fit.sigma / truth.sigma;
                r.sigma_bar_ratio = post.sigma_bar / truth.sigma;
                r.model_size = static_cast<int>(sel.size());
                r.sure_screening = is_subset(s_true, sel);
                r.false_positive = static_cast<int>(set_difference(sel, s_true).size());
                r.false_negative = static_cast<int>(set_difference(s_true, sel).size());
                r.iterations = fit.iterations;
                r.ok = true;
            } catch (const Error& err) {
                r.ok = false;
                r.error = err.name() + ": " + err.what();
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

inline SimMetrics summarize(const std::vector<const SimRecord*>& recs)
{
    SimMetrics m;
    std::vector<double> s, sb;
    for (const SimRecord* r : recs) {
        if (!r->ok) {
            ++m.failures;
            continue;
        }
        s.push_back(r->sigma_ratio);
        sb.push_back(r->sigma_bar_ratio);
        m.avg_model_size += r->model_size;
        m.sure_screening_prop += r->sure_screening ? 1.0 : 0.0;
        m.false_positive += r->false_positive;
        m.false_negative += r->false_negative;
    }
    m.count = static_cast<int>(s.size());
    if (m.count == 0) return m;
    const double k = m.count;
    auto mean_sd = [k](const std::vector<double>& v) {
        double mu = 0.0;
        for (double x : v) mu += x;
        mu /= k;
        double ss = 0.0;
        for (double x : v) ss += (x - mu) * (x - mu);
        return std::pair<double, double>{mu, k > 1 ? std::sqrt(ss / (k - 1)) : 0.0};
    };
    const auto [ms, ss] = mean_sd(s);
    const auto [mb, sbd] = mean_sd(sb);
    m.bias_sigma = ms - 1.0;
    m.se_sigma = ss;
    m.bias_sigma_bar = mb - 1.0;
    m.se_sigma_bar = sbd;
    m.avg_model_size /= k;
    m.sure_screening_prop /= k;
    m.false_positive /= k;
    m.false_negative /= k;
    return m;
}

/**
 * Runs every replication and reduces per (estimator, level). Standard errors
 * are across-replication standard deviations of the ratios. Failed fits are
 * counted in `failures` and excluded from the means.
 */
inline SimTable run_replications(const SimConfig& c)
{
    SimTable table;
    table.config = c;
    const auto reps = static_cast<std::size_t>(std::max(0, c.replications));
    std::vector<std::vector<SimRecord>> per_rep(reps);
    parallel_for(reps, c.threads, [&](std::size_t i) {
        per_rep[i] = run_one_replication(c, static_cast<int>(i));
    });
    for (auto& v : per_rep)
        for (auto& r : v) table.records.push_back(std::move(r));
    if (reps == 0) return table;
    for (Estimator e : c.estimators)
        for (int level : c.levels) {
            std::vector<const SimRecord*> recs;
            for (const SimRecord& r : table.records)
                if (r.estimator == e && r.level == level) recs.push_back(&r);
            table.keys.emplace_back(e, level);
            table.rows[{e, level}] = summarize(recs);
        }
    return table;
}

// ---------------------------------------------------------------------------
// stability selection and cross-validation baselines

struct StabilityResult {
    IndexSet selected;
    Vector frequency;  ///< selection frequency per coordinate
};

/**
 * Randomized-weight lasso at penalty lambda-hat: per replication draw
 * W_j in {0.2, 1} with equal probability and solve
 * min |y - Xb|^2/(2n) + lambda-hat sum_j |b_j| / W_j; keep the coordinates
 * selected more often than `threshold`. `unit_weights` forces W = 1.
 */
inline StabilityResult stability_selection(const Dataset& data, double lambda_hat, int n_reps,
                                           double threshold, SeededRng& rng,
                                           bool unit_weights = false,
                                           const SolverOptions& opt = {})
{
    if (!(lambda_hat > 0.0)) throw InvalidArgument("lambda_hat must be positive");
    if (n_reps < 1) throw InvalidArgument("stability selection needs at least one replication");
    StabilityResult out;
    out.frequency = Vector::Zero(data.p());
    for (int r = 0; r < n_reps; ++r) {
        Vector factors(data.p());
        for (Index j = 0; j < data.p(); ++j)
            factors(j) = unit_weights ? 1.0 : (rng.uniform() < 0.5 ? 1.0 / 0.2 : 1.0);
        CoordinateDescent cd(data, PenaltySpec::l1(), factors);
        const PathPoint pt = cd.solve(lambda_hat, opt);
        for (Index j : pt.support) out.frequency(j) += 1.0;
    }
    out.frequency /= static_cast<double>(n_reps);
    for (Index j = 0; j < data.p(); ++j)
        if (out.frequency(j) > threshold) out.selected.push_back(j);
    return out;
}

struct CvResult {
    double lambda_cv = 0.0;
    Vector beta;
    std::vector<double> chosen;  ///< minimizing lambda of each split
};

/// Descending geometric grid below lambda_max(data).
inline std::vector<double> lambda_grid(const Dataset& data, const GridSpec& grid = {})
{
    const double lmax = lambda_max(data);
    std::vector<double> out;
    const double r = grid.step_ratio();
    for (int k = 0; k < grid.n_points; ++k) out.push_back(lmax * std::pow(r, k));
    return out;
}

/**
 * Repeated random 2:1 train/validation splits. Per split the lambda with the
 * smallest validation error wins (lasso prediction, or least squares after
 * lasso selection when `adjusted`); lambda_cv is the median of the winners
 * and beta is the full-data lasso at lambda_cv. A split stops descending the
 * grid at the first lambda where the training fit does not converge.
 */
inline CvResult cross_validate_lasso(const Dataset& data, std::vector<double> grid, int n_splits,
                                     SeededRng& rng, bool adjusted, const SolverOptions& opt = {})
{
    if (grid.empty()) throw InvalidArgument("cross-validation grid is empty");
    if (n_splits < 1) throw InvalidArgument("cross-validation needs at least one split");
    std::sort(grid.begin(), grid.end(), std::greater<double>());
    if (!(grid.back() > 0.0)) throw InvalidArgument("grid values must be positive");
    const Index n = data.n();
    const Index n_train = static_cast<Index>(std::llround(2.0 * static_cast<double>(n) / 3.0));
    if (n_train < 1 || n_train >= n) throw InvalidArgument("too few observations to split");
    CvResult out;
    if (grid.size() == 1) {
        out.lambda_cv = grid.front();
        out.chosen.assign(static_cast<std::size_t>(n_splits), grid.front());
    } else {
        std::vector<Index> perm(static_cast<std::size_t>(n));
        for (int s = 0; s < n_splits; ++s) {
            std::iota(perm.begin(), perm.end(), Index{0});
            for (std::size_t i = perm.size() - 1; i > 0; --i)
                std::swap(perm[i], perm[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
            std::vector<Index> tr(perm.begin(), perm.begin() + n_train);
            std::vector<Index> va(perm.begin() + n_train, perm.end());
            std::sort(tr.begin(), tr.end());
            std::sort(va.begin(), va.end());
            const Dataset train = data.subset_rows(tr);
            const Dataset valid = data.subset_rows(va);
            CoordinateDescent cd(train, PenaltySpec::l1());
            const double train_max = lambda_max(train);
            double best = std::numeric_limits<double>::infinity();
            double best_lambda = grid.front();
            for (double lam : grid) {
                Vector b;
                if (lam >= train_max) {
                    b = Vector::Zero(data.p());
                } else {
                    try {
                        b = cd.solve(lam, opt).beta;
                    } catch (const NoConvergence&) {
                        // near interpolation on the training rows; smaller lambdas only get worse
                        break;
                    }
                }
                if (adjusted) {
                    const IndexSet sel = support_of(b);
                    if (static_cast<Index>(sel.size()) <= train.n())
                        b = lse_after_selection(train, sel).beta_bar;
                    else
                        continue;
                }
                const double mse = (valid.y() - valid.x() * b).squaredNorm();
                if (mse < best) {
                    best = mse;
                    best_lambda = lam;
                }
            }
            out.chosen.push_back(best_lambda);
        }
        std::vector<double> c = out.chosen;
        std::sort(c.begin(), c.end());
        const std::size_t m = c.size();
        out.lambda_cv = m % 2 ? c[m / 2] : 0.5 * (c[m / 2 - 1] + c[m / 2]);
    }
    if (out.lambda_cv >= lambda_max(data))
        out.beta = Vector::Zero(data.p());
    else
        out.beta = solve_fixed_lambda(data, out.lambda_cv, PenaltySpec::l1(), Vector(), opt.tol,
                                      opt.max_sweeps).beta;
    return out;
}

} // namespace scaledreg
