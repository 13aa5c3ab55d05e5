#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include <scaledreg/core.hpp>
#include <scaledreg/rng.hpp>

namespace scaledreg::theory {

/// Default cap on the number of subsets any enumeration may visit.
inline constexpr double kEnumerationBudget = 1e6;

// ---------------------------------------------------------------------------
// projections used by the compatibility solver

/// Euclidean projection of v onto the probability simplex.
inline Vector project_simplex(const Vector& v, double radius = 1.0)
{
    const Index k = v.size();
    std::vector<double> s(v.data(), v.data() + k);
    std::sort(s.begin(), s.end(), std::greater<double>());
    double cum = 0.0, theta = 0.0;
    for (Index i = 0; i < k; ++i) {
        cum += s[static_cast<std::size_t>(i)];
        const double t = (cum - radius) / static_cast<double>(i + 1);
        if (i + 1 == k || s[static_cast<std::size_t>(i + 1)] <= t) {
            theta = t;
            break;
        }
    }
    return (v.array() - theta).max(0.0).matrix();
}

/// Euclidean projection onto the l1 ball of the given radius.
inline Vector project_l1_ball(const Vector& v, double radius)
{
    if (v.size() == 0 || v.lpNorm<1>() <= radius) return v;
    const Vector mag = project_simplex(v.cwiseAbs(), radius);
    Vector out(v.size());
    for (Index i = 0; i < v.size(); ++i) out(i) = v(i) < 0.0 ? -mag(i) : mag(i);
    return out;
}

// ---------------------------------------------------------------------------
// compatibility factor

struct KappaResult {
    double value = 0.0;   ///< best objective found (upper estimate of kappa)
    double lower = 0.0;   ///< certified lower bound from the duality gap
    double gap = 0.0;     ///< worst duality gap across sign patterns, in |Xu|^2/n units
    int patterns = 0;
};

/**
 * kappa(xi, T)^2 = |T| min { u'Gu : |u_T|_1 = 1, |u_{T^c}|_1 <= xi }.
 *
 * For each sign pattern s of u_T (s and -s give the same value) the
 * subproblem over {u_T = s o v, v in the simplex} x {xi-ball} is convex and
 * solved by accelerated projected gradient with restarts. The Frank-Wolfe
 * gap g at the final iterate certifies min >= f - g. Iteration stops once
 * g <= rel_tol * f or the certified bound has not improved for 2000 steps.
 */
inline KappaResult compatibility_factor(const Matrix& gram, const IndexSet& t_set, double xi,
                                        double rel_tol = 1e-8, int max_iter = 200000)
{
    if (t_set.empty()) throw InvalidArgument("compatibility factor needs a nonempty T");
    if (t_set.size() > 12) throw BudgetExceeded("compatibility factor enumerates 2^|T| patterns; |T| <= 12");
    if (!(xi >= 0.0)) throw InvalidArgument("xi must be nonnegative");
    const Index p = gram.rows();
    const IndexSet tc = complement(t_set, p);
    const Index t = static_cast<Index>(t_set.size());
    const Index m = static_cast<Index>(tc.size());

    // reorder so that T comes first
    IndexSet order = t_set;
    order.insert(order.end(), tc.begin(), tc.end());
    const Matrix g = gather(gram, order, order);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    const double lip = 2.0 * std::max(es.eigenvalues().maxCoeff(), 1e-12);

    double best_f = std::numeric_limits<double>::infinity();
    double best_lower = std::numeric_limits<double>::infinity();
    double worst_gap = 0.0;
    const int n_patterns = 1 << (t - 1);
    for (int pat = 0; pat < n_patterns; ++pat) {
        Vector s(t);
        s(0) = 1.0;
        for (Index i = 1; i < t; ++i) s(i) = (pat >> (i - 1)) & 1 ? -1.0 : 1.0;

        auto assemble = [&](const Vector& v, const Vector& w) {
            Vector u(t + m);
            u.head(t) = s.cwiseProduct(v);
            u.tail(m) = w;
            return u;
        };
        auto f_of = [&](const Vector& u) { return u.dot(g * u); };

        Vector v = Vector::Constant(t, 1.0 / static_cast<double>(t));
        Vector w = Vector::Zero(m);
        Vector yv = v, yw = w;
        double mom = 1.0;
        double fx = f_of(assemble(v, w));
        double lower = -std::numeric_limits<double>::infinity();
        double gap = std::numeric_limits<double>::infinity();
        int last_gain = 0;
        for (int it = 0; it < max_iter; ++it) {
            const Vector gy = 2.0 * (g * assemble(yv, yw));
            const Vector nv = project_simplex(yv - s.cwiseProduct(gy.head(t)) / lip);
            const Vector nw = project_l1_ball(yw - gy.tail(m) / lip, xi);
            const double fn = f_of(assemble(nv, nw));
            const double mom_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * mom * mom));
            if (fn > fx) {
                // a plain projected step that fails to descend means rounding has taken over
                if (mom == 1.0) break;
                // adaptive restart: drop momentum and retry from the current iterate
                yv = v;
                yw = w;
                mom = 1.0;
                continue;
            }
            yv = nv + ((mom - 1.0) / mom_next) * (nv - v);
            yw = nw + ((mom - 1.0) / mom_next) * (nw - w);
            v = nv;
            w = nw;
            fx = fn;
            mom = mom_next;
            if (it % 10 == 0 || it + 1 == max_iter) {
                const Vector gx = 2.0 * (g * assemble(v, w));
                const Vector gv = s.cwiseProduct(gx.head(t));
                const Vector gw = gx.tail(m);
                const double lin = gv.dot(v) + gw.dot(w) - gv.minCoeff() +
                                   (m > 0 ? xi * gw.cwiseAbs().maxCoeff() : 0.0);
                gap = std::max(0.0, lin);
                if (fx - gap > lower + 1e-13 * fx) last_gain = it;
                lower = std::max(lower, fx - gap);
                if (gap <= rel_tol * fx || gap <= 1e-15) break;
                // rounding stalls the gap near the optimum; stop once the bound stops moving
                if (it - last_gain >= 2000) break;
            }
        }
        {
            const Vector gx = 2.0 * (g * assemble(v, w));
            const Vector gv = s.cwiseProduct(gx.head(t));
            const Vector gw = gx.tail(m);
            gap = std::max(0.0, gv.dot(v) + gw.dot(w) - gv.minCoeff() +
                                    (m > 0 ? xi * gw.cwiseAbs().maxCoeff() : 0.0));
            lower = std::max(lower, fx - gap);
        }
        best_f = std::min(best_f, fx);
        best_lower = std::min(best_lower, lower);
        worst_gap = std::max(worst_gap, gap);
    }
    KappaResult out;
    out.value = std::sqrt(static_cast<double>(t) * std::max(0.0, best_f));
    out.lower = std::sqrt(static_cast<double>(t) * std::max(0.0, best_lower));
    out.gap = worst_gap;
    out.patterns = n_patterns;
    return out;
}

/// Memoizes compatibility factors by (T, xi) for one Gram matrix.
class KappaCache {
public:
    explicit KappaCache(const Matrix& gram) : gram_(gram) {}

    const KappaResult& get(const IndexSet& t_set, double xi)
    {
        auto key = std::make_pair(t_set, xi);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(key, compatibility_factor(gram_, t_set, xi)).first->second;
    }

    /// Certified lower bound of kappa(xi, T).
    double lower(const IndexSet& t_set, double xi) { return get(t_set, xi).lower; }

    const Matrix& gram() const noexcept { return gram_; }

private:
    const Matrix& gram_;
    std::map<std::pair<IndexSet, double>, KappaResult> cache_;
};

// ---------------------------------------------------------------------------
// sign-restricted cone invertibility factor

struct ConeFactor {
    double estimate = 0.0;  ///< smallest ratio found by sampling (an upper bound on F_q)
    bool certified = false; ///< the exhaustive sampling protocol ran (|S| <= 3, p <= 10)
};

inline double lq_norm(const Vector& u, double q)
{
    if (std::isinf(q)) return u.cwiseAbs().maxCoeff();
    if (q == 1.0) return u.lpNorm<1>();
    if (q == 2.0) return u.norm();
    return std::pow(u.cwiseAbs().array().pow(q).sum(), 1.0 / q);
}

/// |S|^{1/q} |Gu|_inf / |u|_q on the sign-restricted cone, or +inf when u is infeasible.
inline double cone_ratio(const Matrix& gram, const IndexSet& s_set, const std::vector<char>& in_s,
                         double xi, double q, const Vector& u)
{
    const Vector gu = gram * u;
    double us = 0.0, usc = 0.0;
    for (Index j = 0; j < u.size(); ++j) {
        if (in_s[static_cast<std::size_t>(j)]) {
            us += std::fabs(u(j));
        } else {
            usc += std::fabs(u(j));
            if (u(j) * gu(j) > 0.0) return std::numeric_limits<double>::infinity();
        }
    }
    if (!(us > 0.0) || usc > xi * us) return std::numeric_limits<double>::infinity();
    const double kq = std::isinf(q) ? 1.0 : std::pow(static_cast<double>(s_set.size()), 1.0 / q);
    return kq * gu.cwiseAbs().maxCoeff() / lq_norm(u, q);
}

/**
 * Sampling estimate of F_q(xi, S). Candidates: directions supported on S,
 * random directions with sparse off-S parts, then local random-walk
 * refinement of the best few. `samples` <= 0 picks the documented protocol
 * size (1e6 when |S| <= 3 and p <= 10, else 2e4).
 */
inline ConeFactor cone_invertibility_factor(const Matrix& gram, const IndexSet& s_set, double xi, double q,
                                            long samples = 0, std::uint64_t seed = 12345)
{
    if (s_set.empty()) throw InvalidArgument("cone invertibility factor needs a nonempty S");
    if (!(q >= 1.0)) throw InvalidArgument("q must lie in [1, inf]");
    const Index p = gram.rows();
    const bool exhaustive = s_set.size() <= 3 && p <= 10;
    if (samples <= 0) samples = exhaustive ? 1000000 : 20000;
    std::vector<char> in_s(static_cast<std::size_t>(p), 0);
    for (Index j : s_set) in_s[static_cast<std::size_t>(j)] = 1;
    const IndexSet sc = complement(s_set, p);
    SeededRng rng(seed, 0);

    struct Cand {
        double value;
        Vector u;
    };
    std::vector<Cand> top;
    const std::size_t keep = 8;
    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](const Vector& u) {
        const double r = cone_ratio(gram, s_set, in_s, xi, q, u);
        if (!std::isfinite(r)) return;
        best = std::min(best, r);
        if (top.size() < keep || r < top.back().value) {
            top.push_back({r, u});
            std::sort(top.begin(), top.end(), [](const Cand& a, const Cand& b) { return a.value < b.value; });
            if (top.size() > keep) top.pop_back();
        }
    };

    // structured: coordinate and sign-pattern directions on S
    const Index k = static_cast<Index>(s_set.size());
    for (Index i = 0; i < k; ++i) {
        Vector u = Vector::Zero(p);
        u(s_set[static_cast<std::size_t>(i)]) = 1.0;
        consider(u);
    }
    if (k <= 16) {
        for (int pat = 0; pat < (1 << (k - 1)); ++pat) {
            Vector u = Vector::Zero(p);
            for (Index i = 0; i < k; ++i)
                u(s_set[static_cast<std::size_t>(i)]) = (i > 0 && ((pat >> (i - 1)) & 1)) ? -1.0 : 1.0;
            consider(u);
        }
    }
    // random: Gaussian u_S with an empty, sparse random, or sparse sign-aligned off-S part
    for (long draw = 0; draw < samples; ++draw) {
        Vector u = Vector::Zero(p);
        for (Index j : s_set) u(j) = rng.normal();
        const int mode = static_cast<int>(draw % 3);
        if (mode > 0 && !sc.empty()) {
            const double us = u.lpNorm<1>();
            const auto nnz = static_cast<Index>(1 + rng.uniform_int(std::min<std::uint64_t>(sc.size(), 4)));
            const double budget = xi * us * rng.uniform();
            Vector off = Vector::Zero(static_cast<Index>(sc.size()));
            for (Index c = 0; c < nnz; ++c)
                off(static_cast<Index>(rng.uniform_int(sc.size()))) = rng.normal();
            if (mode == 2) {
                // align off-support signs against the gradient so the restriction tends to hold
                const Vector gu = gram * u;
                for (std::size_t c = 0; c < sc.size(); ++c)
                    if (off(static_cast<Index>(c)) != 0.0)
                        off(static_cast<Index>(c)) = -std::copysign(std::fabs(off(static_cast<Index>(c))), gu(sc[c]));
            }
            const double on = off.lpNorm<1>();
            if (on > 0.0)
                for (std::size_t c = 0; c < sc.size(); ++c) u(sc[c]) = off(static_cast<Index>(c)) * budget / on;
        }
        consider(u);
    }
    // local refinement
    for (Cand c : std::vector<Cand>(top)) {
        double step = 0.1;
        for (int it = 0; it < 2000; ++it) {
            Vector trial = c.u;
            const auto j = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(p)));
            trial(j) += step * rng.normal() * std::max(1e-3, c.u.cwiseAbs().maxCoeff());
            const double r = cone_ratio(gram, s_set, in_s, xi, q, trial);
            if (r < c.value) {
                c.value = r;
                c.u = trial;
                best = std::min(best, r);
            } else if (it % 200 == 199) {
                step *= 0.5;
            }
        }
    }
    ConeFactor out;
    out.estimate = best;
    out.certified = exhaustive;
    return out;
}

/// Certified lower bound F_q >= |S|^{1/q - 1} kappa^2 / (1 + xi), from the sign restriction.
inline double cone_factor_lower(double kappa_lower, std::size_t s_size, double xi, double q)
{
    const double e = std::isinf(q) ? -1.0 : 1.0 / q - 1.0;
    return std::pow(static_cast<double>(s_size), e) * kappa_lower * kappa_lower / (1.0 + xi);
}

// ---------------------------------------------------------------------------
// sparse eigenvalues

struct SparseEigen {
    double delta_minus = 0.0;
    double delta_plus = 0.0;
};

inline std::size_t ceil_size(double a)
{
    if (!(a >= 0.0)) throw InvalidArgument("subset size must be nonnegative");
    return static_cast<std::size_t>(std::ceil(a - 1e-12));
}

inline IndexSet iota_set(Index p)
{
    IndexSet all(static_cast<std::size_t>(p));
    std::iota(all.begin(), all.end(), Index{0});
    return all;
}

/// delta-_a = max_A (1 - lambda_min(G_AA)), delta+_a = max_A (lambda_max(G_AA) - 1), |A| = ceil(a).
inline SparseEigen sparse_eigenvalues(const Matrix& gram, double a, double budget = kEnumerationBudget)
{
    const std::size_t k = ceil_size(a);
    const auto p = static_cast<std::size_t>(gram.rows());
    if (k < 1 || k > p) throw InvalidArgument("sparse eigenvalue size must lie in [1, p]");
    if (binomial(p, k) > budget) throw BudgetExceeded("sparse eigenvalue enumeration exceeds budget");
    SparseEigen out{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for_each_subset(iota_set(gram.rows()), k, [&](const IndexSet& A) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(gather(gram, A, A), Eigen::EigenvaluesOnly);
        out.delta_minus = std::max(out.delta_minus, 1.0 - es.eigenvalues()(0));
        out.delta_plus = std::max(out.delta_plus, es.eigenvalues()(static_cast<Index>(k) - 1) - 1.0);
    });
    return out;
}

/// max over disjoint |A| = ceil(a), |B| = ceil(b) of the spectral norm of G_AB.
inline double theta(const Matrix& gram, double a, double b, double budget = kEnumerationBudget)
{
    const std::size_t ka = ceil_size(a), kb = ceil_size(b);
    const auto p = static_cast<std::size_t>(gram.rows());
    if (ka < 1 || kb < 1 || ka + kb > p) throw InvalidArgument("theta needs disjoint nonempty blocks within p");
    if (binomial(p, ka) * binomial(p - ka, kb) > budget)
        throw BudgetExceeded("theta enumeration exceeds budget");
    double best = 0.0;
    const IndexSet all = iota_set(gram.rows());
    for_each_subset(all, ka, [&](const IndexSet& A) {
        const IndexSet rest = set_difference(all, A);
        for_each_subset(rest, kb, [&](const IndexSet& B) {
            Eigen::JacobiSVD<Matrix> svd(gather(gram, A, B));
            best = std::max(best, svd.singularValues()(0));
        });
    });
    return best;
}

/// Upper bound theta_{a,b} <= max_{|C| = a+b} |G_CC - I|_2, cheaper than the disjoint-pair enumeration.
inline double theta_upper(const Matrix& gram, double a, double b, double budget = kEnumerationBudget)
{
    const SparseEigen e = sparse_eigenvalues(gram, static_cast<double>(ceil_size(a) + ceil_size(b)), budget);
    return std::max(e.delta_minus, e.delta_plus);
}

struct KappaMinusPlus {
    double kappa_minus = 0.0;
    double kappa_plus = 0.0;
};

/**
 * kappa-(m, T) = min over B containing T with |B \ T| <= m of lambda_min(G_BB);
 * kappa+(m, T) = max over B disjoint from T with |B| <= m of lambda_max(G_BB).
 * By eigenvalue interlacing only the largest admissible B need be visited.
 */
inline KappaMinusPlus kappa_minus_plus(const Matrix& gram, std::size_t m, const IndexSet& t_set,
                                       double budget = kEnumerationBudget)
{
    const Index p = gram.rows();
    const IndexSet rest = complement(t_set, p);
    const std::size_t k = std::min(m, rest.size());
    if (binomial(rest.size(), k) > budget) throw BudgetExceeded("kappa-/kappa+ enumeration exceeds budget");
    KappaMinusPlus out{std::numeric_limits<double>::infinity(), 0.0};
    if (t_set.empty() && k == 0) out.kappa_minus = 1.0;
    for_each_subset(rest, k, [&](const IndexSet& extra) {
        const IndexSet B = set_union(t_set, extra);
        if (!B.empty()) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(gather(gram, B, B), Eigen::EigenvaluesOnly);
            out.kappa_minus = std::min(out.kappa_minus, es.eigenvalues()(0));
        }
        if (!extra.empty()) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(gather(gram, extra, extra), Eigen::EigenvaluesOnly);
            out.kappa_plus = std::max(out.kappa_plus, es.eigenvalues()(es.eigenvalues().size() - 1));
        }
    });
    return out;
}

} // namespace scaledreg::theory
