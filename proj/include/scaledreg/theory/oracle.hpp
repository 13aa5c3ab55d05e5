#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <scaledreg/core.hpp>
#include <scaledreg/theory/factors.hpp>

namespace scaledreg::theory {

/// |y - X beta*| / sqrt(n).
inline double sigma_star(const Dataset& data, const TruthSpec& truth)
{
    if (truth.beta_star.size() != data.p()) throw DimensionMismatch("beta* must have length p");
    return (data.y() - data.x() * truth.beta_star).norm() / std::sqrt(static_cast<double>(data.n()));
}

/// |X'(y - X beta*) / n|_inf / sigma*.
inline double z_star(const Dataset& data, const TruthSpec& truth)
{
    const double s = sigma_star(data, truth);
    if (!(s > 0.0)) throw DegenerateOracle("sigma* is zero; z* is undefined");
    const Vector eps = data.y() - data.x() * truth.beta_star;
    return (data.x().transpose() * eps).cwiseAbs().maxCoeff() / static_cast<double>(data.n()) / s;
}

/**
 * Per-instance context: Gram matrix, oracle residual and a compatibility
 * cache shared by every bound evaluated on the instance.
 */
class Instance {
public:
    Instance(const Dataset& data, const TruthSpec& truth)
        : data_(data), truth_(truth), gram_(scaledreg::gram(data)), kappa_(gram_),
          eps_(data.y() - data.x() * truth.beta_star), support_(support_of(truth.beta_star))
    {
        if (truth.beta_star.size() != data.p()) throw DimensionMismatch("beta* must have length p");
        xeps_ = data.x().transpose() * eps_ / static_cast<double>(data.n());
    }
    Instance(const Instance&) = delete;
    Instance& operator=(const Instance&) = delete;

    const Dataset& data() const noexcept { return data_; }
    const TruthSpec& truth() const noexcept { return truth_; }
    const Matrix& gram() const noexcept { return gram_; }
    KappaCache& kappa() noexcept { return kappa_; }
    const Vector& noise() const noexcept { return eps_; }
    /// X'(y - X beta*) / n
    const Vector& score() const noexcept { return xeps_; }
    const IndexSet& support() const noexcept { return support_; }

    double sigma_star() const { return eps_.norm() / std::sqrt(static_cast<double>(data_.n())); }
    double z_star() const
    {
        const double s = sigma_star();
        if (!(s > 0.0)) throw DegenerateOracle("sigma* is zero; z* is undefined");
        return xeps_.cwiseAbs().maxCoeff() / s;
    }

private:
    const Dataset& data_;
    const TruthSpec& truth_;
    Matrix gram_;
    KappaCache kappa_;
    Vector eps_;
    Vector xeps_;
    IndexSet support_;
};

/**
 * eta(lambda, xi, w, T) = |X beta* - X w|^2/n + (1 + delta) 2 lambda |w_{T^c}|_1
 *   + 4 xi^2 lambda^2 |T| / ((xi+1)^2 kappa^2(xi, T)),
 * delta = 0 only for (w, T) = (beta*, empty). The certified lower bound of
 * kappa is used, so the value is an upper bound of the exact eta.
 */
inline double eta(Instance& inst, double lambda, double xi, const Vector& w, const IndexSet& t_set)
{
    const Dataset& data = inst.data();
    const Vector& bstar = inst.truth().beta_star;
    const double n = static_cast<double>(data.n());
    const bool oracle_pair = t_set.empty() && w == bstar;
    const double delta = oracle_pair ? 0.0 : 1.0;
    const Vector d = bstar - w;
    const double approx = d.isZero(0.0) ? 0.0 : (data.x() * d).squaredNorm() / n;
    double off = 0.0;
    {
        std::size_t k = 0;
        for (Index j = 0; j < w.size(); ++j) {
            if (k < t_set.size() && t_set[k] == j) {
                ++k;
                continue;
            }
            off += std::fabs(w(j));
        }
    }
    double term3 = 0.0;
    if (!t_set.empty() && lambda != 0.0) {
        const double kl = inst.kappa().lower(t_set, xi);
        term3 = kl > 0.0 ? 4.0 * xi * xi * lambda * lambda * static_cast<double>(t_set.size()) /
                               ((xi + 1.0) * (xi + 1.0) * kl * kl)
                         : std::numeric_limits<double>::infinity();
    }
    return approx + (1.0 + delta) * 2.0 * lambda * off + term3;
}

/// A (w, T) pair in the candidate family.
struct Candidate {
    Vector w;
    IndexSet t_set;
};

/**
 * Default candidate family: (beta*, empty), (beta*, top-k support by |beta*_j|)
 * for k <= min(|supp beta*|, 12), and (beta* thresholded at lambda, its support).
 */
inline std::vector<Candidate> default_candidates(const Vector& beta_star, double lambda)
{
    std::vector<Candidate> out;
    out.push_back({beta_star, {}});
    IndexSet supp = support_of(beta_star);
    std::stable_sort(supp.begin(), supp.end(), [&](Index a, Index b) {
        return std::fabs(beta_star(a)) > std::fabs(beta_star(b));
    });
    const std::size_t kmax = std::min<std::size_t>(supp.size(), 12);
    for (std::size_t k = 1; k <= kmax; ++k) {
        IndexSet t(supp.begin(), supp.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(t.begin(), t.end());
        out.push_back({beta_star, t});
    }
    Vector thr = Vector::Zero(beta_star.size());
    for (Index j = 0; j < beta_star.size(); ++j)
        if (std::fabs(beta_star(j)) > lambda) thr(j) = beta_star(j);
    IndexSet tt = support_of(thr);
    if (tt.size() <= 12) out.push_back({thr, tt});
    return out;
}

/// min of eta over the candidate family: an upper bound on the infimum over all (w, T).
inline double eta_star_ub(Instance& inst, double lambda, double xi,
                          const std::vector<Candidate>* candidates = nullptr)
{
    std::vector<Candidate> local;
    if (!candidates) {
        local = default_candidates(inst.truth().beta_star, lambda);
        candidates = &local;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const Candidate& c : *candidates) best = std::min(best, eta(inst, lambda, xi, c.w, c.t_set));
    return best;
}

/**
 * 2^-1 [eta + sqrt(eta^2 - 16 lambda^2 |beta*_{T^c}|_1^2)] with eta = eta(lambda, xi, beta*, T).
 * A discriminant in [-1e-12, 0) is clamped to 0; a more negative one
 * returns eta unchanged.
 */
inline double eta_sharp(Instance& inst, double lambda, double xi, const IndexSet& t_set)
{
    const Vector& b = inst.truth().beta_star;
    const double e = eta(inst, lambda, xi, b, t_set);
    if (!std::isfinite(e)) return e;
    double off = b.lpNorm<1>();
    for (Index j : t_set) off -= std::fabs(b(j));
    off = std::max(0.0, off);
    double disc = e * e - 16.0 * lambda * lambda * off * off;
    if (disc < -1e-12) return e;
    disc = std::max(0.0, disc);
    return 0.5 * (e + std::sqrt(disc));
}

/// min over the candidate T's of eta_sharp.
inline double eta_sharp_ub(Instance& inst, double lambda, double xi)
{
    double best = std::numeric_limits<double>::infinity();
    for (const Candidate& c : default_candidates(inst.truth().beta_star, lambda))
        best = std::min(best, eta_sharp(inst, lambda, xi, c.t_set));
    return best;
}

/// The default nu grid {0.02, 0.04, ..., 0.98}.
inline std::vector<double> default_nu_grid()
{
    std::vector<double> g;
    for (int i = 1; i <= 49; ++i) g.push_back(0.02 * i);
    return g;
}

/**
 * (xi+1) min_T min_nu max[|beta*_{T^c}|_1 / nu, lambda |T| / (2(1-nu)) / kappa^2((xi+nu)/(1-nu), T)]
 * over candidate sets T and a nu grid. Using the certified kappa lower bound
 * and a finite family keeps this an upper bound on the exact minimum.
 */
inline double mu_ub(Instance& inst, double lambda, double xi,
                    const std::vector<IndexSet>* t_candidates = nullptr,
                    const std::vector<double>& nu_grid = default_nu_grid())
{
    const Vector& b = inst.truth().beta_star;
    std::vector<IndexSet> local;
    if (!t_candidates) {
        for (const Candidate& c : default_candidates(b, lambda)) local.push_back(c.t_set);
        t_candidates = &local;
    }
    std::vector<double> nus = nu_grid;
    std::sort(nus.begin(), nus.end());
    if (nus.empty() || !(nus.front() > 0.0) || !(nus.back() < 1.0))
        throw InvalidArgument("nu grid must lie in (0, 1)");
    const double total = b.lpNorm<1>();
    double best = std::numeric_limits<double>::infinity();
    for (const IndexSet& t : *t_candidates) {
        double off = total;
        for (Index j : t) off -= std::fabs(b(j));
        off = std::max(0.0, off);
        auto second = [&](double nu) {
            if (t.empty() || lambda == 0.0) return 0.0;
            const double kl = inst.kappa().lower(t, (xi + nu) / (1.0 - nu));
            if (!(kl > 0.0)) return std::numeric_limits<double>::infinity();
            return lambda * static_cast<double>(t.size()) / (2.0 * (1.0 - nu)) / (kl * kl);
        };
        auto value = [&](std::size_t i) { return std::max(off / nus[i], second(nus[i])); };
        double v;
        if (off == 0.0) {
            v = second(nus.front());
        } else if (t.empty() || lambda == 0.0) {
            v = off / nus.back();
        } else {
            // first term decreases in nu and the second increases: bisect the crossing
            std::size_t lo = 0, hi = nus.size() - 1;
            if (off / nus[lo] <= second(nus[lo])) {
                v = value(lo);
            } else if (off / nus[hi] >= second(nus[hi])) {
                v = value(hi);
            } else {
                while (hi - lo > 1) {
                    const std::size_t mid = (lo + hi) / 2;
                    if (off / nus[mid] >= second(nus[mid]))
                        lo = mid;
                    else
                        hi = mid;
                }
                v = std::min(value(lo), value(hi));
            }
        }
        best = std::min(best, v);
    }
    return (xi + 1.0) * best;
}

// ---------------------------------------------------------------------------
// noise projections

enum class SigmaMode {
    projection,  ///< |P_B eps| / sqrt(n), P_B the projection onto span{x_j : j in B}
    coordinate,  ///< |eps_B| / sqrt(n), B read as row indices (requires p <= n)
};

struct SigmaStarM {
    double value = 0.0;
    bool exact = true;  ///< false: an upper bound replaced the enumeration
};

/**
 * sigma*_{m,S} = max over B containing S with |B \ S| = m of the noise mass
 * captured by B. Projection norms grow with B, so when the enumeration
 * exceeds `budget` the projection onto all columns (or |eps| when p >= n)
 * is returned as an upper bound.
 */
inline SigmaStarM sigma_star_m(const Instance& inst, std::size_t m, const IndexSet& s_set,
                               SigmaMode mode = SigmaMode::projection,
                               double budget = kEnumerationBudget)
{
    const Dataset& data = inst.data();
    const double n = static_cast<double>(data.n());
    const Vector& eps = inst.noise();
    const IndexSet rest = complement(s_set, data.p());
    const std::size_t k = std::min(m, rest.size());
    SigmaStarM out;
    if (mode == SigmaMode::coordinate) {
        if (data.p() > data.n()) throw InvalidArgument("coordinate reading needs p <= n");
        double base = 0.0;
        for (Index j : s_set) base += eps(j) * eps(j);
        std::vector<double> sq;
        for (Index j : rest) sq.push_back(eps(j) * eps(j));
        std::sort(sq.begin(), sq.end(), std::greater<double>());
        for (std::size_t i = 0; i < k; ++i) base += sq[i];
        out.value = std::sqrt(base / n);
        return out;
    }
    if (binomial(rest.size(), k) > budget) {
        out.exact = false;
        if (data.p() < data.n()) {
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod(data.x());
            cod.setThreshold(1e-10);
            const Vector fitted = data.x() * cod.solve(eps);
            out.value = fitted.norm() / std::sqrt(n);
        } else {
            out.value = eps.norm() / std::sqrt(n);
        }
        return out;
    }
    // |P_B eps|^2 = n c_B' G_BB^+ c_B with c = X'eps/n
    const Vector& c = inst.score();
    const Matrix& g = inst.gram();
    double best = 0.0;
    for_each_subset(rest, k, [&](const IndexSet& extra) {
        const IndexSet B = set_union(s_set, extra);
        if (B.empty()) return;
        const Matrix gb = gather(g, B, B);
        const Vector cb = gather(c, B);
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gb);
        cod.setThreshold(1e-10);
        best = std::max(best, cb.dot(cod.solve(cb)));
    });
    out.value = std::sqrt(std::max(0.0, best));
    return out;
}

// ---------------------------------------------------------------------------
// t tail

/// eps_m = sqrt(2/(m-1)) Gamma((m+1)/2) / Gamma(m/2) - 1.
inline double t_tail_eps(double m)
{
    if (!(m > 1.0)) throw InvalidArgument("eps_m needs m > 1");
    return std::exp(0.5 * std::log(2.0 / (m - 1.0)) + std::lgamma(0.5 * (m + 1.0)) - std::lgamma(0.5 * m)) - 1.0;
}

struct TailBound {
    double threshold = 0.0;  ///< m (exp(2t^2/(m-1)) - 1)
    double bound = 0.0;      ///< (1 + eps_m) exp(-t^2) / (sqrt(pi) t)
};

/// pr[T_m^2 > threshold] <= bound for a t variable with m degrees of freedom.
inline TailBound t_tail_bound(double m, double t)
{
    if (!(m >= 3.0)) throw InvalidArgument("t tail bound needs m >= 3");
    if (!(t > 0.0)) throw InvalidArgument("t tail bound needs t > 0");
    TailBound out;
    out.threshold = m * std::expm1(2.0 * t * t / (m - 1.0));
    out.bound = (1.0 + t_tail_eps(m)) * std::exp(-t * t) / (std::sqrt(M_PI) * t);
    return out;
}

} // namespace scaledreg::theory
