#pragma once
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <scaledreg/core.hpp>
#include <scaledreg/postsel.hpp>
#include <scaledreg/scaled.hpp>
#include <scaledreg/theory/factors.hpp>
#include <scaledreg/theory/oracle.hpp>

namespace scaledreg::theory {

/// Additive slack on every bound check.
inline constexpr double kSlack = 1e-9;

/// One inequality "observed <= bound" evaluated on an instance.
struct Check {
    std::string name;
    double observed = 0.0;
    double bound = 0.0;
    bool pass = true;
    bool counted = true;  ///< false when an input is only an estimate
    std::string note;
};

struct TheoryReport {
    std::string suite;
    int instance = -1;
    double xi = 0.0;
    double lambda0 = 0.0;
    double sigma_star = 0.0;
    double z_star = 0.0;
    double kappa = std::numeric_limits<double>::quiet_NaN();  ///< certified lower bound of kappa(xi, S)
    double eta_star_ub = std::numeric_limits<double>::quiet_NaN();
    double tau0_ub = std::numeric_limits<double>::quiet_NaN();
    double mu_ub = std::numeric_limits<double>::quiet_NaN();
    double tau_star_ub = std::numeric_limits<double>::quiet_NaN();
    bool event_thm1 = false;
    bool event_thm2 = false;
    bool event = false;  ///< the event gating this report's checks
    std::vector<Check> checks;
    std::map<std::string, double> extra;

    void add(const std::string& name, double observed, double bound, bool counted = true,
             const std::string& note = "")
    {
        Check c;
        c.name = name;
        c.observed = observed;
        c.bound = bound;
        c.pass = observed <= bound + kSlack;
        c.counted = counted;
        if (!c.pass) c.note = note.empty() && !counted ? "counterexample-or-estimate-error" : note;
        checks.push_back(std::move(c));
    }

    /// Failed checks whose inputs are all certified.
    int violations() const
    {
        int v = 0;
        for (const Check& c : checks)
            if (!c.pass && c.counted) ++v;
        return v;
    }
};

namespace detail {

inline void require_l1_a0(const ScaledFit& fit)
{
    if (!fit.penalty.is_l1()) throw InvalidArgument("oracle checks need an l1 fit");
    if (fit.a != 0.0) throw InvalidArgument("oracle checks need a = 0");
}

inline void fill_common(TheoryReport& r, Instance& inst, double xi, double lambda0)
{
    r.xi = xi;
    r.lambda0 = lambda0;
    r.sigma_star = inst.sigma_star();
    r.z_star = inst.z_star();
    const IndexSet& s = inst.support();
    if (!s.empty() && s.size() <= 12) r.kappa = inst.kappa().lower(s, xi);
}

inline double l1_dist(const Vector& a, const Vector& b) { return (a - b).lpNorm<1>(); }

/// (1 - tau*^2) with tau*^2 = lambda0 mu_ub(sigma* lambda0) / sigma*.
inline double tau_star_sq(Instance& inst, double xi, double lambda0, double& mu_out)
{
    const double ss = inst.sigma_star();
    mu_out = mu_ub(inst, ss * lambda0, xi);
    return lambda0 * mu_out / ss;
}

} // namespace detail

/**
 * Sigma and prediction bounds gated by z* <= (1 - tau0) lambda0 (xi-1)/(xi+1),
 * with tau0 = sqrt(eta*_ub(sigma* lambda0)) / sigma*.
 */
inline TheoryReport check_theorem1(Instance& inst, const ScaledFit& fit, double xi)
{
    detail::require_l1_a0(fit);
    TheoryReport r;
    r.suite = "thm1";
    detail::fill_common(r, inst, xi, fit.lambda0);
    const double ss = r.sigma_star, lam0 = fit.lambda0;
    r.eta_star_ub = eta_star_ub(inst, ss * lam0, xi);
    r.tau0_ub = std::sqrt(r.eta_star_ub) / ss;
    r.event_thm1 = r.tau0_ub < 1.0 && r.z_star <= (1.0 - r.tau0_ub) * lam0 * (xi - 1.0) / (xi + 1.0);
    r.event = r.event_thm1;
    if (!r.event) return r;
    const Dataset& d = inst.data();
    const double t0 = r.tau0_ub;
    r.add("thm1.sigma", std::max(1.0 - fit.sigma / ss, 1.0 - ss / fit.sigma), t0);
    const double pred = (d.x() * (fit.beta - inst.truth().beta_star)).norm() /
                        (std::sqrt(static_cast<double>(d.n())) * ss);
    r.add("thm1.prediction", pred, t0 / (1.0 - t0));
    const double mid = std::sqrt(eta_star_ub(inst, ss * lam0 / (1.0 - t0), xi)) / ss;
    r.add("thm1.prediction_eta", pred, mid);
    return r;
}

/// Sigma and l1 bounds gated by z* <= (1 - tau*^2) lambda0 (xi-1)/(xi+1).
inline TheoryReport check_theorem2(Instance& inst, const ScaledFit& fit, double xi)
{
    detail::require_l1_a0(fit);
    TheoryReport r;
    r.suite = "thm2";
    detail::fill_common(r, inst, xi, fit.lambda0);
    const double lam0 = fit.lambda0;
    double mu = 0.0;
    const double t2 = detail::tau_star_sq(inst, xi, lam0, mu);
    r.mu_ub = mu;
    r.tau_star_ub = std::sqrt(t2);
    r.event_thm2 = t2 < 1.0 && r.z_star <= (1.0 - t2) * lam0 * (xi - 1.0) / (xi + 1.0);
    r.event = r.event_thm2;
    if (!r.event) return r;
    const double ss = r.sigma_star;
    r.add("thm2.sigma", std::max(1.0 - fit.sigma / ss, 1.0 - ss / fit.sigma), t2);
    r.add("thm2.l1", detail::l1_dist(fit.beta, inst.truth().beta_star), mu / (1.0 - t2));
    return r;
}

struct Corollary1Options {
    std::vector<double> q_list{1.0, 2.0, std::numeric_limits<double>::infinity()};
    long f_samples = 2000;  ///< sampling budget for the F_q estimate; 0 = documented protocol, < 0 = skip
    double budget = kEnumerationBudget;
};

inline std::string q_label(double q)
{
    if (std::isinf(q)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", q);
    return buf;
}

/**
 * l_q bounds with F_q. Counted checks use the certified lower bound
 * F_q >= |S|^{1/q-1} kappa^2/(1+xi); checks using the sampled estimate are
 * counted only when the exhaustive protocol ran.
 */
inline TheoryReport check_corollary1(Instance& inst, const ScaledFit& fit, double xi,
                                     const Corollary1Options& opt = {})
{
    detail::require_l1_a0(fit);
    TheoryReport r;
    r.suite = "cor1";
    detail::fill_common(r, inst, xi, fit.lambda0);
    const IndexSet& s = inst.support();
    if (s.empty() || s.size() > 12 || opt.q_list.empty()) return r;
    const double lam0 = fit.lambda0, ss = r.sigma_star;
    double mu = 0.0;
    const double t2 = detail::tau_star_sq(inst, xi, lam0, mu);
    r.mu_ub = mu;
    r.tau_star_ub = std::sqrt(t2);
    r.event_thm2 = t2 < 1.0 && r.z_star <= (1.0 - t2) * lam0 * (xi - 1.0) / (xi + 1.0);
    r.event = r.event_thm2;
    if (!r.event) return r;
    const double k = static_cast<double>(s.size());
    const Vector h = fit.beta - inst.truth().beta_star;
    const double kl = r.kappa;

    for (double q : opt.q_list) {
        const double kq = std::isinf(q) ? 1.0 : std::pow(k, 1.0 / q);
        const double obs = lq_norm(h, q);
        const std::string tag = "cor1.q=" + q_label(q);
        const double f_lb = cone_factor_lower(kl, s.size(), xi, q);
        r.add(tag + ".first", obs, kq * (ss * r.z_star + fit.sigma * lam0) / f_lb);
        r.add(tag + ".second", obs, 2.0 * ss * xi * lam0 * kq / ((1.0 - t2) * (xi + 1.0) * f_lb));
        if (opt.f_samples >= 0) {
            const ConeFactor f = cone_invertibility_factor(inst.gram(), s, xi, q, opt.f_samples);
            r.extra["F_est_q=" + q_label(q)] = f.estimate;
            r.add(tag + ".first.F_est", obs, kq * (ss * r.z_star + fit.sigma * lam0) / f.estimate,
                  f.certified, "counterexample-or-F_q-underestimate");
        }
    }

    // the l1 and sigma bounds with mu replaced by lambda |S| 2 xi / ((xi+1) F_1)
    {
        const double f1 = cone_factor_lower(kl, s.size(), xi, 1.0);
        const double mu1 = ss * lam0 * k * 2.0 * xi / ((xi + 1.0) * f1);
        const double t21 = lam0 * mu1 / ss;
        if (t21 < 1.0 && r.z_star <= (1.0 - t21) * lam0 * (xi - 1.0) / (xi + 1.0)) {
            r.add("cor1.thm2_sigma", std::max(1.0 - fit.sigma / ss, 1.0 - ss / fit.sigma), t21);
            r.add("cor1.thm2_l1", h.lpNorm<1>(), mu1 / (1.0 - t21));
        }
    }

    if (std::fabs(xi - std::sqrt(2.0)) < 1e-12) {
        const double f2 = cone_factor_lower(kl, s.size(), xi, 2.0);
        const double c = lam0 * ss / (1.0 - t2) / (std::sqrt(2.0) + 1.0);
        r.add("cor1.eigen.F2", h.norm(), std::sqrt(8.0 * k) * c / f2);
        const double a = 1.5 * k, b = 2.0 * k;
        try {
            const double dm = sparse_eigenvalues(inst.gram(), a, opt.budget).delta_minus;
            double th;
            try {
                th = theta(inst.gram(), b, a, opt.budget);
            } catch (const BudgetExceeded&) {
                th = theta_upper(inst.gram(), b, a, opt.budget);
                r.extra["theta_is_upper_bound"] = 1.0;
            }
            const double denom = std::max(0.0, 1.0 - dm - th);
            r.extra["delta_minus"] = dm;
            r.extra["theta"] = th;
            r.add("cor1.eigen.src", h.norm(),
                  denom > 0.0 ? 4.0 * std::sqrt(k) * c / denom : std::numeric_limits<double>::infinity());
        } catch (const BudgetExceeded&) {
            r.extra["eigen_skipped_budget"] = 1.0;
        }
    }
    return r;
}

struct Theorem3Options {
    std::size_t m = 6;          ///< 0 selects the smallest m meeting the precondition
    SigmaMode sigma_mode = SigmaMode::projection;
    double budget = kEnumerationBudget;
};

/**
 * Post-selection bounds. The precondition |S| xi^2 / kappa^2 < m / kappa+(m, S)
 * is evaluated with the certified kappa lower bound and exact kappa+, so it
 * can only be stricter than the exact one. Checks run when both the
 * precondition and the event of check_theorem2 hold.
 */
inline TheoryReport check_theorem3(Instance& inst, const ScaledFit& fit, const PostSelectionFit& post,
                                   double xi, const Theorem3Options& opt = {})
{
    detail::require_l1_a0(fit);
    TheoryReport r;
    r.suite = "thm3";
    detail::fill_common(r, inst, xi, fit.lambda0);
    const IndexSet& s = inst.support();
    if (s.empty() || s.size() > 12) return r;
    const Dataset& d = inst.data();
    const double kl = r.kappa;
    const double lhs = static_cast<double>(s.size()) * xi * xi / (kl * kl);
    const std::size_t max_m = static_cast<std::size_t>(d.p()) - s.size();

    // kappa+(m, S) <= lambda_max(G over S^c) and <= 1 + the m-1 largest |G_ij| in a row of S^c;
    // an upper bound on kappa+ only makes the precondition stricter.
    const IndexSet sc = complement(s, d.p());
    const Matrix gsc = gather(inst.gram(), sc, sc);
    const double lmax_sc = Eigen::SelfAdjointEigenSolver<Matrix>(gsc, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    std::vector<std::vector<double>> rows(sc.size());
    for (std::size_t i = 0; i < sc.size(); ++i) {
        for (std::size_t j = 0; j < sc.size(); ++j)
            if (i != j) rows[i].push_back(std::fabs(gsc(static_cast<Index>(i), static_cast<Index>(j))));
        std::sort(rows[i].begin(), rows[i].end(), std::greater<double>());
    }
    auto cheap_kplus = [&](std::size_t m) {
        double g = 0.0;
        for (const auto& row : rows) {
            double acc = 1.0;
            for (std::size_t k = 0; k + 1 < m && k < row.size(); ++k) acc += row[k];
            g = std::max(g, acc);
        }
        return std::min(lmax_sc, g);
    };
    auto greedy_kplus = [&](std::size_t m) {
        IndexSet chosen;
        double top = 0.0;
        for (std::size_t step = 0; step < m && step < sc.size(); ++step) {
            Index pick = -1;
            double best = -1.0;
            for (Index j = 0; j < static_cast<Index>(sc.size()); ++j) {
                if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
                IndexSet trial = chosen;
                trial.insert(std::upper_bound(trial.begin(), trial.end(), j), j);
                const double v = Eigen::SelfAdjointEigenSolver<Matrix>(gather(gsc, trial, trial),
                                                                      Eigen::EigenvaluesOnly)
                                     .eigenvalues()
                                     .maxCoeff();
                if (v > best) {
                    best = v;
                    pick = j;
                }
            }
            chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), pick), pick);
            top = best;
        }
        return top;
    };
    bool kplus_exact = false;
    auto precondition = [&](std::size_t m, double& kplus) {
        if (!(kl > 0.0)) return false;
        kplus = cheap_kplus(m);
        kplus_exact = false;
        if (lhs < static_cast<double>(m) / kplus) return true;
        // any m-subset of S^c gives a lower bound on kappa+; a greedy one is usually close
        if (lhs >= static_cast<double>(m) / greedy_kplus(m)) return false;
        if (binomial(max_m, m) > opt.budget) return false;
        kplus = kappa_minus_plus(inst.gram(), m, s, opt.budget).kappa_plus;
        kplus_exact = true;
        return lhs < static_cast<double>(m) / kplus;
    };
    std::size_t m = opt.m;
    bool pre = false;
    double kplus = 0.0;
    if (m == 0) {
        for (std::size_t c = 1; c <= max_m && !pre; ++c) {
            if (precondition(c, kplus)) {
                m = c;
                pre = true;
            }
        }
    } else if (m <= max_m) {
        pre = precondition(m, kplus);
    }
    r.extra["m"] = static_cast<double>(m);
    r.extra["precondition"] = pre ? 1.0 : 0.0;
    if (pre) {
        r.extra["kappa_plus"] = kplus;
        r.extra["kappa_plus_exact"] = kplus_exact ? 1.0 : 0.0;
    }

    const double lam0 = fit.lambda0;
    double mu = 0.0;
    const double t2 = detail::tau_star_sq(inst, xi, lam0, mu);
    r.mu_ub = mu;
    r.tau_star_ub = std::sqrt(t2);
    r.event_thm2 = t2 < 1.0 && r.z_star <= (1.0 - t2) * lam0 * (xi - 1.0) / (xi + 1.0);
    r.event = pre && r.event_thm2;
    if (!r.event) return r;

    const IndexSet s_hat = support_of(fit.beta);
    const double fp = static_cast<double>(set_difference(s_hat, s).size());
    r.add("thm3.false_positive", fp, static_cast<double>(m) - 1.0);

    const double lam_hat = fit.sigma * lam0;
    const double eta_hat = eta_star_ub(inst, lam_hat, xi);
    r.eta_star_ub = eta_hat;
    const SigmaStarM sm = sigma_star_m(inst, m - 1, s, opt.sigma_mode, opt.budget);
    r.extra["sigma_star_m1"] = sm.value;
    r.extra["sigma_star_m1_exact"] = sm.exact ? 1.0 : 0.0;
    const double sb2 = post.sigma_bar * post.sigma_bar;
    const double sh2 = fit.sigma * fit.sigma;
    r.add("thm3.sigma_bar_upper", sb2, sh2);
    const double low = sm.value + std::sqrt(eta_hat);
    r.add("thm3.sigma_bar_lower", sh2 - low * low, sb2);

    const Vector hb = post.beta_bar - inst.truth().beta_star;
    const double pred = (d.x() * hb).squaredNorm() / static_cast<double>(d.n());
    try {
        const double km = kappa_minus_plus(inst.gram(), m - 1, s, opt.budget).kappa_minus;
        r.extra["kappa_minus"] = km;
        r.add("thm3.kappa_minus", km * hb.squaredNorm(), pred);
    } catch (const BudgetExceeded&) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(inst.gram(), Eigen::EigenvaluesOnly);
        const double km = std::max(0.0, es.eigenvalues()(0));
        r.extra["kappa_minus_lower"] = km;
        r.add("thm3.kappa_minus", km * hb.squaredNorm(), pred);
    }
    const double up = sm.value + 2.0 * std::sqrt(eta_hat);
    r.add("thm3.prediction", pred, up * up);
    return r;
}

/**
 * Fixed-penalty lasso bounds in the event |X'(y - X beta*)|_inf / n <= lambda (xi-1)/(xi+1):
 * |X h|^2/n <= min(eta*, sharp eta) and |h|_1 <= mu.
 */
inline TheoryReport check_theorem4(Instance& inst, double lambda, const Vector& beta_hat, double xi)
{
    TheoryReport r;
    r.suite = "thm4";
    r.xi = xi;
    r.sigma_star = inst.sigma_star();
    r.z_star = r.sigma_star > 0.0 ? inst.z_star() : 0.0;
    r.extra["lambda"] = lambda;
    const double score = inst.score().cwiseAbs().maxCoeff();
    r.event = score <= lambda * (xi - 1.0) / (xi + 1.0);
    if (!r.event) return r;
    const Dataset& d = inst.data();
    const Vector h = beta_hat - inst.truth().beta_star;
    const double pred = (d.x() * h).squaredNorm() / static_cast<double>(d.n());
    r.eta_star_ub = eta_star_ub(inst, lambda, xi);
    const double sharp = eta_sharp_ub(inst, lambda, xi);
    r.extra["eta_sharp_ub"] = sharp;
    r.mu_ub = mu_ub(inst, lambda, xi);
    r.add("thm4.prediction", pred, std::min(r.eta_star_ub, sharp));
    r.add("thm4.l1", h.lpNorm<1>(), r.mu_ub);
    return r;
}

struct BasicInequality {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = true;
};

/**
 * |X b - X beta*|^2/n + |X b - X w|^2/n
 *   <= |X w - X beta*|^2/n + 2 lambda (|w|_1 - |b|_1) + 2 sigma* z* |w - b|_1
 * for the lasso solution b at penalty lambda.
 */
inline BasicInequality basic_inequality(Instance& inst, const Vector& beta_hat, double lambda, const Vector& w)
{
    const Dataset& d = inst.data();
    const double n = static_cast<double>(d.n());
    const Vector& bstar = inst.truth().beta_star;
    const Vector xb = d.x() * beta_hat, xw = d.x() * w, xs = d.x() * bstar;
    BasicInequality out;
    out.lhs = (xb - xs).squaredNorm() / n + (xb - xw).squaredNorm() / n;
    out.rhs = (xw - xs).squaredNorm() / n + 2.0 * lambda * (w.lpNorm<1>() - beta_hat.lpNorm<1>()) +
              2.0 * inst.score().cwiseAbs().maxCoeff() * (w - beta_hat).lpNorm<1>();
    out.holds = out.lhs <= out.rhs + kSlack;
    return out;
}

/// The basic inequality at the fit's own penalty level (the lambda its beta solves).
inline bool basic_inequality_check(Instance& inst, const ScaledFit& fit, const Vector& w)
{
    return basic_inequality(inst, fit.beta, fit.lambda_beta, w).holds;
}

} // namespace scaledreg::theory
