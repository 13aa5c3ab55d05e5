#pragma once
#include <cmath>
#include <string>
#include <vector>

#include <scaledreg/core.hpp>
#include <scaledreg/parallel.hpp>
#include <scaledreg/path.hpp>
#include <scaledreg/postsel.hpp>
#include <scaledreg/rng.hpp>
#include <scaledreg/scaled.hpp>
#include <scaledreg/theory/checks.hpp>

namespace scaledreg::theory {

struct SuiteOptions {
    std::string suite = "all";  ///< thm1|thm2|thm3|thm4|cor1|basic|tails|all
    int instances = 1000;
    std::uint64_t seed = 7;
    Index n = 100;
    Index p = 20;
    std::size_t s = 3;
    std::vector<double> xis{1.5, 2.0, std::sqrt(2.0)};
    Corollary1Options cor1{};
    Theorem3Options thm3{0, SigmaMode::projection, 2e5};
    long tail_draws = 10000;     ///< noise draws for the two design-based tail checks
    long t_draws = 1000000;      ///< t draws per (m, t) pair
    unsigned threads = 0;
};

struct SuiteResult {
    std::vector<TheoryReport> reports;
    int violations = 0;
    int event_true = 0;
    int checks = 0;
    int uncounted_failures = 0;
};

/// One member of the standing small-instance family, with its truth.
struct SuiteInstance {
    Dataset data;
    TruthSpec truth;
    double lambda0 = 0.0;
    double noise_in_span = 1.0;  ///< scale on the part of the noise inside span(X)
};

/**
 * Orthogonal (a quarter) or equicorrelated Gaussian design with rho = 0.6 U^2
 * and unit column scale; |S| coefficients of size in [0.5, 2] with random
 * signs; sigma = 1.
 * Half of the instances shrink the noise component inside span(X) and a
 * quarter use lambda0 = 2 sqrt(2 log p / n), the rest lambda0 in [0.05, 0.3],
 * so that the oracle events are true on a sizable share of the family.
 */
inline SuiteInstance make_suite_instance(std::uint64_t seed, int index, const SuiteOptions& opt = {})
{
    SeededRng rng(seed, static_cast<std::uint64_t>(index));
    const Index n = opt.n, p = opt.p;
    const bool orthogonal = rng.uniform() < 0.25 && n >= p;
    const double u = rng.uniform();
    const double rho = orthogonal ? 0.0 : 0.6 * u * u;
    Matrix z = gaussian_matrix(rng, n, p);
    const Vector common = gaussian_vector(rng, n);
    Matrix x;
    if (orthogonal) {
        Eigen::HouseholderQR<Matrix> zq(z);
        x = std::sqrt(static_cast<double>(n)) * (zq.householderQ() * Matrix::Identity(n, p));
    } else {
        x = std::sqrt(1.0 - rho) * z + std::sqrt(rho) * common.replicate(1, p);
    }
    x = standardize_columns(x).first;

    Vector beta = Vector::Zero(p);
    IndexSet pool(static_cast<std::size_t>(p));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (std::size_t k = 0; k < opt.s && k < pool.size(); ++k) {
        const std::size_t pick = k + rng.uniform_int(pool.size() - k);
        std::swap(pool[k], pool[pick]);
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        beta(pool[k]) = sign * (0.5 + 1.5 * rng.uniform());
    }

    const Vector g = gaussian_vector(rng, n);
    Eigen::HouseholderQR<Matrix> qr(x);
    const Matrix q = qr.householderQ() * Matrix::Identity(n, p);
    const Vector in_span = q * (q.transpose() * g);
    SuiteInstance out;
    out.noise_in_span = rng.uniform() < 0.5 ? 1.0 : 0.3 * rng.uniform();
    const Vector eps = out.noise_in_span * in_span + (g - in_span);

    out.lambda0 = rng.uniform() < 0.25
                      ? 2.0 * std::sqrt(2.0 * std::log(static_cast<double>(p)) / static_cast<double>(n))
                      : 0.05 + 0.25 * rng.uniform();
    out.truth = TruthSpec{beta, 1.0};
    out.data = Dataset(x, x * beta + eps, false);
    return out;
}

inline bool suite_selected(const std::string& chosen, const std::string& name)
{
    return chosen == "all" || chosen == name;
}

/// Tight exact-lookup fit used by every oracle check.
inline ScaledOptions verify_fit_options()
{
    ScaledOptions o;
    o.lookup = Lookup::exact;
    o.tol = 1e-10;
    o.max_iter = 1000;
    o.solver.tol = 1e-10;
    o.solver.max_sweeps = 200000;
    return o;
}

/// All instance-level reports for one member of the family.
inline std::vector<TheoryReport> run_instance(const SuiteOptions& opt, int index)
{
    const SuiteInstance si = make_suite_instance(opt.seed, index, opt);
    Instance inst(si.data, si.truth);
    std::vector<TheoryReport> out;
    const bool need_fit = suite_selected(opt.suite, "thm1") || suite_selected(opt.suite, "thm2") ||
                          suite_selected(opt.suite, "thm3") || suite_selected(opt.suite, "cor1") ||
                          suite_selected(opt.suite, "basic");
    ScaledFit fit;
    if (need_fit) fit = scaled_fit(si.data, si.lambda0, PenaltySpec::l1(), verify_fit_options());

    auto tag = [&](TheoryReport r) {
        r.instance = index;
        r.extra["noise_in_span"] = si.noise_in_span;
        out.push_back(std::move(r));
    };

    for (double xi : opt.xis) {
        if (suite_selected(opt.suite, "thm1")) tag(check_theorem1(inst, fit, xi));
        if (suite_selected(opt.suite, "thm2")) tag(check_theorem2(inst, fit, xi));
        if (suite_selected(opt.suite, "cor1")) tag(check_corollary1(inst, fit, xi, opt.cor1));
        if (suite_selected(opt.suite, "thm3")) {
            const PostSelectionFit post = lse_after_selection(si.data, support_of(fit.beta));
            tag(check_theorem3(inst, fit, post, xi, opt.thm3));
        }
        if (suite_selected(opt.suite, "thm4")) {
            const double lam = 1.05 * (xi + 1.0) / (xi - 1.0) * inst.score().cwiseAbs().maxCoeff();
            const PathPoint pt = solve_fixed_lambda(si.data, lam, PenaltySpec::l1(), Vector(), 1e-11, 200000);
            TheoryReport r = check_theorem4(inst, lam, pt.beta, xi);
            r.extra["kkt_residual"] = pt.kkt_residual;
            tag(std::move(r));
        }
    }

    if (suite_selected(opt.suite, "basic")) {
        TheoryReport r;
        r.suite = "basic";
        r.lambda0 = si.lambda0;
        r.sigma_star = inst.sigma_star();
        r.z_star = inst.z_star();
        r.event = true;
        SeededRng wr(opt.seed ^ 0xb5a1c0ffeeULL, static_cast<std::uint64_t>(index));
        Vector w_rand = Vector::Zero(si.data.p());
        for (int k = 0; k < 3; ++k)
            w_rand(static_cast<Index>(wr.uniform_int(static_cast<std::uint64_t>(si.data.p())))) = wr.normal();
        const std::pair<const char*, Vector> ws[] = {
            {"basic.w=beta_star", si.truth.beta_star}, {"basic.w=beta_hat", fit.beta}, {"basic.w=random", w_rand}};
        for (const auto& [name, w] : ws) {
            const BasicInequality b = basic_inequality(inst, fit.beta, fit.lambda_beta, w);
            r.add(name, b.lhs, b.rhs);
        }
        tag(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// tail probabilities

struct Proportion {
    double estimate = 0.0;
    double se = 0.0;
};

inline Proportion proportion(long hits, long draws)
{
    Proportion p;
    p.estimate = static_cast<double>(hits) / static_cast<double>(draws);
    p.se = std::sqrt(p.estimate * (1.0 - p.estimate) / static_cast<double>(draws));
    return p;
}

/// pr[T_m^2 > threshold] against its bound, for each (m, t).
inline TheoryReport t_tail_report(std::uint64_t seed, long draws,
                                  const std::vector<std::pair<double, double>>& cases = {
                                      {10.0, 1.5}, {50.0, 2.0}, {200.0, 2.0}, {50.0, 3.0}})
{
    TheoryReport r;
    r.suite = "tails";
    r.event = true;
    int c = 0;
    for (const auto& [m, t] : cases) {
        SeededRng rng(seed, 1000 + static_cast<std::uint64_t>(c++));
        const TailBound tb = t_tail_bound(m, t);
        long hits = 0;
        for (long i = 0; i < draws; ++i) {
            const double v = rng.student_t(m);
            if (v * v > tb.threshold) ++hits;
        }
        const Proportion pr = proportion(hits, draws);
        char name[64];
        std::snprintf(name, sizeof name, "tails.t.m=%g.t=%g", m, t);
        r.add(name, pr.estimate, tb.bound + 3.0 * pr.se);
    }
    return r;
}

/**
 * With beta* = 0, xi = 2, eps = 0.1 and lambda0 = sqrt(2 log(p/eps)/n)(xi+1)/(xi-1),
 * the complement of the event is {z* > sqrt(2 log(p/eps)/n)}. Each |z_j| is a
 * t statistic with n-1 degrees of freedom, so the union bound with the t tail
 * gives a finite-sample ceiling next to the asymptotic eps/sqrt(pi log(p/eps)).
 */
inline TheoryReport noise_event_report(std::uint64_t seed, long draws, Index n = 100, Index p = 20,
                                       double eps_level = 0.1)
{
    TheoryReport r;
    r.suite = "tails";
    r.event = true;
    SeededRng design(seed, 2000);
    const Matrix x = standardize_columns(gaussian_matrix(design, n, p)).first;
    const double nn = static_cast<double>(n);
    const double lp = std::log(static_cast<double>(p) / eps_level);
    const double c = std::sqrt(2.0 * lp / nn);
    long hits = 0;
    SeededRng rng(seed, 2001);
    for (long i = 0; i < draws; ++i) {
        const Vector e = gaussian_vector(rng, n);
        const double zs = (x.transpose() * e).cwiseAbs().maxCoeff() / (nn * e.norm() / std::sqrt(nn));
        if (zs > c) ++hits;
    }
    const Proportion pr = proportion(hits, draws);
    const double asym = eps_level / std::sqrt(M_PI * lp);
    r.add("tails.noise_event.asymptotic_x1.2", pr.estimate, 1.2 * asym);
    // |z_j| > c  <=>  T_{n-1}^2 > (n-1) c^2/(1-c^2); match the threshold form of the t tail
    const double m = nn - 1.0;
    const double t = std::sqrt(-0.5 * (m - 1.0) * std::log1p(-c * c));
    const double finite = static_cast<double>(p) * t_tail_bound(m, t).bound;
    r.add("tails.noise_event.finite_sample", pr.estimate, finite + 3.0 * pr.se);
    r.extra["asymptotic_bound"] = asym;
    r.extra["finite_sample_bound"] = finite;
    return r;
}

/**
 * pr[sigma*_{m,S} sqrt(n)/sigma >= sqrt(m+|S|) + sqrt(2m log(ep/m) + 2 log(1/eps))]
 * against eps/(m sqrt(2 pi)) on a fixed design with S = {0, .., s-1}.
 */
inline TheoryReport sigma_m_tail_report(std::uint64_t seed, long draws, Index n = 100, Index p = 20,
                                        std::size_t s = 3, const std::vector<std::size_t>& ms = {1, 2, 3},
                                        double eps_level = 0.1)
{
    TheoryReport r;
    r.suite = "tails";
    r.event = true;
    SeededRng design(seed, 3000);
    const Matrix x = standardize_columns(gaussian_matrix(design, n, p)).first;
    const double nn = static_cast<double>(n);
    const Matrix g = x.transpose() * x / nn;
    IndexSet sset(s);
    std::iota(sset.begin(), sset.end(), Index{0});
    const IndexSet rest = complement(sset, p);

    for (std::size_t m : ms) {
        // one Cholesky factor per B; |P_B e|^2 = n |L^{-1} c_B|^2 with c = X'e/n
        std::vector<IndexSet> blocks;
        std::vector<Eigen::LLT<Matrix>> factors;
        for_each_subset(rest, m, [&](const IndexSet& extra) {
            blocks.push_back(set_union(sset, extra));
            factors.emplace_back(gather(g, blocks.back(), blocks.back()));
        });
        const double md = static_cast<double>(m);
        const double thr = std::sqrt(md + static_cast<double>(s)) +
                           std::sqrt(2.0 * md * std::log(M_E * static_cast<double>(p) / md) +
                                     2.0 * std::log(1.0 / eps_level));
        SeededRng rng(seed, 3001 + m);
        long hits_proj = 0, hits_coord = 0;
        std::vector<double> sq(rest.size());
        for (long i = 0; i < draws; ++i) {
            const Vector e = gaussian_vector(rng, n);
            const Vector cvec = x.transpose() * e / nn;
            double best = 0.0;
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                const Vector cb = gather(cvec, blocks[b]);
                best = std::max(best, factors[b].matrixL().solve(cb).squaredNorm());
            }
            if (std::sqrt(nn * best) >= thr) ++hits_proj;
            double base = 0.0;
            for (Index j : sset) base += e(j) * e(j);
            for (std::size_t k = 0; k < rest.size(); ++k) sq[k] = e(rest[k]) * e(rest[k]);
            std::partial_sort(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(m), sq.end(),
                              std::greater<double>());
            for (std::size_t k = 0; k < m; ++k) base += sq[k];
            if (std::sqrt(base) >= thr) ++hits_coord;
        }
        const double bound = eps_level / (md * std::sqrt(2.0 * M_PI));
        const Proportion pp = proportion(hits_proj, draws), pc = proportion(hits_coord, draws);
        r.add("tails.sigma_m.projection.m=" + std::to_string(m), pp.estimate, bound + 3.0 * pp.se);
        r.add("tails.sigma_m.coordinate.m=" + std::to_string(m), pc.estimate, bound + 3.0 * pc.se);
    }
    return r;
}

inline void tally(SuiteResult& res)
{
    res.violations = res.event_true = res.checks = res.uncounted_failures = 0;
    for (const TheoryReport& r : res.reports) {
        if (r.event) ++res.event_true;
        res.checks += static_cast<int>(r.checks.size());
        res.violations += r.violations();
        for (const Check& c : r.checks)
            if (!c.pass && !c.counted) ++res.uncounted_failures;
    }
}

/// Runs the selected suite over `instances` seeded members, in parallel.
inline SuiteResult run_suite(const SuiteOptions& opt)
{
    static const char* known[] = {"all", "thm1", "thm2", "thm3", "thm4", "cor1", "basic", "tails"};
    if (std::find(std::begin(known), std::end(known), opt.suite) == std::end(known))
        throw InvalidArgument("unknown suite '" + opt.suite + "'");
    if (opt.instances < 0) throw InvalidArgument("instances must be nonnegative");
    SuiteResult res;
    if (opt.suite != "tails") {
        std::vector<std::vector<TheoryReport>> slots(static_cast<std::size_t>(opt.instances));
        parallel_for(slots.size(), resolve_threads(static_cast<int>(opt.threads)),
                     [&](std::size_t i) { slots[i] = run_instance(opt, static_cast<int>(i)); });
        for (auto& v : slots)
            for (auto& r : v) res.reports.push_back(std::move(r));
    }
    if (suite_selected(opt.suite, "tails")) {
        res.reports.push_back(t_tail_report(opt.seed, opt.t_draws));
        res.reports.push_back(noise_event_report(opt.seed, opt.tail_draws));
        res.reports.push_back(sigma_m_tail_report(opt.seed, opt.tail_draws));
    }
    tally(res);
    return res;
}

} // namespace scaledreg::theory
