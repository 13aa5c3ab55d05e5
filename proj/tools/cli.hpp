#pragma once
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <scaledreg/scaledreg.hpp>
#include <scaledreg/version.hpp>

namespace scaledreg::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2, kViolations = 3 };

/// Non-finite doubles become null so the output stays valid JSON.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json sparse_pairs(const Vector& v)
{
    json out = json::array();
    for (Index j = 0; j < v.size(); ++j)
        if (v(j) != 0.0) out.push_back({j, v(j)});
    return out;
}

struct Provenance {
    std::string command;
    std::vector<std::string> argv;
    std::uint64_t seed = 0;
    bool has_seed = false;

    json to_json() const
    {
        json p = {{"tool", "scaledreg"}, {"version", kVersion}, {"command", command}, {"argv", argv}};
        if (has_seed) p["seed"] = seed;
        return p;
    }

    /// CSV comment lines carrying the same data.
    std::string csv_header() const
    {
        std::ostringstream os;
        os << "# scaledreg " << kVersion << " " << command;
        if (has_seed) os << " seed=" << seed;
        os << "\n# argv:";
        for (const std::string& a : argv) os << ' ' << a;
        os << '\n';
        return os.str();
    }
};

/// Writes to `path`, or to `fallback` when path is empty or "-".
inline void emit(const std::string& path, const std::string& text, std::ostream& fallback)
{
    if (path.empty() || path == "-") {
        fallback << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw InvalidArgument("cannot write '" + path + "'");
    f << text;
}

inline std::string fmt(double v, int digits)
{
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// shared option groups

struct DataArgs {
    std::string x, y;
    int y_column = -1;
    bool header = false;
    bool no_standardize = false;
    bool center = false;

    void attach(CLI::App* app)
    {
        app->add_option("--x", x, "design matrix CSV")->required();
        app->add_option("--y", y, "response CSV (one column)");
        app->add_option("--y-column", y_column, "take y from this 0-based column of the X file");
        app->add_flag("--header", header, "skip the first row of each CSV");
        app->add_flag("--no-standardize", no_standardize, "keep columns as given");
        app->add_flag("--center", center, "centre y and columns first (intercept model)");
    }

    Dataset load() const
    {
        CsvOptions o;
        o.header = header;
        o.y_column = y_column;
        o.standardize = !no_standardize;
        o.center = center;
        if (y.empty() && y_column < 0) throw InvalidArgument("give --y or --y-column");
        return load_dataset(x, y, o);
    }
};

struct PenaltyArgs {
    std::string penalty = "l1";
    std::string gamma = "auto";

    void attach(CLI::App* app)
    {
        app->add_option("--penalty", penalty, "l1, mcp or scad")
            ->check(CLI::IsMember({"l1", "mcp", "scad"}));
        app->add_option("--gamma", gamma, "concavity for mcp/scad, a number or 'auto'");
    }

    PenaltySpec resolve(const Dataset& data) const
    {
        if (penalty == "l1") return PenaltySpec::l1();
        double g = 0.0;
        if (gamma == "auto") {
            g = auto_gamma(data);
            // the scad update needs gamma > 2; auto gamma is already >= 2
            if (penalty == "scad" && g <= 2.0) g = 2.0 + 1e-9;
        } else {
            try {
                std::size_t used = 0;
                g = std::stod(gamma, &used);
                if (used != gamma.size()) throw std::invalid_argument(gamma);
            } catch (const std::logic_error&) {
                throw InvalidArgument("--gamma must be a number or 'auto'");
            }
        }
        return penalty == "mcp" ? PenaltySpec::mcp(g) : PenaltySpec::scad(g);
    }
};

inline double resolve_lambda0(const std::string& spec, const Dataset& data)
{
    if (spec.rfind("auto-j", 0) == 0 && spec.size() == 7) {
        const int j = spec[6] - '0';
        return universal_lambda0(data.n(), data.p(), j);
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(spec, &used);
        if (used != spec.size()) throw std::invalid_argument(spec);
        if (!(v > 0.0)) throw InvalidArgument("lambda0 must be positive");
        return v;
    } catch (const std::logic_error&) {
        throw InvalidArgument("--lambda0 must be a number or auto-j1|auto-j2|auto-j3");
    }
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

// ---------------------------------------------------------------------------
// subcommands

struct FitArgs {
    DataArgs data;
    PenaltyArgs pen;
    std::string lambda0 = "auto-j2";
    double a = 0.0;
    std::string estimator = "scaled";
    std::string lookup = "grid";
    double tol = 1e-6;
    double solver_tol = 1e-7;
    bool post_lse = false;
    std::string out;
};

inline json fit_json(const Dataset& data, const ScaledFit& fit, const std::string& estimator)
{
    json j = {{"estimator", estimator},
              {"penalty", fit.penalty.name()},
              {"beta", sparse_pairs(fit.beta)},
              {"sigma", fit.sigma},
              {"lambda_hat", fit.lambda_hat},
              {"lambda0", fit.lambda0},
              {"lambda_beta", fit.lambda_beta},
              {"a", fit.a},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"residual_norm", (data.y() - data.x() * fit.beta).norm()},
              {"n", data.n()},
              {"p", data.p()}};
    if (!fit.penalty.is_l1()) j["gamma"] = fit.penalty.gamma();
    j["joint_loss"] = number(fit.joint_loss);
    return j;
}

inline int run_fit(const FitArgs& args, const Provenance& prov, std::ostream& out)
{
    const Dataset data = args.data.load();
    const PenaltySpec pen = args.pen.resolve(data);
    const double lam0 = resolve_lambda0(args.lambda0, data);
    ScaledOptions opt;
    opt.a = args.a;
    opt.tol = args.tol;
    opt.solver.tol = args.solver_tol;
    opt.lookup = args.lookup == "exact" ? Lookup::exact : Lookup::grid;
    ScaledFit fit;
    if (args.estimator == "scaled")
        fit = scaled_fit(data, lam0, pen, opt);
    else if (args.estimator == "pmle")
        fit = pmle_fit(data, lam0, pen, opt);
    else
        fit = bias_corrected_fit(data, lam0, pen, opt);
    json j = {{"schema", 1}, {"provenance", prov.to_json()}};
    j.update(fit_json(data, fit, args.estimator));
    if (args.post_lse) {
        const PostSelectionFit post = lse_after_selection(data, support_of(fit.beta));
        j["post"] = {{"beta_bar", sparse_pairs(post.beta_bar)},
                     {"sigma_bar", post.sigma_bar},
                     {"sigma_bar_adjusted",
                      post.sigma_bar_adjusted ? json(*post.sigma_bar_adjusted) : json(nullptr)},
                     {"support", post.support}};
    }
    emit(args.out, j.dump(2) + "\n", out);
    return kOk;
}

struct PathArgs {
    DataArgs data;
    PenaltyArgs pen;
    int grid_points = 100;
    double lambda_min_ratio = 1e-3;
    double tol = 1e-7;
    std::string out;
    std::string coef_json;
};

inline int run_path(const PathArgs& args, const Provenance& prov, std::ostream& out)
{
    const Dataset data = args.data.load();
    GridSpec grid;
    grid.n_points = args.grid_points;
    grid.lambda_min_ratio = args.lambda_min_ratio;
    SolverOptions so;
    so.tol = args.tol;
    const Path path = compute_path(data, args.pen.resolve(data), grid, so);
    std::ostringstream csv;
    csv << prov.csv_header() << "lambda,df,residual_norm,nonzero,kkt_residual\n";
    csv << std::setprecision(17);
    for (const PathPoint& pt : path.points)
        csv << pt.lambda << ',' << pt.support.size() << ',' << pt.residual_norm << ',' << pt.support.size()
            << ',' << pt.kkt_residual << '\n';
    emit(args.out, csv.str(), out);
    if (!args.coef_json.empty()) {
        json pts = json::array();
        for (const PathPoint& pt : path.points)
            pts.push_back({{"lambda", pt.lambda}, {"beta", sparse_pairs(pt.beta)}});
        json j = {{"schema", 1}, {"provenance", prov.to_json()}, {"penalty", path.penalty.name()}, {"points", pts}};
        emit(args.coef_json, j.dump(2) + "\n", out);
    }
    return kOk;
}

struct SimulateArgs {
    std::string design = "ex1";
    double r0 = 0.0;
    int reps = -1;
    std::string levels = "1,2,3";
    std::string estimators = "scaled-lasso,scaled-mcp,pmle,bc";
    std::string scale = "full";
    std::uint64_t seed = 1;
    int threads = 0;
    std::string lookup = "grid";
    std::string out;
    std::string raw;
};

inline int run_simulate(const SimulateArgs& args, const Provenance& prov, std::ostream& out)
{
    SimConfig c = SimConfig::preset(args.design == "ex1" ? Design::Example1 : Design::Example2, args.scale);
    c.r0 = args.r0;
    if (!(c.r0 >= 0.0 && c.r0 < 1.0)) throw InvalidArgument("--r0 must lie in [0, 1)");
    if (args.reps >= 0) c.replications = args.reps;
    c.levels.clear();
    for (const std::string& l : split_list(args.levels)) {
        const int v = std::atoi(l.c_str());
        if (v < 1 || v > 3 || l.size() != 1) throw InvalidArgument("--levels takes values in {1,2,3}");
        c.levels.push_back(v);
    }
    c.estimators.clear();
    for (const std::string& e : split_list(args.estimators)) c.estimators.push_back(parse_estimator(e));
    c.seed = args.seed;
    c.threads = resolve_threads(args.threads);
    c.fit.lookup = args.lookup == "exact" ? Lookup::exact : Lookup::grid;
    const SimTable table = run_replications(c);

    std::ostringstream csv;
    csv << prov.csv_header();
    csv << "# design=" << args.design << " r0=" << c.r0 << " n=" << c.n << " p=" << c.p
        << " replications=" << c.replications << '\n';
    csv << "estimator,level,count,failures,bias_sigma,se_sigma,bias_sigma_bar,se_sigma_bar,"
           "avg_model_size,sure_screening,false_positive,false_negative\n";
    for (const auto& key : table.keys) {
        const SimMetrics& m = table.rows.at(key);
        csv << estimator_name(key.first) << ',' << key.second << ',' << m.count << ',' << m.failures << ','
            << fmt(m.bias_sigma, 4) << ',' << fmt(m.se_sigma, 4) << ',' << fmt(m.bias_sigma_bar, 4) << ','
            << fmt(m.se_sigma_bar, 4) << ',' << fmt(m.avg_model_size, 4) << ',' << fmt(m.sure_screening_prop, 4)
            << ',' << fmt(m.false_positive, 4) << ',' << fmt(m.false_negative, 4) << '\n';
    }
    emit(args.out, csv.str(), out);

    if (!args.raw.empty()) {
        std::ostringstream raw;
        raw << json({{"provenance", prov.to_json()}}).dump() << '\n';
        for (const SimRecord& r : table.records) {
            json j = {{"replication", r.replication}, {"estimator", estimator_name(r.estimator)},
                      {"level", r.level},             {"ok", r.ok}};
            if (r.ok) {
                j["sigma_ratio"] = r.sigma_ratio;
                j["sigma_bar_ratio"] = r.sigma_bar_ratio;
                j["model_size"] = r.model_size;
                j["sure_screening"] = r.sure_screening;
                j["false_positive"] = r.false_positive;
                j["false_negative"] = r.false_negative;
                j["iterations"] = r.iterations;
            } else {
                j["error"] = r.error;
            }
            raw << j.dump() << '\n';
        }
        emit(args.raw, raw.str(), out);
    }
    return kOk;
}

struct VerifyArgs {
    std::string suite = "all";
    int instances = 1000;
    std::uint64_t seed = 7;
    int threads = 0;
    std::string out;
};

inline json report_json(const theory::TheoryReport& r)
{
    json checks = json::array();
    for (const theory::Check& c : r.checks) {
        json cj = {{"name", c.name},       {"observed", number(c.observed)}, {"bound", number(c.bound)},
                   {"pass", c.pass},       {"counted", c.counted}};
        if (!c.note.empty()) cj["note"] = c.note;
        checks.push_back(cj);
    }
    json extra = json::object();
    for (const auto& [k, v] : r.extra) extra[k] = number(v);
    return {{"suite", r.suite},
            {"instance", r.instance},
            {"xi", r.xi},
            {"lambda0", r.lambda0},
            {"sigma_star", number(r.sigma_star)},
            {"z_star", number(r.z_star)},
            {"kappa", number(r.kappa)},
            {"eta_star_ub", number(r.eta_star_ub)},
            {"tau0_ub", number(r.tau0_ub)},
            {"mu_ub", number(r.mu_ub)},
            {"tau_star_ub", number(r.tau_star_ub)},
            {"event_thm1", r.event_thm1},
            {"event_thm2", r.event_thm2},
            {"event", r.event},
            {"checks", checks},
            {"extra", extra}};
}

inline int run_verify(const VerifyArgs& args, const Provenance& prov, std::ostream& out)
{
    theory::SuiteOptions opt;
    opt.suite = args.suite;
    opt.instances = args.instances;
    opt.seed = args.seed;
    opt.threads = resolve_threads(args.threads);
    const theory::SuiteResult res = theory::run_suite(opt);
    if (!args.out.empty()) {
        json reports = json::array();
        for (const theory::TheoryReport& r : res.reports) reports.push_back(report_json(r));
        json j = {{"schema", 1},
                  {"provenance", prov.to_json()},
                  {"reports", reports},
                  {"summary",
                   {{"violations", res.violations},
                    {"event_true", res.event_true},
                    {"checks", res.checks},
                    {"uncounted_failures", res.uncounted_failures}}}};
        emit(args.out, j.dump(1) + "\n", out);
    }
    out << "suite=" << args.suite << " instances=" << args.instances << " seed=" << args.seed
        << " reports=" << res.reports.size() << " event_true=" << res.event_true << " checks=" << res.checks
        << " uncounted_failures=" << res.uncounted_failures << " violations=" << res.violations << '\n';
    return res.violations > 0 ? kViolations : kOk;
}

struct StabilityArgs {
    DataArgs data;
    std::string lambda_hat = "scaled";
    std::string lambda0 = "auto-j2";
    int reps = 100;
    double threshold = 0.5;
    std::uint64_t seed = 1;
    std::string out;
};

inline int run_stability(const StabilityArgs& args, const Provenance& prov, std::ostream& out)
{
    const Dataset data = args.data.load();
    double lam = 0.0;
    json j = {{"schema", 1}, {"provenance", prov.to_json()}};
    if (args.lambda_hat == "scaled") {
        const ScaledFit fit = scaled_fit(data, resolve_lambda0(args.lambda0, data));
        lam = fit.lambda_hat;
        j["scaled_sigma"] = fit.sigma;
    } else {
        lam = resolve_lambda0(args.lambda_hat, data);
    }
    SeededRng rng(args.seed);
    const StabilityResult res = stability_selection(data, lam, args.reps, args.threshold, rng);
    j["lambda_hat"] = lam;
    j["threshold"] = args.threshold;
    j["replications"] = args.reps;
    j["selected"] = res.selected;
    j["frequency"] = sparse_pairs(res.frequency);
    emit(args.out, j.dump(2) + "\n", out);
    return kOk;
}

struct CvArgs {
    DataArgs data;
    int splits = 100;
    int grid_points = 100;
    double lambda_min_ratio = 1e-3;
    bool adjusted = false;
    std::uint64_t seed = 1;
    std::string out;
};

inline int run_cv(const CvArgs& args, const Provenance& prov, std::ostream& out)
{
    const Dataset data = args.data.load();
    GridSpec grid;
    grid.n_points = args.grid_points;
    grid.lambda_min_ratio = args.lambda_min_ratio;
    SeededRng rng(args.seed);
    const CvResult res = cross_validate_lasso(data, lambda_grid(data, grid), args.splits, rng, args.adjusted);
    json j = {{"schema", 1},
              {"provenance", prov.to_json()},
              {"lambda_cv", res.lambda_cv},
              {"adjusted", args.adjusted},
              {"splits", args.splits},
              {"beta", sparse_pairs(res.beta)},
              {"model_size", support_of(res.beta).size()}};
    emit(args.out, j.dump(2) + "\n", out);
    return kOk;
}

// ---------------------------------------------------------------------------

/// Parses argv and runs one subcommand; never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Scaled sparse linear regression"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Provenance prov;
    for (int i = 1; i < argc; ++i) prov.argv.emplace_back(argv[i]);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "scaled lasso / MCP / SCAD fit with noise level");
    fit.data.attach(fit_cmd);
    fit.pen.attach(fit_cmd);
    fit_cmd->add_option("--lambda0", fit.lambda0, "number or auto-j1|auto-j2|auto-j3");
    fit_cmd->add_option("--a", fit.a, "degrees-of-freedom adjustment in [0, 1)");
    fit_cmd->add_option("--estimator", fit.estimator)->check(CLI::IsMember({"scaled", "pmle", "bc"}));
    fit_cmd->add_option("--lookup", fit.lookup)->check(CLI::IsMember({"grid", "exact"}));
    fit_cmd->add_option("--tol", fit.tol, "relative sigma tolerance");
    fit_cmd->add_option("--solver-tol", fit.solver_tol, "coordinate descent tolerance");
    fit_cmd->add_flag("--post-lse", fit.post_lse, "add least squares after selection");
    fit_cmd->add_option("--out", fit.out, "output JSON (default stdout)");

    PathArgs path;
    auto* path_cmd = app.add_subcommand("path", "solution path over a descending grid");
    path.data.attach(path_cmd);
    path.pen.attach(path_cmd);
    path_cmd->add_option("--grid-points", path.grid_points)->check(CLI::PositiveNumber);
    path_cmd->add_option("--lambda-min-ratio", path.lambda_min_ratio)->check(CLI::Range(1e-12, 1.0));
    path_cmd->add_option("--tol", path.tol)->check(CLI::PositiveNumber);
    path_cmd->add_option("--out", path.out, "path CSV (default stdout)");
    path_cmd->add_option("--coef-json", path.coef_json, "full coefficients as JSON");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "replicated simulation table");
    sim_cmd->add_option("--design", sim.design)->check(CLI::IsMember({"ex1", "ex2"}));
    sim_cmd->add_option("--r0", sim.r0);
    sim_cmd->add_option("--reps", sim.reps)->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--levels", sim.levels);
    sim_cmd->add_option("--estimators", sim.estimators);
    sim_cmd->add_option("--scale", sim.scale)->check(CLI::IsMember({"full", "half", "smoke"}));
    sim_cmd->add_option("--seed", sim.seed);
    sim_cmd->add_option("--threads", sim.threads);
    sim_cmd->add_option("--lookup", sim.lookup)->check(CLI::IsMember({"grid", "exact"}));
    sim_cmd->add_option("--out", sim.out, "table CSV (default stdout)");
    sim_cmd->add_option("--raw", sim.raw, "per-replication JSONL");

    VerifyArgs ver;
    auto* ver_cmd = app.add_subcommand("verify", "falsification suites for the oracle inequalities");
    ver_cmd->add_option("--suite", ver.suite)
        ->check(CLI::IsMember({"thm1", "thm2", "thm3", "thm4", "cor1", "basic", "tails", "all"}));
    ver_cmd->add_option("--instances", ver.instances)->check(CLI::NonNegativeNumber);
    ver_cmd->add_option("--seed", ver.seed);
    ver_cmd->add_option("--threads", ver.threads);
    ver_cmd->add_option("--out", ver.out, "report JSON");

    StabilityArgs stab;
    auto* stab_cmd = app.add_subcommand("stability", "randomized-weight stability selection");
    stab.data.attach(stab_cmd);
    stab_cmd->add_option("--lambda-hat", stab.lambda_hat, "number, or 'scaled' for the scaled lasso level");
    stab_cmd->add_option("--lambda0", stab.lambda0, "lambda0 for --lambda-hat scaled");
    stab_cmd->add_option("--reps", stab.reps)->check(CLI::PositiveNumber);
    stab_cmd->add_option("--threshold", stab.threshold);
    stab_cmd->add_option("--seed", stab.seed);
    stab_cmd->add_option("--out", stab.out);

    CvArgs cv;
    auto* cv_cmd = app.add_subcommand("cv", "lasso penalty by repeated 2:1 splits");
    cv.data.attach(cv_cmd);
    cv_cmd->add_option("--splits", cv.splits)->check(CLI::PositiveNumber);
    cv_cmd->add_option("--grid-points", cv.grid_points)->check(CLI::PositiveNumber);
    cv_cmd->add_option("--lambda-min-ratio", cv.lambda_min_ratio)->check(CLI::Range(1e-12, 1.0));
    cv_cmd->add_flag("--adjusted", cv.adjusted, "score least squares after selection");
    cv_cmd->add_option("--seed", cv.seed);
    cv_cmd->add_option("--out", cv.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(kVersion) + "\n" : app.help());
            return kOk;
        }
        err << "error: usage: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (fit_cmd->parsed()) {
            prov.command = "fit";
            return run_fit(fit, prov, out);
        }
        if (path_cmd->parsed()) {
            prov.command = "path";
            return run_path(path, prov, out);
        }
        if (sim_cmd->parsed()) {
            prov.command = "simulate";
            prov.seed = sim.seed;
            prov.has_seed = true;
            return run_simulate(sim, prov, out);
        }
        if (ver_cmd->parsed()) {
            prov.command = "verify";
            prov.seed = ver.seed;
            prov.has_seed = true;
            return run_verify(ver, prov, out);
        }
        if (stab_cmd->parsed()) {
            prov.command = "stability";
            prov.seed = stab.seed;
            prov.has_seed = true;
            return run_stability(stab, prov, out);
        }
        if (cv_cmd->parsed()) {
            prov.command = "cv";
            prov.seed = cv.seed;
            prov.has_seed = true;
            return run_cv(cv, prov, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.name() << ": " << e.what() << '\n';
        return e.error_class() == ErrorClass::numerical ? kNumerical : kUsage;
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

} // namespace scaledreg::cli
