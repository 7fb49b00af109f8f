// bjlab — verification campaigns for quasi-periodic block Jacobi operators.
//
// Subcommands take a config file ([spec] + [campaign] sections) and write a
// JSON summary plus CSV detail tables under --out. Exit code: 0 on PASS or
// WARN, 1 on FAIL, 2 on usage/config errors.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bjlab/config.hpp"
#include "bjlab/det_bounds.hpp"
#include "bjlab/greens.hpp"
#include "bjlab/localization.hpp"
#include "bjlab/minor_paths.hpp"
#include "bjlab/report.hpp"
#include "bjlab/version.hpp"

namespace {

using namespace bjlab;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    std::optional<long> seed_override;
};

int exit_code(Verdict v) { return v == Verdict::Fail ? 1 : 0; }

CampaignConfig load_or_exit(const CommonOpts& opts) {
    ConfigResult r = load_config(opts.config_path);
    if (!r.ok()) {
        for (const auto& e : r.errors) std::cerr << "config error: " << e << "\n";
        std::exit(2);
    }
    CampaignConfig cfg = std::move(*r.config);
    if (opts.seed_override) cfg.seed = static_cast<std::uint64_t>(*opts.seed_override);
    return cfg;
}

void prepare_out(const CommonOpts& opts) {
    std::filesystem::create_directories(opts.out_dir);
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
    return (std::filesystem::path(opts.out_dir) / name).string();
}

void stamp(BoundReport& rep, const CampaignConfig& cfg) {
    rep.config_digest = cfg.digest;
    rep.seed = cfg.seed;
}

// ---------------------------------------------------------------- preflight

int run_preflight(const CommonOpts& opts) {
    CampaignConfig cfg = load_or_exit(opts);
    prepare_out(opts);
    const OperatorSpec& spec = *cfg.spec;

    BoundReport rep;
    rep.campaign = "preflight";
    stamp(rep, cfg);

    DetWProbe detw = probe_det_w(spec);
    rep.summary["det_w_min_abs"] = detw.min_abs;
    rep.summary["det_w_max_abs"] = detw.max_abs;
    if (!detw.nonvanishing)
        rep.warnings.push_back("det W(x) vanishes on the probe grid (assumption (a) fails)");

    ConstantEigenvalueCheck eig = no_constant_eigenvalue_check(spec.F);
    rep.summary["f_nonconstant_eigenvalues"] = eig.ok;
    if (!eig.ok) {
        rep.summary["f_constant_eigenvalue_witness"] = eig.witness;
        rep.warnings.push_back("F(x) has a near-constant eigenvalue branch (value " +
                               format_double(eig.witness) + ")");
    }

    DiophantineScan dio = diophantine_scan(spec.omega, 100000);
    rep.summary["diophantine_t"] = dio.t;
    rep.summary["diophantine_worst_k"] = dio.worst_k;
    if (dio.t < 1e-4)
        rep.warnings.push_back("omega fails the Diophantine scan (t < 1e-4); orbit averages may "
                               "concentrate poorly");

    double emax = 0.0;
    for (double e : cfg.energy_grid()) emax = std::max(emax, std::abs(e));
    double d = cfg.delta.value_or(0.05 * spec.annulus_r);
    double t_pad = spec.F.sup_norm(1.0) + emax / std::abs(spec.lambda);
    Epsilon0Scan eps = epsilon0_scan(spec.F, d, -t_pad, t_pad);
    rep.summary["eps0_found"] = eps.found;
    rep.summary["eps0"] = eps.eps0;
    rep.summary["y0"] = eps.y0;
    if (eps.found) {
        double lambda0 = lambda0_estimate(spec, std::min<long>(cfg.N, 8), emax, eps.y0, 64,
                                          opts.threads);
        rep.summary["lambda0_estimate"] = lambda0;
        if (std::abs(spec.lambda) < lambda0)
            rep.warnings.push_back("|lambda| = " + format_double(std::abs(spec.lambda)) +
                                   " is below the lambda0 estimate " + format_double(lambda0));
    } else {
        rep.warnings.push_back(eps.message);
    }
    rep.summary["energy_window"] = spec.energy_window();

    rep.verdict = rep.warnings.empty() ? Verdict::Pass : Verdict::Warn;
    rep.write_json(out_path(opts, "preflight_summary.json"));
    std::cout << "preflight: " << to_string(rep.verdict) << " (" << rep.warnings.size()
              << " warning(s))\n";
    for (const auto& w : rep.warnings) std::cout << "  warning: " << w << "\n";
    return exit_code(rep.verdict);
}

// ------------------------------------------------------------- minor-oracle

struct MinorOracleOpts {
    std::string matrix_file;
    int size = 0;
    long seed = 1;
    int alpha = 0;
    int alpha_prime = 0;
};

int run_minor_oracle(const MinorOracleOpts& mo) {
    Mat g;
    std::optional<IMat> gi;
    if (!mo.matrix_file.empty()) {
        std::ifstream in(mo.matrix_file);
        if (!in) {
            std::cerr << "cannot open matrix file: " << mo.matrix_file << "\n";
            return 2;
        }
        std::vector<double> vals;
        double v;
        while (in >> v) vals.push_back(v);
        long m = static_cast<long>(std::llround(std::sqrt(static_cast<double>(vals.size()))));
        if (m * m != static_cast<long>(vals.size()) || m == 0) {
            std::cerr << "matrix file must hold a square matrix (" << vals.size()
                      << " values read)\n";
            return 2;
        }
        g.resize(m, m);
        for (long i = 0; i < m; ++i)
            for (long j = 0; j < m; ++j) g(i, j) = vals[static_cast<std::size_t>(i * m + j)];
    } else {
        if (mo.size < 2 || mo.size > 8) {
            std::cerr << "--size must lie in [2,8] for exhaustive path enumeration\n";
            return 2;
        }
        DetRng rng(derive_seed(static_cast<std::uint64_t>(mo.seed), 0));
        gi.emplace(mo.size, mo.size);
        g.resize(mo.size, mo.size);
        for (int i = 0; i < mo.size; ++i)
            for (int j = 0; j < mo.size; ++j) {
                long e = rng.uniform_int(-9, 9);
                (*gi)(i, j) = e;
                g(i, j) = static_cast<double>(e);
            }
    }

    const int m = static_cast<int>(g.rows());
    auto full = full_predicate();
    double worst = 0.0;
    long long worst_exact = 0;
    auto run_pair = [&](int a, int ap) {
        double direct = minor_direct<double>(g, a, ap);
        double paths = (a == ap) ? direct : minor_via_paths<double>(g, a, ap, full);
        double diff = std::abs(direct - paths);
        worst = std::max(worst, diff / std::max({1.0, std::abs(direct), std::abs(paths)}));
        std::printf("(%d,%d): direct % .17g  paths % .17g  diff %.3e", a, ap, direct, paths, diff);
        if (gi) {
            long long de = minor_direct<long long>(*gi, a, ap);
            long long pe = (a == ap) ? de : minor_via_paths<long long>(*gi, a, ap, full);
            worst_exact = std::max(worst_exact, std::llabs(de - pe));
            std::printf("  exact %lld/%lld", de, pe);
        }
        std::printf("\n");
    };

    if (mo.alpha >= 1 && mo.alpha_prime >= 1) {
        run_pair(mo.alpha, mo.alpha_prime);
    } else {
        for (int a = 1; a <= m; ++a)
            for (int ap = 1; ap <= m; ++ap) run_pair(a, ap);
    }
    std::printf("max relative difference: %.3e\n", worst);
    if (gi) std::printf("max exact difference: %lld\n", worst_exact);
    bool ok = worst <= 1e-9 && worst_exact == 0;
    std::printf("minor-oracle: %s\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

// ------------------------------------------------------------- verify-upper

int run_verify_upper(const CommonOpts& opts) {
    CampaignConfig cfg = load_or_exit(opts);
    prepare_out(opts);
    const OperatorSpec& spec = *cfg.spec;

    BoundReport rep;
    rep.campaign = "verify-upper";
    stamp(rep, cfg);
    const double log_lambda = std::log(std::abs(spec.lambda));

    UpperBoundScan scan_n = upper_bound_scan(spec, cfg.N, cfg.E, cfg.phases, opts.threads);
    UpperBoundScan scan_2n = upper_bound_scan(spec, 2 * cfg.N, cfg.E, cfg.phases, opts.threads);

    rep.summary["N"] = cfg.N;
    rep.summary["E"] = cfg.E;
    rep.summary["phases"] = cfg.phases;
    rep.summary["max_c_at_N"] = scan_n.max_c;
    rep.summary["max_c_at_2N"] = scan_2n.max_c;
    rep.summary["flagged_cells_at_N"] = scan_n.flagged;
    rep.summary["flagged_cells_at_2N"] = scan_2n.flagged;
    double drift = std::abs(scan_2n.max_c - scan_n.max_c);
    rep.summary["doubling_drift"] = drift;
    // stability measured against the natural scale of the bound, log|lambda|
    double tol = 0.10 * log_lambda;
    rep.thresholds["doubling_drift_max"] = tol;
    bool finite = std::isfinite(scan_n.max_c) && std::isfinite(scan_2n.max_c);
    rep.verdict = (finite && drift <= tol) ? Verdict::Pass : Verdict::Fail;
    if (scan_n.flagged + scan_2n.flagged > 0)
        rep.warnings.push_back("some minors fell below the sentinel threshold and were excluded");

    rep.cells.header = {"phase_index", "alpha", "alpha_prime", "c_value", "flagged"};
    for (const auto& cell : scan_n.cells)
        rep.cells.rows.push_back({std::to_string(cell.phase_index), std::to_string(cell.alpha),
                                  std::to_string(cell.alpha_prime), format_double(cell.c_value),
                                  cell.flagged ? "1" : "0"});
    rep.cells.write(out_path(opts, "verify_upper_cells.csv"));
    rep.write_json(out_path(opts, "verify_upper_summary.json"));
    std::cout << "verify-upper: " << to_string(rep.verdict) << " max C(N)=" << scan_n.max_c
              << " max C(2N)=" << scan_2n.max_c << "\n";
    return exit_code(rep.verdict);
}

// ------------------------------------------------------------- verify-lower

int run_verify_lower(const CommonOpts& opts) {
    CampaignConfig cfg = load_or_exit(opts);
    prepare_out(opts);
    const OperatorSpec& spec = *cfg.spec;

    LowerBoundReportData data = verify_lower_bound(spec, cfg.N, cfg.energy_grid(), cfg.quadrature,
                                                   opts.threads, cfg.delta);

    BoundReport rep;
    rep.campaign = "verify-lower";
    stamp(rep, cfg);
    rep.summary["N"] = cfg.N;
    rep.summary["quadrature"] = cfg.quadrature;
    rep.summary["max_deficit"] = data.max_deficit;
    rep.summary["eps0"] = data.eps_scan.eps0;
    rep.summary["y0"] = data.eps_scan.y0;
    rep.summary["lambda0_estimate"] = data.lambda0;
    long sentinels = 0;
    for (const auto& r : data.per_energy) sentinels += r.sentinels;
    rep.summary["sentinel_count"] = sentinels;
    rep.summary["sentinel_fraction"] = data.sentinel_fraction;

    rep.thresholds["max_deficit_allowed"] = 1.0;
    rep.thresholds["sentinel_fraction_warn"] = 0.01;
    rep.verdict = data.max_deficit <= 1.0 ? Verdict::Pass : Verdict::Fail;
    if (data.sentinel_fraction > 0.01)
        rep.warnings.push_back("more than 1% of quadrature samples hit the determinant sentinel");
    if (data.lambda_warning)
        rep.warnings.push_back("|lambda| below the lambda0 estimate " +
                               format_double(data.lambda0));
    if (!data.eps_scan.found) rep.warnings.push_back(data.eps_scan.message);
    if (rep.verdict == Verdict::Pass && !rep.warnings.empty()) rep.verdict = Verdict::Warn;

    rep.cells.header = {"energy", "average", "deficit", "sentinels"};
    for (const auto& r : data.per_energy)
        rep.cells.rows.push_back({format_double(r.energy), format_double(r.average),
                                  format_double(r.deficit), std::to_string(r.sentinels)});
    rep.cells.write(out_path(opts, "verify_lower_cells.csv"));
    rep.write_json(out_path(opts, "verify_lower_summary.json"));
    std::cout << "verify-lower: " << to_string(rep.verdict) << " max deficit=" << data.max_deficit
              << " eps0=" << data.eps_scan.eps0 << "\n";
    return exit_code(rep.verdict);
}

// -------------------------------------------------------------- hardy-check

int run_hardy(const CommonOpts& opts, const std::vector<double>& radii_flag) {
    CampaignConfig cfg = load_or_exit(opts);
    prepare_out(opts);
    const OperatorSpec& spec = *cfg.spec;

    std::vector<double> radii = !radii_flag.empty() ? radii_flag : cfg.radii;
    if (radii.empty()) {
        // five radii spread over the inner half of the annulus
        for (int i = 1; i <= 5; ++i) radii.push_back(1.0 + 0.1 * i * spec.annulus_r);
    }

    BoundReport rep;
    rep.campaign = "hardy-check";
    stamp(rep, cfg);
    Verdict verdict = Verdict::Pass;
    double worst_excess = -std::numeric_limits<double>::infinity();
    rep.cells.header = {"energy", "radius", "mean"};
    for (double E : cfg.energy_grid()) {
        HardyCheckData data =
            hardy_convexity_check(spec, cfg.N, E, radii, cfg.quadrature, opts.threads);
        for (std::size_t i = 0; i < data.radii.size(); ++i)
            rep.cells.rows.push_back({format_double(E), format_double(data.radii[i]),
                                      format_double(data.means[i])});
        for (const auto& t : data.triples) worst_excess = std::max(worst_excess, t.excess);
        if (!data.pass) verdict = Verdict::Fail;
    }
    rep.summary["N"] = cfg.N;
    rep.summary["worst_convexity_excess"] = worst_excess;
    rep.thresholds["convexity_tolerance"] = 1e-3;
    rep.verdict = verdict;
    rep.cells.write(out_path(opts, "hardy_check_cells.csv"));
    rep.write_json(out_path(opts, "hardy_check_summary.json"));
    std::cout << "hardy-check: " << to_string(rep.verdict)
              << " worst excess=" << worst_excess << "\n";
    return exit_code(rep.verdict);
}

// --------------------------------------------------------------- green-scan

int run_green_scan(const CommonOpts& opts) {
    CampaignConfig cfg = load_or_exit(opts);
    prepare_out(opts);
    const OperatorSpec& spec = *cfg.spec;

    BoundReport rep;
    rep.campaign = "green-scan";
    stamp(rep, cfg);
    rep.summary["N"] = cfg.N;
    rep.summary["M"] = cfg.M;
    rep.summary["grid"] = cfg.phases;

    rep.cells.header = {"energy", "phase_index", "orbit_average", "bad"};
    nlohmann::json fractions = nlohmann::json::array();
    for (double E : cfg.energy_grid()) {
        BadSetEstimate est = bad_set_estimate(spec, cfg.N, cfg.M, E, cfg.phases, opts.threads,
                                              cfg.bad_delta);
        nlohmann::json entry;
        entry["energy"] = E;
        entry["delta"] = est.delta;
        entry["fraction"] = est.fraction;
        entry["sentinels"] = est.sentinel_count;
        nlohmann::json ladder = nlohmann::json::array();
        for (auto& [m, f] : est.ladder) ladder.push_back({{"M", m}, {"fraction", f}});
        entry["ladder"] = ladder;
        if (auto slope = ladder_decay_slope(est)) entry["log_fraction_slope"] = *slope;
        fractions.push_back(entry);

        double threshold = (1.0 - est.delta) * std::log(std::abs(spec.lambda));
        for (int i = 0; i < est.grid; ++i) {
            double avg = est.orbit_averages[static_cast<std::size_t>(i)];
            rep.cells.rows.push_back({format_double(E), std::to_string(i), format_double(avg),
                                      (avg > threshold) ? "0" : "1"});
        }
    }
    rep.summary["per_energy"] = fractions;
    rep.verdict = Verdict::Pass;  // measurement campaign; trend only
    rep.cells.write(out_path(opts, "green_scan_phases.csv"));
    rep.write_json(out_path(opts, "green_scan_summary.json"));
    std::cout << "green-scan: " << to_string(rep.verdict) << "\n";
    return exit_code(rep.verdict);
}

// ----------------------------------------------------------------- localize

int run_localize(const CommonOpts& opts, bool vectors_csv) {
    CampaignConfig cfg = load_or_exit(opts);
    prepare_out(opts);
    const OperatorSpec& spec = *cfg.spec;

    LocalizationOptions lopt;
    lopt.rate_bar = cfg.rate_bar;
    LocalizationReport loc = localization_campaign(spec, cfg.x, {1, cfg.box}, lopt);

    BoundReport rep;
    rep.campaign = "localize";
    stamp(rep, cfg);
    rep.summary["box"] = cfg.box;
    rep.summary["phase"] = cfg.x;
    rep.summary["tested"] = loc.tested;
    rep.summary["fraction_localized"] = loc.fraction_localized;
    rep.summary["median_rate"] = loc.median_rate;
    rep.summary["median_ratio"] = loc.median_ratio;
    rep.summary["rate_bar"] = loc.rate_bar;
    rep.thresholds["fraction_localized_min"] = cfg.localized_fraction_bar;
    rep.verdict =
        loc.fraction_localized >= cfg.localized_fraction_bar ? Verdict::Pass : Verdict::Fail;

    rep.cells.header = {"energy", "n_star", "rate", "r_squared", "defined", "localized"};
    for (const auto& row : loc.rows)
        rep.cells.rows.push_back({format_double(row.energy), std::to_string(row.n_star),
                                  format_double(row.rate), format_double(row.r_squared),
                                  row.defined ? "1" : "0", row.localized ? "1" : "0"});
    rep.cells.write(out_path(opts, "localize_eigenpairs.csv"));
    rep.write_json(out_path(opts, "localize_summary.json"));

    if (vectors_csv) {
        CsvTable vecs;
        vecs.header = {"pair_index", "site", "block_norm"};
        for (std::size_t p = 0; p < loc.pairs.size(); ++p)
            for (std::size_t j = 0; j < loc.pairs[p].block_norms.size(); ++j)
                vecs.rows.push_back({std::to_string(p),
                                     std::to_string(loc.pairs[p].psi.first + static_cast<long>(j)),
                                     format_double(loc.pairs[p].block_norms[j])});
        vecs.write(out_path(opts, "localize_vectors.csv"));
    }
    std::cout << "localize: " << to_string(rep.verdict)
              << " fraction=" << loc.fraction_localized << " median rate=" << loc.median_rate
              << "\n";
    return exit_code(rep.verdict);
}

// ----------------------------------------------------------------- lyapunov

int run_lyapunov(const CommonOpts& opts, long steps) {
    CampaignConfig cfg = load_or_exit(opts);
    prepare_out(opts);
    const OperatorSpec& spec = *cfg.spec;

    BoundReport rep;
    rep.campaign = "lyapunov";
    stamp(rep, cfg);
    rep.summary["steps"] = steps;

    rep.cells.header = {"energy", "exponent_index", "exponent", "flagged_steps"};
    bool aborted = false;
    for (double E : cfg.energy_grid()) {
        LyapunovResult res = lyapunov_diagnostic(spec, E, steps, cfg.x);
        aborted = aborted || res.aborted;
        for (std::size_t i = 0; i < res.exponents.size(); ++i)
            rep.cells.rows.push_back({format_double(E), std::to_string(i),
                                      format_double(res.exponents[i]),
                                      std::to_string(res.flagged_steps)});
    }
    rep.verdict = aborted ? Verdict::Fail : Verdict::Pass;
    if (aborted)
        rep.warnings.push_back("cocycle iteration aborted: too many near-singular W steps");
    rep.cells.write(out_path(opts, "lyapunov_exponents.csv"));
    rep.write_json(out_path(opts, "lyapunov_summary.json"));
    std::cout << "lyapunov: " << to_string(rep.verdict) << "\n";
    return exit_code(rep.verdict);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"verification lab for quasi-periodic block Jacobi operators"};
    app.set_version_flag("--version", bjlab::version);
    app.require_subcommand(1);

    CommonOpts common;
    MinorOracleOpts oracle;
    std::vector<double> radii_flag;
    bool vectors_csv = false;
    long lyap_steps = 100000;

    auto add_common = [&](CLI::App* cmd, bool need_config = true) {
        auto* opt = cmd->add_option("--config", common.config_path, "campaign config file");
        if (need_config) opt->required();
        cmd->add_option("--out", common.out_dir, "output directory (default .)");
        cmd->add_option("--threads", common.threads, "worker threads (0 = hardware)");
        cmd->add_option("--seed", common.seed_override, "override the campaign seed");
    };

    CLI::App* preflight = app.add_subcommand("preflight", "model assumption checks");
    add_common(preflight);

    CLI::App* oracle_cmd =
        app.add_subcommand("minor-oracle", "compare direct minors against the path expansion");
    oracle_cmd->add_option("--matrix", oracle.matrix_file, "whitespace-separated square matrix");
    oracle_cmd->add_option("--size", oracle.size, "random integer matrix size (2..8)");
    oracle_cmd->add_option("--seed", oracle.seed, "seed for the random matrix");
    oracle_cmd->add_option("--alpha", oracle.alpha, "row index (default: all pairs)");
    oracle_cmd->add_option("--alpha-prime", oracle.alpha_prime, "column index");

    CLI::App* upper = app.add_subcommand("verify-upper", "uniform upper bound on minors");
    add_common(upper);
    CLI::App* lower = app.add_subcommand("verify-lower", "phase-averaged determinant lower bound");
    add_common(lower);
    CLI::App* hardy = app.add_subcommand("hardy-check", "radial convexity of circle means");
    add_common(hardy);
    hardy->add_option("--radii", radii_flag, "circle radii (overrides config)");
    CLI::App* green = app.add_subcommand("green-scan", "bad phase set estimates");
    add_common(green);
    CLI::App* localize = app.add_subcommand("localize", "eigenvector decay-rate campaign");
    add_common(localize);
    localize->add_flag("--vectors-csv", vectors_csv, "also write per-eigenvector block norms");
    CLI::App* lyapunov = app.add_subcommand("lyapunov", "transfer-cocycle exponents");
    add_common(lyapunov);
    lyapunov->add_option("--steps", lyap_steps, "cocycle steps (default 1e5)")
        ->check(CLI::Range(10000L, 100000000L));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (preflight->parsed()) return run_preflight(common);
        if (oracle_cmd->parsed()) return run_minor_oracle(oracle);
        if (upper->parsed()) return run_verify_upper(common);
        if (lower->parsed()) return run_verify_lower(common);
        if (hardy->parsed()) return run_hardy(common, radii_flag);
        if (green->parsed()) return run_green_scan(common);
        if (localize->parsed()) return run_localize(common, vectors_csv);
        if (lyapunov->parsed()) return run_lyapunov(common, lyap_steps);
    } catch (const bjlab::resource_error& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
