#pragma once

#include "spinchain/analysis.hpp"
#include "spinchain/dmrg.hpp"
#include "spinchain/error.hpp"
#include "spinchain/exact_diag.hpp"
#include "spinchain/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace spinchain {

enum class Mode { single, alpha_scan, figure1, figure2, figure3, figure4, oracle_check };
enum class Format { csv, json };

inline constexpr double kOracleEnergyTol = 1e-8;
inline constexpr double kOracleEntropyTol = 1e-7;

inline Mode parse_mode(const std::string &s) {
    static const std::pair<const char *, Mode> names[] = {
        {"single", Mode::single},   {"alpha_scan", Mode::alpha_scan}, {"figure1", Mode::figure1},
        {"figure2", Mode::figure2}, {"figure3", Mode::figure3},       {"figure4", Mode::figure4},
        {"oracle_check", Mode::oracle_check}};
    for (const auto &[name, mode] : names)
        if (s == name)
            return mode;
    throw ConfigError("mode: unknown mode '" + s + "'");
}

inline Format parse_format(const std::string &s) {
    if (s == "csv")
        return Format::csv;
    if (s == "json")
        return Format::json;
    throw ConfigError("format: expected csv or json, got '" + s + "'");
}

struct ExperimentConfig {
    Mode mode = Mode::single;
    ChainSpec chain{};            ///< n = 0 means "mode default"
    SweepConfig sweep{};
    std::vector<double> alpha_grid; ///< empty means "mode default"
    std::vector<int> lengths;       ///< figure1 / oracle_check chain lengths, empty means "mode default"
    int l_fixed = 80;
    std::string output_path; ///< empty writes to stdout
    Format format = Format::csv;
    bool even_only = false;

    void validate() const;
};

namespace detail {

inline std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double config_double(const std::string &key, const std::string &v) {
    char *end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x))
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

inline long long config_integer(const std::string &key, const std::string &v) {
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return x;
}

inline int config_int(const std::string &key, const std::string &v) {
    const long long x = config_integer(key, v);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(key + ": value out of range");
    return static_cast<int>(x);
}

inline bool config_bool(const std::string &key, const std::string &v) {
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <class T, class Parse> std::vector<T> config_list(const std::string &key, const std::string &v, Parse parse) {
    std::vector<T> out;
    for (const auto &item : split(v, ',')) {
        const auto t = trim(item);
        if (t.empty())
            throw ConfigError(key + ": empty list entry");
        out.push_back(parse(key, t));
    }
    return out;
}

} // namespace detail

/// Apply one key=value setting. Unknown keys are rejected.
inline void apply_setting(ExperimentConfig &cfg, const std::string &key, const std::string &raw) {
    using namespace detail;
    const std::string v = trim(raw);
    if (key == "mode")
        cfg.mode = parse_mode(v);
    else if (key == "n")
        cfg.chain.n = config_int(key, v);
    else if (key == "j")
        cfg.chain.j = config_double(key, v);
    else if (key == "alpha")
        cfg.chain.alpha = config_double(key, v);
    else if (key == "impurity_spin")
        cfg.chain.impurity_spin = parse_spin(v);
    else if (key == "target_sz") {
        const double sz = config_double(key, v);
        const double twice = 2.0 * sz;
        if (twice != std::round(twice))
            throw ConfigError("target_sz: must be a multiple of 1/2");
        cfg.chain.target_twice_sz = static_cast<int>(twice);
    } else if (key == "m")
        cfg.sweep.m = config_int(key, v);
    else if (key == "sweeps")
        cfg.sweep.max_sweeps = config_int(key, v);
    else if (key == "energy_tol")
        cfg.sweep.energy_tol = config_double(key, v);
    else if (key == "lanczos_tol")
        cfg.sweep.lanczos_tol = config_double(key, v);
    else if (key == "lanczos_max_iter")
        cfg.sweep.lanczos_max_iter = config_int(key, v);
    else if (key == "seed") {
        const long long s = config_integer(key, v);
        if (s < 0)
            throw ConfigError("seed: must be non-negative");
        cfg.sweep.seed = static_cast<std::uint64_t>(s);
    } else if (key == "alpha_grid")
        cfg.alpha_grid = config_list<double>(key, v, config_double);
    else if (key == "lengths")
        cfg.lengths = config_list<int>(key, v, config_int);
    else if (key == "l_fixed")
        cfg.l_fixed = config_int(key, v);
    else if (key == "out" || key == "output_path")
        cfg.output_path = v;
    else if (key == "format")
        cfg.format = parse_format(v);
    else if (key == "even_only")
        cfg.even_only = config_bool(key, v);
    else
        throw ConfigError("unknown config key '" + key + "'");
}

/// Flat "key = value" lines; '#' starts a comment.
inline void parse_config(std::istream &is, ExperimentConfig &cfg) {
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(cfg, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

inline ExperimentConfig load_config(const std::string &path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const IoError &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    std::istringstream is(text);
    ExperimentConfig cfg;
    parse_config(is, cfg);
    return cfg;
}

/// Run plan after mode defaults are filled in.
struct ExperimentPlan {
    std::vector<ChainSpec> runs; ///< ordered by (N, impurity spin, alpha)
    std::optional<ChainSpec> baseline;
};

inline int resolved_length(const ExperimentConfig &cfg) {
    if (cfg.chain.n != 0)
        return cfg.chain.n;
    switch (cfg.mode) {
    case Mode::figure2:
    case Mode::figure3:
    case Mode::figure4:
        return 256;
    default:
        return 0;
    }
}

inline std::vector<double> resolved_grid(const ExperimentConfig &cfg) {
    if (!cfg.alpha_grid.empty())
        return cfg.alpha_grid;
    switch (cfg.mode) {
    case Mode::figure2:
        return {0.1, 0.3, 0.5, 2.0};
    case Mode::figure3:
        return {0.05, 0.1, 0.15, 0.2, 0.235, 0.25, 0.3, 0.35, 0.4, 0.5, 0.7, 1.0, 1.5, 2.0};
    case Mode::figure4:
        return {0.5, 2.0};
    case Mode::oracle_check:
        return {0.1, 0.5, 1.0, 2.0};
    default:
        return {};
    }
}

inline std::vector<int> resolved_lengths(const ExperimentConfig &cfg) {
    if (!cfg.lengths.empty())
        return cfg.lengths;
    if (cfg.mode == Mode::figure1)
        return cfg.chain.n ? std::vector<int>{cfg.chain.n} : std::vector<int>{160, 200, 256};
    if (cfg.mode == Mode::oracle_check)
        return cfg.chain.n ? std::vector<int>{cfg.chain.n} : std::vector<int>{6, 8, 10, 12};
    return {resolved_length(cfg)};
}

inline void ExperimentConfig::validate() const {
    sweep.validate();
    for (double a : alpha_grid)
        if (!(a > 0.0) || !std::isfinite(a))
            throw ConfigError("alpha_grid: values must be positive and finite");
    if (mode == Mode::single && chain.n == 0)
        throw ConfigError("n: required for mode single");
    if (mode == Mode::alpha_scan) {
        if (chain.n == 0)
            throw ConfigError("n: required for mode alpha_scan");
        if (alpha_grid.empty())
            throw ConfigError("alpha_grid: required for mode alpha_scan");
    }
    if (mode == Mode::figure3 && format == Format::csv && output_path.empty())
        throw ConfigError("out: figure3 CSV output needs a file path for the scan table");
    for (int n : resolved_lengths(*this)) {
        ChainSpec s = chain;
        s.n = n;
        s.validate();
        if (mode == Mode::figure1 && n < 20)
            throw ConfigError("n: figure1 needs N >= 20 for the conformal reference fit");
        if (mode == Mode::figure3 && (l_fixed < 3 || l_fixed > n - 3 || 2 * l_fixed == n))
            throw ConfigError("l_fixed: c(L) is undefined at L=" + std::to_string(l_fixed) + " for N=" +
                              std::to_string(n));
    }
}

inline ExperimentPlan plan_experiment(const ExperimentConfig &cfg) {
    ExperimentPlan plan;
    auto with = [&](int n, double alpha, Spin spin) {
        ChainSpec s = cfg.chain;
        s.n = n;
        s.alpha = alpha;
        s.impurity_spin = spin;
        return s;
    };
    const int n = resolved_length(cfg);
    auto grid = resolved_grid(cfg);
    switch (cfg.mode) {
    case Mode::single:
        plan.runs.push_back(cfg.chain);
        break;
    case Mode::alpha_scan:
        for (double a : grid)
            plan.runs.push_back(with(n, a, cfg.chain.impurity_spin));
        break;
    case Mode::figure1:
        for (int len : resolved_lengths(cfg))
            plan.runs.push_back(with(len, cfg.chain.j, Spin::half()));
        break;
    case Mode::figure2:
        for (double a : grid)
            plan.runs.push_back(with(n, a, cfg.chain.impurity_spin));
        plan.baseline = with(n, cfg.chain.j, Spin::half());
        break;
    case Mode::figure3:
        for (double a : grid)
            plan.runs.push_back(with(n, a, cfg.chain.impurity_spin));
        break;
    case Mode::figure4:
        for (Spin s : {Spin::half(), Spin::one()})
            for (double a : grid)
                plan.runs.push_back(with(n, a, s));
        plan.baseline = with(n, cfg.chain.j, Spin::half());
        break;
    case Mode::oracle_check:
        for (int len : resolved_lengths(cfg))
            for (Spin s : {Spin::half(), Spin::one()})
                for (double a : grid)
                    plan.runs.push_back(with(len, a, s));
        break;
    }
    if (plan.baseline)
        plan.runs.push_back(*plan.baseline);
    auto key = [](const ChainSpec &s) { return std::tuple(s.n, s.impurity_spin.twice(), s.alpha); };
    std::stable_sort(plan.runs.begin(), plan.runs.end(), [&](const auto &a, const auto &b) { return key(a) < key(b); });
    plan.runs.erase(std::unique(plan.runs.begin(), plan.runs.end(),
                                [&](const auto &a, const auto &b) { return key(a) == key(b); }),
                    plan.runs.end());
    return plan;
}

/// Thread cap from SPINCHAIN_THREADS; unset or 0 means one per hardware thread.
inline unsigned thread_cap() {
    unsigned cap = 0;
    if (const char *env = std::getenv("SPINCHAIN_THREADS"); env && *env) {
        const long long v = detail::config_integer("SPINCHAIN_THREADS", env);
        if (v < 0)
            throw ConfigError("SPINCHAIN_THREADS: must be >= 0");
        cap = static_cast<unsigned>(std::min<long long>(v, 1024));
    }
    if (cap == 0)
        cap = std::max(1u, std::thread::hardware_concurrency());
    return cap;
}

/// fn(i) for i in [0, count) on up to `threads` workers. fn must not throw.
template <class Fn> void parallel_for(std::size_t count, unsigned threads, Fn &&fn) {
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(threads, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;)
                fn(i);
        });
}

struct OracleRow {
    int n = 0;
    double alpha = 0.0;
    Spin impurity_spin = Spin::half();
    double e_exact = 0.0;
    double e_dmrg = 0.0;
    double max_ds = 0.0;

    bool pass() const {
        return std::abs(e_exact - e_dmrg) < kOracleEnergyTol && max_ds < kOracleEntropyTol;
    }
};

struct ScanPoint {
    double alpha;
    Spin impurity_spin;
    double c;
};

struct ExperimentOutput {
    Mode mode = Mode::single;
    std::vector<ProfileTable> tables;
    std::vector<EntropyProfile> profiles; ///< same order as `tables`
    std::vector<ScanPoint> scan;
    int l_fixed = 0;
    std::vector<OracleRow> oracle;
    std::vector<std::string> failures; ///< runs that threw; their tables are missing
    bool partial() const { return !failures.empty(); }
    bool all_converged() const {
        return std::all_of(profiles.begin(), profiles.end(), [](const auto &p) { return p.converged; });
    }
};

namespace detail {

inline std::string describe(const ChainSpec &s) {
    std::ostringstream os;
    os << "N=" << s.n << " alpha=" << s.alpha << " spin=" << s.impurity_spin.label();
    return os.str();
}

inline bool is_baseline(const ChainSpec &s) { return s.alpha == s.j && s.impurity_spin == Spin::half(); }

/// Half-chain product dimension, enough kept states for an exact sweep.
inline int untruncated_m(const ChainSpec &s) {
    long long d = 1;
    for (int i = 1; i <= s.n / 2 && d < (1 << 20); ++i)
        d *= site_spin(s, i).dim();
    return static_cast<int>(std::min<long long>(d, 1 << 20));
}

} // namespace detail

inline SweepConfig oracle_sweep(const ChainSpec &s, SweepConfig cfg) {
    cfg.m = std::max(cfg.m, detail::untruncated_m(s));
    cfg.lanczos_tol = std::min(cfg.lanczos_tol, 1e-12);
    return cfg;
}

inline OracleRow oracle_compare(const ChainSpec &spec, const SweepConfig &sweep) {
    const GroundState gs = ground_state(spec);
    const auto exact = entanglement_profile(gs);
    const EntropyProfile p = run_dmrg(spec, oracle_sweep(spec, sweep));
    OracleRow r{spec.n, spec.alpha, spec.impurity_spin, gs.energy, p.energy, 0.0};
    for (std::size_t i = 0; i < exact.size(); ++i)
        r.max_ds = std::max(r.max_ds, std::abs(exact[i] - p.s[i]));
    return r;
}

/// Runs every simulation the mode needs. Per-run solver failures are collected, config errors propagate.
inline ExperimentOutput compute_experiment(const ExperimentConfig &cfg, std::ostream *log = nullptr) {
    cfg.validate();
    const ExperimentPlan plan = plan_experiment(cfg);
    ExperimentOutput out;
    out.mode = cfg.mode;
    std::mutex log_mutex;
    auto note = [&](const std::string &msg) {
        if (!log)
            return;
        std::lock_guard lock(log_mutex);
        *log << msg << '\n';
    };

    const std::vector<ChainSpec> &jobs = plan.runs;

    std::vector<std::optional<EntropyProfile>> profiles(jobs.size());
    std::vector<std::optional<OracleRow>> oracle(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    parallel_for(jobs.size(), thread_cap(), [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            std::ostringstream msg;
            msg << detail::describe(jobs[i]);
            if (cfg.mode == Mode::oracle_check) {
                oracle[i] = oracle_compare(jobs[i], cfg.sweep);
                msg << " dE=" << std::abs(oracle[i]->e_exact - oracle[i]->e_dmrg) << " max_dS=" << oracle[i]->max_ds;
            } else {
                profiles[i] = run_dmrg(jobs[i], cfg.sweep);
                msg << " E=" << format_number(profiles[i]->energy) << " sweeps=" << profiles[i]->sweeps_used
                    << (profiles[i]->converged ? "" : " (not converged)");
            }
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
            msg << " [" << dt.count() << " s]";
            note(msg.str());
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!errors[i])
            continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const ConfigError &) {
            throw;
        } catch (const std::exception &e) {
            out.failures.push_back(detail::describe(jobs[i]) + ": " + e.what());
            note("failed: " + out.failures.back());
        }
    }

    if (cfg.mode == Mode::oracle_check) {
        for (const auto &r : oracle)
            if (r)
                out.oracle.push_back(*r);
        return out;
    }

    const EntropyProfile *baseline = nullptr;
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (plan.baseline && profiles[i] && jobs[i].n == plan.baseline->n && detail::is_baseline(jobs[i]))
            baseline = &*profiles[i];

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!profiles[i])
            continue;
        const EntropyProfile &p = *profiles[i];
        TableOptions opt;
        opt.even_only = cfg.even_only;
        if (detail::is_baseline(p.spec))
            opt.baseline = &p;
        else if (cfg.mode == Mode::figure2 || cfg.mode == Mode::figure4)
            opt.baseline = baseline;
        if (cfg.mode == Mode::figure1)
            opt.cft_constant = fit_cft_constant(p, 1.0, 10, p.spec.n / 2, Parity::even);
        out.tables.push_back(make_table(p, opt));
        out.profiles.push_back(p);
        if (cfg.mode == Mode::figure3)
            out.scan.push_back({p.spec.alpha, p.spec.impurity_spin, local_central_charge(p, cfg.l_fixed)});
    }
    out.l_fixed = cfg.l_fixed;
    return out;
}

inline std::string render_oracle_csv(const std::vector<OracleRow> &rows) {
    std::ostringstream os;
    os << "N,alpha,impurity_spin,E_exact,E_dmrg,dE,max_dS,pass\n";
    for (const auto &r : rows)
        os << r.n << ',' << format_number(r.alpha) << ',' << r.impurity_spin.label() << ',' << format_number(r.e_exact)
           << ',' << format_number(r.e_dmrg) << ',' << format_number(std::abs(r.e_exact - r.e_dmrg)) << ','
           << format_number(r.max_ds) << ',' << (r.pass() ? "true" : "false") << '\n';
    return os.str();
}

inline std::string render_scan_csv(const ExperimentOutput &out) {
    std::ostringstream os;
    os << "alpha,impurity_spin,L,c_L\n";
    for (const auto &p : out.scan)
        os << format_number(p.alpha) << ',' << p.impurity_spin.label() << ',' << out.l_fixed << ','
           << format_number(p.c) << '\n';
    return os.str();
}

inline std::string render(const ExperimentOutput &out, Format format) {
    if (format == Format::csv) {
        if (out.mode == Mode::oracle_check)
            return render_oracle_csv(out.oracle);
        std::ostringstream os;
        write_csv(os, out.tables);
        return os.str();
    }
    nlohmann::ordered_json doc;
    doc["partial"] = out.partial();
    if (out.partial())
        doc["failures"] = out.failures;
    if (out.mode == Mode::oracle_check) {
        double max_de = 0.0, max_ds = 0.0;
        auto rows = nlohmann::ordered_json::array();
        for (const auto &r : out.oracle) {
            max_de = std::max(max_de, std::abs(r.e_exact - r.e_dmrg));
            max_ds = std::max(max_ds, r.max_ds);
            rows.push_back({{"N", r.n},
                            {"alpha", r.alpha},
                            {"impurity_spin", r.impurity_spin.label()},
                            {"E_exact", r.e_exact},
                            {"E_dmrg", r.e_dmrg},
                            {"dE", std::abs(r.e_exact - r.e_dmrg)},
                            {"max_dS", r.max_ds},
                            {"pass", r.pass()}});
        }
        doc["max_dE"] = max_de;
        doc["max_dS"] = max_ds;
        doc["oracle"] = std::move(rows);
        return doc.dump(2) + "\n";
    }
    auto runs = nlohmann::ordered_json::array();
    for (const auto &t : out.tables)
        runs.push_back(to_json(t));
    doc["runs"] = std::move(runs);
    if (out.mode == Mode::figure3) {
        auto scan = nlohmann::ordered_json::array();
        for (const auto &p : out.scan)
            scan.push_back({{"alpha", p.alpha}, {"impurity_spin", p.impurity_spin.label()}, {"L", out.l_fixed}, {"c_L", p.c}});
        doc["scan"] = std::move(scan);
    }
    return doc.dump(2) + "\n";
}

/// "<path>.scan.csv" with any ".csv" suffix of `path` replaced.
inline std::string scan_path(const std::string &path) {
    const std::string ext = ".csv";
    if (path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
        return path.substr(0, path.size() - ext.size()) + ".scan.csv";
    return path + ".scan.csv";
}

/// Writes rendered output to cfg.output_path, or `stdout_sink` when the path is empty.
inline void write_output(const ExperimentOutput &out, const ExperimentConfig &cfg, std::ostream &stdout_sink) {
    const std::string text = render(out, cfg.format);
    if (cfg.output_path.empty()) {
        stdout_sink << text;
        stdout_sink.flush();
        if (!stdout_sink)
            throw IoError("write to standard output failed");
    } else {
        write_text_file(cfg.output_path, text);
    }
    if (out.mode == Mode::figure3 && cfg.format == Format::csv)
        write_text_file(scan_path(cfg.output_path), render_scan_csv(out));
}

/// Exit status: 0 ok, 1 config error, 2 solver failure or non-convergence, 3 I/O error.
inline int run_experiment(const ExperimentConfig &cfg, std::ostream &stdout_sink, std::ostream &log) {
    try {
        const ExperimentOutput out = compute_experiment(cfg, &log);
        write_output(out, cfg, stdout_sink);
        if (out.mode == Mode::oracle_check) {
            const auto bad = std::count_if(out.oracle.begin(), out.oracle.end(), [](const auto &r) { return !r.pass(); });
            log << "oracle: " << out.oracle.size() - static_cast<std::size_t>(bad) << "/" << out.oracle.size()
                << " within tolerance\n";
        }
        if (out.partial()) {
            log << "partial results: " << out.failures.size() << " run(s) failed\n";
            return 2;
        }
        if (!out.all_converged()) {
            log << "warning: sweep energy did not converge within " << cfg.sweep.max_sweeps << " sweeps\n";
            return 2;
        }
        return 0;
    } catch (const ConfigError &e) {
        log << "config error: " << e.what() << '\n';
        return 1;
    } catch (const IoError &e) {
        log << "I/O error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception &e) {
        log << "solver error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace spinchain
