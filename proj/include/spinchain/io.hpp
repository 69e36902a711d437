#pragma once

#include "spinchain/analysis.hpp"
#include "spinchain/dmrg.hpp"
#include "spinchain/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace spinchain {

/// One exported line: a single cut L of a single run.
struct ProfileRow {
    int n = 0;
    double alpha = 0.0;
    Spin impurity_spin = Spin::half();
    int l = 0;
    double s = 0.0;
    double t = 0.0;
    std::optional<double> c;
    std::optional<double> ds;
    double trunc_err = 0.0;
    std::optional<double> s_cft; ///< conformal reference, figure1 only
};

struct RunMeta {
    int n = 0;
    double alpha = 0.0;
    Spin impurity_spin = Spin::half();
    int m = 0;
    int sweeps_used = 0;
    double energy = 0.0;
    std::uint64_t seed = 0;
    bool degeneracy_flag = false;
    bool converged = false;
    double max_truncation_error = 0.0;
};

struct ProfileTable {
    RunMeta meta;
    std::vector<ProfileRow> rows;
};

struct TableOptions {
    const EntropyProfile *baseline = nullptr; ///< fills dS_L when set
    bool even_only = false;
    std::optional<double> cft_constant; ///< fills S_cft = T(L)/6 + A (c = 1)
};

inline RunMeta run_meta(const EntropyProfile &p) {
    return {p.spec.n, p.spec.alpha, p.spec.impurity_spin, p.m,        p.sweeps_used,
            p.energy, p.seed,       p.degeneracy_flag,    p.converged, p.max_truncation_error};
}

/// Exported c(L): the stencil points L-2 and L+2 must lie in 2..N-2, so L=3 and L=N-3 stay empty.
inline std::optional<double> exported_central_charge(const EntropyProfile &p, int l) {
    if (l < 4 || l > p.spec.n - 4)
        return std::nullopt;
    try {
        return local_central_charge(p, l);
    } catch (const SingularityError &) {
        return std::nullopt;
    }
}

inline ProfileTable make_table(const EntropyProfile &p, const TableOptions &opt = {}) {
    std::vector<double> ds;
    if (opt.baseline)
        ds = entropy_difference(p, *opt.baseline);
    ProfileTable table{run_meta(p), {}};
    const int n = p.spec.n;
    for (int l = 1; l <= n - 1; ++l) {
        if (opt.even_only && l % 2 != 0)
            continue;
        ProfileRow r;
        r.n = n;
        r.alpha = p.spec.alpha;
        r.impurity_spin = p.spec.impurity_spin;
        r.l = l;
        r.s = p.entropy_at(l);
        r.t = conformal_distance(n, l);
        r.c = exported_central_charge(p, l);
        if (opt.baseline)
            r.ds = ds[static_cast<std::size_t>(l - 1)];
        r.trunc_err = p.truncation_error.at(static_cast<std::size_t>(l - 1));
        if (opt.cft_constant)
            r.s_cft = cft_entropy(n, l, 1.0, *opt.cft_constant);
        table.rows.push_back(r);
    }
    return table;
}

/// %.17g, enough digits to recover the double exactly.
inline std::string format_number(double x) {
    if (!std::isfinite(x))
        throw IntegrityError("refusing to export a non-finite value");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline Spin parse_spin(std::string_view s) {
    if (s == "half" || s == "1/2" || s == "0.5")
        return Spin::half();
    if (s == "one" || s == "1")
        return Spin::one();
    throw ConfigError("impurity_spin: expected half or one, got '" + std::string(s) + "'");
}

inline constexpr const char *csv_header_base = "N,alpha,impurity_spin,L,S_L,T_L,c_L,dS_L,trunc_err";

inline void write_csv(std::ostream &os, const std::vector<ProfileTable> &tables) {
    bool with_cft = false;
    for (const auto &t : tables)
        for (const auto &r : t.rows)
            with_cft = with_cft || r.s_cft.has_value();
    os << csv_header_base << (with_cft ? ",S_cft" : "") << '\n';
    auto opt = [](const std::optional<double> &v) { return v ? format_number(*v) : std::string(); };
    for (const auto &t : tables)
        for (const auto &r : t.rows) {
            os << r.n << ',' << format_number(r.alpha) << ',' << r.impurity_spin.label() << ',' << r.l << ','
               << format_number(r.s) << ',' << format_number(r.t) << ',' << opt(r.c) << ',' << opt(r.ds) << ','
               << format_number(r.trunc_err);
            if (with_cft)
                os << ',' << opt(r.s_cft);
            os << '\n';
        }
}

namespace detail {

inline std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string &s, const std::string &field) {
    char *end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw IoError("column " + field + ": cannot parse '" + s + "' as a number");
    return v;
}

inline int parse_int(const std::string &s, const std::string &field) {
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw IoError("column " + field + ": cannot parse '" + s + "' as an integer");
    return v;
}

} // namespace detail

inline std::vector<ProfileRow> read_csv(std::istream &is) {
    std::string line;
    if (!std::getline(is, line))
        throw IoError("empty CSV input");
    const auto header = detail::split(line, ',');
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i)
        col[header[i]] = i;
    for (const char *name : {"N", "alpha", "impurity_spin", "L", "S_L", "T_L", "c_L", "dS_L", "trunc_err"})
        if (!col.count(name))
            throw IoError(std::string("CSV header lacks column ") + name);
    std::vector<ProfileRow> rows;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto f = detail::split(line, ',');
        if (f.size() != header.size())
            throw IoError("CSV row has " + std::to_string(f.size()) + " fields, header has " +
                          std::to_string(header.size()));
        auto get = [&](const char *k) -> const std::string & { return f[col.at(k)]; };
        auto opt = [&](const char *k) -> std::optional<double> {
            const auto &v = get(k);
            return v.empty() ? std::nullopt : std::optional<double>(detail::parse_double(v, k));
        };
        ProfileRow r;
        r.n = detail::parse_int(get("N"), "N");
        r.alpha = detail::parse_double(get("alpha"), "alpha");
        try {
            r.impurity_spin = parse_spin(get("impurity_spin"));
        } catch (const ConfigError &e) {
            throw IoError(e.what());
        }
        r.l = detail::parse_int(get("L"), "L");
        r.s = detail::parse_double(get("S_L"), "S_L");
        r.t = detail::parse_double(get("T_L"), "T_L");
        r.c = opt("c_L");
        r.ds = opt("dS_L");
        r.trunc_err = detail::parse_double(get("trunc_err"), "trunc_err");
        if (col.count("S_cft"))
            r.s_cft = opt("S_cft");
        rows.push_back(r);
    }
    return rows;
}

inline nlohmann::ordered_json to_json(const ProfileTable &t) {
    using nlohmann::ordered_json;
    auto opt = [](const std::optional<double> &v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    ordered_json run;
    run["N"] = t.meta.n;
    run["alpha"] = t.meta.alpha;
    run["impurity_spin"] = t.meta.impurity_spin.label();
    run["m"] = t.meta.m;
    run["sweeps_used"] = t.meta.sweeps_used;
    run["energy"] = t.meta.energy;
    run["seed"] = t.meta.seed;
    run["degeneracy_flag"] = t.meta.degeneracy_flag;
    run["converged"] = t.meta.converged;
    run["max_truncation_error"] = t.meta.max_truncation_error;
    ordered_json rows = ordered_json::array();
    for (const auto &r : t.rows) {
        ordered_json row;
        row["L"] = r.l;
        row["S_L"] = r.s;
        row["T_L"] = r.t;
        row["c_L"] = opt(r.c);
        row["dS_L"] = opt(r.ds);
        row["trunc_err"] = r.trunc_err;
        if (r.s_cft)
            row["S_cft"] = *r.s_cft;
        rows.push_back(std::move(row));
    }
    run["rows"] = std::move(rows);
    return run;
}

inline std::vector<ProfileRow> rows_from_json(const nlohmann::ordered_json &doc) {
    std::vector<ProfileRow> out;
    try {
        for (const auto &run : doc.at("runs")) {
            for (const auto &row : run.at("rows")) {
                auto opt = [&](const char *k) -> std::optional<double> {
                    if (!row.contains(k) || row.at(k).is_null())
                        return std::nullopt;
                    return row.at(k).get<double>();
                };
                ProfileRow r;
                r.n = run.at("N").get<int>();
                r.alpha = run.at("alpha").get<double>();
                r.impurity_spin = parse_spin(run.at("impurity_spin").get<std::string>());
                r.l = row.at("L").get<int>();
                r.s = row.at("S_L").get<double>();
                r.t = row.at("T_L").get<double>();
                r.c = opt("c_L");
                r.ds = opt("dS_L");
                r.trunc_err = row.at("trunc_err").get<double>();
                r.s_cft = opt("S_cft");
                out.push_back(r);
            }
        }
    } catch (const nlohmann::json::exception &e) {
        throw IoError(std::string("malformed profile JSON: ") + e.what());
    }
    return out;
}

inline void write_text_file(const std::string &path, const std::string &content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open " + path + " for writing");
    f << content;
    f.flush();
    if (!f)
        throw IoError("write to " + path + " failed");
}

inline std::string read_text_file(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace spinchain
