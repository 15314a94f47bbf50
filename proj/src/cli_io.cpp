#include "navae/cli_io.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "navae/errors.hpp"
#include "navae/specialfn.hpp"

namespace navae {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_double(std::string_view text) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<double> parse_number_list(std::string_view s, const char* what) {
    std::vector<double> out;
    for (const auto& item : split(s, ',')) {
        const auto v = parse_double(item);
        if (!v) throw ConfigError(std::string(what) + ": '" + std::string(s) + "' is not a comma list of numbers");
        out.push_back(*v);
    }
    return out;
}

std::vector<std::int64_t> parse_n_list(std::string_view s) {
    std::vector<std::int64_t> out;
    for (double v : parse_number_list(s, "--n")) {
        if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("--n: sample sizes must be positive integers");
        out.push_back(static_cast<std::int64_t>(v));
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// RFC 4180 field splitting for one logical record.
std::vector<std::string> split_csv_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// Column table for ReportRow: name plus accessors (as text).
struct Column {
    const char* name;
    std::string (*get)(const ReportRow&);
    void (*set)(ReportRow&, const std::string&);
};

template <std::optional<double> ReportRow::*F>
std::string get_opt(const ReportRow& r) {
    return (r.*F) ? format_double(*(r.*F)) : std::string();
}
template <std::optional<double> ReportRow::*F>
void set_opt(ReportRow& r, const std::string& s) {
    if (s.empty()) {
        r.*F = std::nullopt;
        return;
    }
    const auto v = parse_double(s);
    if (!v) throw DataError("report: bad number '" + s + "'");
    r.*F = *v;
}
template <std::optional<std::int64_t> ReportRow::*F>
std::string get_int(const ReportRow& r) {
    return (r.*F) ? std::to_string(*(r.*F)) : std::string();
}
template <std::optional<std::int64_t> ReportRow::*F>
void set_int(ReportRow& r, const std::string& s) {
    if (s.empty()) {
        r.*F = std::nullopt;
        return;
    }
    r.*F = std::stoll(s);
}

const std::vector<Column>& columns() {
    static const std::vector<Column> cols = {
        {"method", [](const ReportRow& r) { return r.method; }, [](ReportRow& r, const std::string& s) { r.method = s; }},
        {"n", get_int<&ReportRow::n>, set_int<&ReportRow::n>},
        {"alpha", get_opt<&ReportRow::alpha>, set_opt<&ReportRow::alpha>},
        {"lower", get_opt<&ReportRow::lower>, set_opt<&ReportRow::lower>},
        {"upper", get_opt<&ReportRow::upper>, set_opt<&ReportRow::upper>},
        {"is_whole_line", [](const ReportRow& r) { return std::string(r.is_whole_line ? "true" : "false"); },
         [](ReportRow& r, const std::string& s) { r.is_whole_line = (s == "true"); }},
        {"width", get_opt<&ReportRow::width>, set_opt<&ReportRow::width>},
        {"coverage", get_opt<&ReportRow::coverage>, set_opt<&ReportRow::coverage>},
        {"mc_se", get_opt<&ReportRow::mc_se>, set_opt<&ReportRow::mc_se>},
        {"whole_line_fraction", get_opt<&ReportRow::whole_line_fraction>, set_opt<&ReportRow::whole_line_fraction>},
        {"mean_alpha_min", get_opt<&ReportRow::mean_alpha_min>, set_opt<&ReportRow::mean_alpha_min>},
        {"median_alpha_min", get_opt<&ReportRow::median_alpha_min>, set_opt<&ReportRow::median_alpha_min>},
        {"alpha_min", get_opt<&ReportRow::alpha_min>, set_opt<&ReportRow::alpha_min>},
        {"a", get_opt<&ReportRow::a>, set_opt<&ReportRow::a>},
        {"a_lower", get_opt<&ReportRow::a_lower>, set_opt<&ReportRow::a_lower>},
        {"a_upper", get_opt<&ReportRow::a_upper>, set_opt<&ReportRow::a_upper>},
        {"n0", get_int<&ReportRow::n0>, set_int<&ReportRow::n0>},
        {"baseline_width", get_opt<&ReportRow::baseline_width>, set_opt<&ReportRow::baseline_width>},
        {"ratio", get_opt<&ReportRow::ratio>, set_opt<&ReportRow::ratio>},
    };
    return cols;
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV input

Sample parse_mean_csv(std::istream& in) {
    std::vector<double> values;
    std::string line;
    int line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto v = parse_double(t);
        if (!v) {
            if (!seen_content && t == "x") {
                seen_content = true;
                continue;
            }
            throw DataError("line " + std::to_string(line_no) + ": '" + t + "' is not a number");
        }
        if (!std::isfinite(*v)) throw DataError("line " + std::to_string(line_no) + ": non-finite value");
        seen_content = true;
        values.push_back(*v);
    }
    if (values.empty()) throw DataError("input has no numeric rows");
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Sample load_mean_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_mean_csv(in);
}

Design parse_ols_csv(std::istream& in, bool add_intercept, std::string_view u_spec) {
    std::string line;
    int line_no = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) header = split(trim(line), ',');
    }
    if (header.empty()) throw DataError("regression input is empty");
    if (trim(header[0]) != "y") throw DataError("regression input: header must start with 'y'");
    const std::size_t cols = header.size();
    if (cols < 2) throw DataError("regression input: need at least one regressor column");
    const std::size_t p = cols - 1 + (add_intercept ? 1 : 0);

    const auto u_vals = parse_number_list(u_spec, "--u");
    if (u_vals.size() != p) {
        throw ConfigError("u has " + std::to_string(u_vals.size()) + " entries, the design has " + std::to_string(p) +
                          " columns");
    }

    std::vector<double> cells;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto fields = split(t, ',');
        if (fields.size() != cols) throw ConfigError("line " + std::to_string(line_no) + ": ragged row");
        for (const auto& f : fields) {
            const auto v = parse_double(f);
            if (!v || !std::isfinite(*v)) {
                throw DataError("line " + std::to_string(line_no) + ": '" + trim(f) + "' is not a finite number");
            }
            cells.push_back(*v);
        }
        ++rows;
    }
    if (rows == 0) throw DataError("regression input has no data rows");
    Design d;
    d.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
    d.y.resize(static_cast<Eigen::Index>(rows));
    const std::size_t off = add_intercept ? 1 : 0;
    for (std::size_t i = 0; i < rows; ++i) {
        d.y(i) = cells[i * cols];
        if (add_intercept) d.X(i, 0) = 1.0;
        for (std::size_t j = 1; j < cols; ++j) d.X(i, j - 1 + off) = cells[i * cols + j];
    }
    d.u = Eigen::Map<const Eigen::VectorXd>(u_vals.data(), static_cast<Eigen::Index>(p));
    d.validate();
    return d;
}

Design load_ols_csv(const std::string& path, bool add_intercept, std::string_view u_spec) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_ols_csv(in, add_intercept, u_spec);
}

// ---------------------------------------------------------------------------
// Reports

ReportRow to_report_row(const ConfidenceInterval& ci, std::int64_t n) {
    ReportRow r;
    r.method = ci.method();
    r.n = n;
    r.alpha = 1.0 - ci.level();
    r.is_whole_line = ci.is_whole_line();
    if (ci.is_bounded()) {
        r.lower = ci.lower();
        r.upper = ci.upper();
        r.width = ci.width();
    }
    return r;
}

ReportRow to_report_row(const SimRow& s) {
    ReportRow r;
    r.method = s.method;
    r.n = s.n;
    r.alpha = s.alpha;
    r.coverage = s.coverage;
    r.mc_se = s.mc_se;
    r.width = s.mean_width;
    r.whole_line_fraction = s.whole_line_fraction;
    r.mean_alpha_min = s.mean_alpha_min;
    r.median_alpha_min = s.median_alpha_min;
    return r;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    const auto& cols = columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].name;
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << csv_quote(cols[i].get(row));
        out << '\n';
    }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
    const auto& cols = columns();
    std::string line;
    if (!std::getline(in, line)) throw DataError("report: missing header");
    const auto header = split_csv_record(line);
    std::vector<const Column*> order;
    for (const auto& h : header) {
        const Column* found = nullptr;
        for (const auto& c : cols) {
            if (h == c.name) found = &c;
        }
        if (!found) throw DataError("report: unknown column '" + h + "'");
        order.push_back(found);
    }
    std::vector<ReportRow> rows;
    std::string record;
    while (std::getline(in, line)) {
        record += line;
        // A quoted field may span lines.
        if (std::count(record.begin(), record.end(), '"') % 2 == 1) {
            record += '\n';
            continue;
        }
        if (record.empty()) continue;
        const auto fields = split_csv_record(record);
        record.clear();
        if (fields.size() != order.size()) throw DataError("report: ragged row");
        ReportRow r;
        for (std::size_t i = 0; i < fields.size(); ++i) order[i]->set(r, fields[i]);
        rows.push_back(std::move(r));
    }
    return rows;
}

json to_json(const ReportRow& row) {
    json j = json::object();
    j["method"] = row.method;
    auto put = [&](const char* k, const auto& v) {
        if (v) {
            j[k] = *v;
        } else {
            j[k] = nullptr;
        }
    };
    put("n", row.n);
    put("alpha", row.alpha);
    put("lower", row.lower);
    put("upper", row.upper);
    j["is_whole_line"] = row.is_whole_line;
    put("width", row.width);
    put("coverage", row.coverage);
    put("mc_se", row.mc_se);
    put("whole_line_fraction", row.whole_line_fraction);
    put("mean_alpha_min", row.mean_alpha_min);
    put("median_alpha_min", row.median_alpha_min);
    put("alpha_min", row.alpha_min);
    put("a", row.a);
    put("a_lower", row.a_lower);
    put("a_upper", row.a_upper);
    put("n0", row.n0);
    put("baseline_width", row.baseline_width);
    put("ratio", row.ratio);
    return j;
}

// ---------------------------------------------------------------------------
// Simulation documents

namespace {

void reject_unknown_keys(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
    if (!doc.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
    if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("key '") + key + "': " + e.what());
    }
}

Bound parse_bound(const json& doc, const char* key, Bound fallback, double inflation) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (v.is_number()) return Bound::fixed(v.get<double>());
    if (v.is_string() && v.get<std::string>() == "plugin") return Bound::plug_in(inflation);
    throw ConfigError(std::string("bound '") + key + "' must be a number or \"plugin\"");
}

Dgp parse_dgp(const json& doc) {
    if (doc.is_string()) {
        const auto s = doc.get<std::string>();
        if (s == "exponential") return Dgp::exponential();
        if (s == "normal") return Dgp::normal();
        if (s == "gumbel_hetero_linear") return Dgp::gumbel_hetero_linear();
        throw ConfigError("unknown dgp '" + s + "'");
    }
    reject_unknown_keys(doc, {"kind", "mean", "sd"}, "dgp");
    const auto kind = get_or<std::string>(doc, "kind", "");
    if (kind == "normal") return Dgp::normal(get_or(doc, "mean", 0.0), get_or(doc, "sd", 1.0));
    if (doc.size() > 1) throw ConfigError("dgp '" + kind + "' takes no parameters");
    return parse_dgp(json(kind));
}

}  // namespace

Method parse_method(const json& doc) {
    reject_unknown_keys(doc,
                        {"name", "kind", "K", "delta", "a_rule", "sigma", "var_bound", "support", "plugin_K_inflation",
                         "report_alpha_min", "lambda_reg", "K_reg", "K_eps", "K_xi", "inflation", "omega_rule", "rho"},
                        "method");
    const auto kind = get_or<std::string>(doc, "kind", "");
    auto name = get_or<std::string>(doc, "name", kind);
    static const std::map<std::string, MeanMethod::Kind> mean_kinds = {
        {"clt", MeanMethod::Kind::Clt},
        {"student", MeanMethod::Kind::Student},
        {"known", MeanMethod::Kind::KnownVariance},
        {"unknown", MeanMethod::Kind::UnknownVariance},
        {"chebyshev", MeanMethod::Kind::Chebyshev},
        {"hoeffding", MeanMethod::Kind::Hoeffding},
    };
    const std::set<std::string> ols_only = {"lambda_reg", "K_reg", "K_eps", "K_xi", "inflation", "omega_rule", "rho"};
    if (auto it = mean_kinds.find(kind); it != mean_kinds.end()) {
        for (const auto& k : ols_only) {
            if (doc.contains(k)) throw ConfigError("method '" + name + "': key '" + k + "' applies to OLS methods only");
        }
        MeanMethod m;
        m.name = name;
        m.kind = it->second;
        m.K = get_or(doc, "K", 9.0);
        m.delta = DeltaProvider::parse(get_or<std::string>(doc, "delta", "be"));
        m.a_rule = parse_a_rule(get_or<std::string>(doc, "a_rule", "1+n^-1/5"));
        m.sigma_known = get_or(doc, "sigma", 1.0);
        m.var_bound = get_or(doc, "var_bound", 1.0);
        if (doc.contains("support")) {
            const auto s = doc.at("support").get<std::vector<double>>();
            if (s.size() != 2) throw ConfigError("support must be [a, b]");
            m.support_lower = s[0];
            m.support_upper = s[1];
        }
        if (doc.contains("plugin_K_inflation") && !doc.at("plugin_K_inflation").is_null()) {
            m.plugin_K_inflation = doc.at("plugin_K_inflation").get<double>();
        }
        m.report_alpha_min = get_or(doc, "report_alpha_min", false);
        return m;
    }
    if (kind == "asymp" || kind == "edg") {
        for (const auto& k : {"K", "sigma", "var_bound", "support", "plugin_K_inflation", "report_alpha_min"}) {
            if (doc.contains(k)) throw ConfigError("method '" + name + "': key '" + k + "' applies to mean methods only");
        }
        OlsMethod m;
        m.name = name;
        m.kind = kind == "asymp" ? OlsMethod::Kind::Asymp : OlsMethod::Kind::Edg;
        const double inflation = get_or(doc, "inflation", 0.0);
        m.bounds.lambda_reg = parse_bound(doc, "lambda_reg", Bound::plug_in(inflation), inflation);
        m.bounds.K_reg = parse_bound(doc, "K_reg", Bound::plug_in(inflation), inflation);
        m.bounds.K_eps = parse_bound(doc, "K_eps", Bound::plug_in(inflation), inflation);
        m.bounds.K_xi = parse_bound(doc, "K_xi", Bound::fixed(9.0), inflation);
        const auto delta = DeltaProvider::parse(get_or<std::string>(doc, "delta", "be"));
        if (doc.contains("rho")) {
            m.tuning = OlsTuning::from_rate(doc.at("rho").is_string() && doc.at("rho").get<std::string>() == "inf"
                                                ? std::numeric_limits<double>::infinity()
                                                : doc.at("rho").get<double>(),
                                            delta);
        } else {
            m.tuning.delta = delta;
        }
        if (doc.contains("omega_rule")) m.tuning.omega = PowerRule::parse(doc.at("omega_rule").get<std::string>());
        if (doc.contains("a_rule")) m.tuning.a = PowerRule::parse(doc.at("a_rule").get<std::string>());
        return m;
    }
    throw ConfigError("unknown method kind '" + kind + "'");
}

SimStudySpec parse_sim_spec(const json& doc) {
    reject_unknown_keys(doc, {"dgp", "alpha", "n", "replications", "seed", "threads", "methods", "output", "summary"},
                        "simulation config");
    SimStudySpec spec;
    if (!doc.contains("dgp")) throw ConfigError("simulation config: missing 'dgp'");
    spec.dgp = parse_dgp(doc.at("dgp"));
    spec.alpha = get_or(doc, "alpha", 0.10);
    try {
        if (!doc.contains("n")) throw ConfigError("simulation config: missing 'n'");
        spec.n_grid = doc.at("n").is_array() ? doc.at("n").get<std::vector<std::int64_t>>()
                                             : std::vector<std::int64_t>{doc.at("n").get<std::int64_t>()};
        spec.replications = get_or<std::int64_t>(doc, "replications", 1000);
        spec.seed = get_or<std::uint64_t>(doc, "seed", 1);
        spec.threads = get_or<unsigned>(doc, "threads", 0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("simulation config: ") + e.what());
    }
    if (!doc.contains("methods") || !doc.at("methods").is_array()) {
        throw ConfigError("simulation config: 'methods' must be an array");
    }
    for (const auto& m : doc.at("methods")) spec.methods.push_back(parse_method(m));
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// Command line

namespace {

struct Outputs {
    std::string csv;
    std::string summary;
};

void emit(const std::string& command, const std::vector<ReportRow>& rows, const std::vector<std::string>& warnings,
          const Outputs& outputs, const json& config, std::ostream& out) {
    if (!outputs.csv.empty()) {
        std::ofstream f(outputs.csv);
        if (!f) throw ConfigError("cannot write '" + outputs.csv + "'");
        write_report_csv(f, rows);
    }
    if (!outputs.summary.empty()) {
        json j;
        j["command"] = command;
        j["config"] = config;
        j["warnings"] = warnings;
        j["rows"] = json::array();
        for (const auto& r : rows) j["rows"].push_back(to_json(r));
        std::ofstream f(outputs.summary);
        if (!f) throw ConfigError("cannot write '" + outputs.summary + "'");
        f << j.dump(2) << '\n';
    }
    // The tabular commands have no human-readable form, so their report
    // goes to standard output unless a path was given.
    const bool tabular = command == "simulate" || command == "width-curve";
    if (outputs.csv.empty() && tabular) write_report_csv(out, rows);
}

void print_interval(const ConfidenceInterval& ci, std::ostream& out) {
    out << ci.method() << " (level " << format_double(ci.level()) << "): ";
    if (ci.is_whole_line()) {
        out << "whole real line\n";
    } else {
        out << "[" << format_double(ci.lower()) << ", " << format_double(ci.upper()) << "]\n";
    }
}

void warn_uncertified(const DeltaProvider& d, std::vector<std::string>& warnings, std::ostream& err) {
    if (d.certified()) return;
    const std::string w = "UNCERTIFIED-DELTA: provider '" + d.label() +
                          "' is not a certified bound; the interval loses its finite-sample guarantee";
    err << w << '\n';
    warnings.push_back(w);
}

// Adds "--key value" pairs from a JSON config for every key that was not
// given on the command line.
std::vector<std::string> merge_config(const std::vector<std::string>& args, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config '" + path + "' must be a JSON object");
    std::vector<std::string> out = args;
    for (const auto& [key, value] : doc.items()) {
        const std::string flag = "--" + key;
        if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back(flag);
            continue;
        }
        std::string text;
        if (value.is_string()) {
            text = value.get<std::string>();
        } else if (value.is_array()) {
            for (std::size_t i = 0; i < value.size(); ++i) text += (i ? "," : "") + value[i].dump();
        } else {
            text = value.dump();
        }
        out.push_back(flag);
        out.push_back(text);
    }
    return out;
}

Bound bound_from_flag(const std::string& text, double inflation, const char* what) {
    if (text == "plugin") return Bound::plug_in(inflation);
    const auto v = parse_double(text);
    if (!v) throw ConfigError(std::string(what) + ": expected a number or 'plugin'");
    return Bound::fixed(*v);
}

constexpr const char* kUsage = "usage: navae <mean-ci|ols-ci|feasibility|simulate|width-curve> [options]\n";

struct HelpRequested {
    std::string text;
};

// CLI11 consumes a vector argument list from the back.
void parse_args(CLI::App& app, const std::vector<std::string>& args) {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    }
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    if (args.empty()) throw ConfigError(kUsage);
    const std::string command = args.front();
    if (command == "--help" || command == "-h" || command == "help") throw HelpRequested{kUsage};
    args.erase(args.begin());

    // Pre-scan for --config on the flag-driven commands.
    if (command != "simulate" && command != "width-curve") {
        auto it = std::find(args.begin(), args.end(), "--config");
        if (it != args.end()) {
            if (it + 1 == args.end()) throw ConfigError("--config needs a path");
            const std::string path = *(it + 1);
            args.erase(it, it + 2);
            args = merge_config(args, path);
        }
    }

    CLI::App app{"Finite-sample valid confidence intervals", "navae"};
    Outputs outputs;
    app.add_option("--output", outputs.csv, "CSV report path");
    app.add_option("--summary", outputs.summary, "JSON summary path");
    std::vector<std::string> warnings;
    std::vector<ReportRow> rows;
    json config = json::object();

    double alpha = 0.10;
    std::string delta_text = "be";
    std::string input;

    if (command == "mean-ci") {
        std::string method = "unknown";
        double K = 9.0;
        std::string a_text = "1+n^-1/5";
        std::optional<double> sigma, var_bound;
        std::string support;
        bool plugin_K = false;
        double inflation = 0.0;
        app.add_option("--input", input, "CSV with one numeric column")->required();
        app.add_option("--alpha", alpha);
        app.add_option("--method", method)
            ->check(CLI::IsMember({"clt", "student", "chebyshev", "hoeffding", "known", "unknown", "all"}));
        app.add_option("--K", K, "kurtosis bound");
        app.add_flag("--K-plugin", plugin_K, "use the empirical kurtosis");
        app.add_option("--inflation", inflation, "plug-in inflation M");
        app.add_option("--delta", delta_text);
        app.add_option("--a-rule", a_text);
        app.add_option("--sigma", sigma, "known standard deviation");
        app.add_option("--var-bound", var_bound, "variance bound for Chebyshev");
        app.add_option("--support", support, "a,b support for Hoeffding");
        parse_args(app, args);

        const Sample x = load_mean_csv(input);
        const auto n = static_cast<std::int64_t>(x.size());
        MeanCiConfig cfg{alpha, K, DeltaProvider::parse(delta_text), parse_a_rule(a_text)};
        if (plugin_K) cfg.K = std::max(1.0, sample_kurtosis(x, inflation));
        config = {{"input", input}, {"alpha", alpha}, {"method", method}, {"K", cfg.K},
                  {"delta", cfg.delta.label()}, {"a_rule", to_string(cfg.a_rule)}};

        std::vector<ConfidenceInterval> cis;
        const bool all = method == "all";
        if (all || method == "clt") cis.push_back(ci_clt(x, alpha));
        if (all || method == "student") cis.push_back(ci_student(x, alpha));
        if (method == "chebyshev" || (all && var_bound)) {
            if (!var_bound) throw ConfigError("--method chebyshev needs --var-bound");
            cis.push_back(ci_chebyshev(x, alpha, *var_bound));
        }
        if (method == "hoeffding" || (all && !support.empty())) {
            const auto ab = parse_number_list(support, "--support");
            if (ab.size() != 2) throw ConfigError("--method hoeffding needs --support a,b");
            cis.push_back(ci_hoeffding(x, alpha, ab[0], ab[1]));
        }
        if (method == "known" || (all && sigma)) {
            if (!sigma) throw ConfigError("--method known needs --sigma");
            warn_uncertified(cfg.delta, warnings, err);
            cis.push_back(ci_known_variance(x, *sigma, cfg));
        }
        for (const auto& ci : cis) {
            print_interval(ci, out);
            rows.push_back(to_report_row(ci, n));
        }
        if (all || method == "unknown") {
            warn_uncertified(cfg.delta, warnings, err);
            const auto ci = ci_unknown_variance(x, cfg);
            print_interval(ci, out);
            auto row = to_report_row(ci, n);
            if (const auto a = resolve_a(cfg.a_rule, n, alpha, cfg.K, cfg.delta)) row.a = *a;
            row.alpha_min = alpha_min(n, cfg.K, cfg.a_rule, cfg.delta);
            rows.push_back(row);
        }
    } else if (command == "ols-ci") {
        bool intercept = false;
        std::string u_text;
        std::string method = "edg";
        std::string lam = "plugin", kreg = "plugin", keps = "plugin", kxi = "9";
        double inflation = 0.0;
        std::string omega_text = "n^-1/5", a_text = "1+20*n^-2/5";
        std::optional<std::string> rho_text;
        app.add_option("--input", input, "CSV with header y,x1,...,xp")->required();
        app.add_flag("--intercept", intercept, "prepend an intercept column");
        app.add_option("--u", u_text, "comma list, intercept coordinate first")->required();
        app.add_option("--alpha", alpha);
        app.add_option("--method", method)->check(CLI::IsMember({"asymp", "edg", "all"}));
        app.add_option("--lambda-reg", lam);
        app.add_option("--K-reg", kreg);
        app.add_option("--K-eps", keps);
        app.add_option("--K-xi", kxi);
        app.add_option("--inflation", inflation);
        app.add_option("--omega-rule", omega_text);
        app.add_option("--a-rule", a_text);
        app.add_option("--rho", rho_text, "use omega_n = n^-r(rho), a_n = 1 + n^-2/5");
        app.add_option("--delta", delta_text);
        parse_args(app, args);

        const Design d = load_ols_csv(input, intercept, u_text);
        const OlsFit fit = ols_fit(d.X, d.y);
        OlsBounds bounds{bound_from_flag(lam, inflation, "--lambda-reg"), bound_from_flag(kreg, inflation, "--K-reg"),
                         bound_from_flag(keps, inflation, "--K-eps"), bound_from_flag(kxi, inflation, "--K-xi")};
        OlsTuning tuning;
        tuning.delta = DeltaProvider::parse(delta_text);
        if (rho_text) {
            const double rho = *rho_text == "inf" ? std::numeric_limits<double>::infinity()
                                                  : parse_double(*rho_text).value_or(-1.0);
            tuning = OlsTuning::from_rate(rho, tuning.delta);
        } else {
            tuning.omega = PowerRule::parse(omega_text);
            tuning.a = PowerRule::parse(a_text);
        }
        config = {{"input", input}, {"alpha", alpha}, {"method", method}, {"omega_rule", tuning.omega.to_string()},
                  {"a_rule", tuning.a.to_string()}, {"delta", tuning.delta.label()}};
        if (method == "asymp" || method == "all") {
            const auto ci = ci_asymp(fit, d.u, alpha);
            print_interval(ci, out);
            rows.push_back(to_report_row(ci, fit.n));
        }
        if (method == "edg" || method == "all") {
            warn_uncertified(tuning.delta, warnings, err);
            EdgDetails det;
            const auto ci = ci_edg(fit, d.u, alpha, bounds, tuning, &det);
            print_interval(ci, out);
            auto row = to_report_row(ci, fit.n);
            row.n0 = det.n0;
            row.a = det.a;
            rows.push_back(row);
            config["resolved_bounds"] = {{"lambda_reg", det.bounds.lambda_reg},
                                         {"K_reg", det.bounds.K_reg},
                                         {"K_eps", det.bounds.K_eps},
                                         {"K_xi", det.bounds.K_xi}};
            config["terms"] = {{"nu_edg", det.nu_edg}, {"r_lin", det.r_lin}, {"r_var", det.r_var},
                               {"q_edg", det.q_edg}};
        }
    } else if (command == "feasibility") {
        std::string mode = "alpha-min";
        double K = 9.0;
        std::string a_text = "1+n^-1/5";
        std::string n_text;
        double kxi = 9.0, kreg = 1e-9;
        std::string omega_text = "n^-1/5";
        app.add_option("--mode", mode)->check(CLI::IsMember({"alpha-min", "interval", "n0"}));
        app.add_option("--K", K);
        app.add_option("--a-rule", a_text);
        app.add_option("--n", n_text, "comma list of sample sizes");
        app.add_option("--alpha", alpha);
        app.add_option("--delta", delta_text);
        app.add_option("--K-xi", kxi);
        app.add_option("--K-reg", kreg);
        app.add_option("--omega-rule", omega_text);
        parse_args(app, args);
        const auto delta = DeltaProvider::parse(delta_text);
        warn_uncertified(delta, warnings, err);
        config = {{"mode", mode}, {"delta", delta.label()}, {"alpha", alpha}};
        if (mode == "n0") {
            OlsTuning tuning;
            tuning.delta = delta;
            tuning.omega = PowerRule::parse(omega_text);
            tuning.a = PowerRule::parse(a_text == "1+n^-1/5" && !app.count("--a-rule") ? "1+20*n^-2/5" : a_text);
            const ResolvedBounds b{1.0, kreg, 1.0, kxi};
            ReportRow r;
            r.method = "n0";
            r.alpha = alpha;
            r.n0 = n_zero(alpha, tuning, b);
            out << "n0 = " << *r.n0 << '\n';
            rows.push_back(r);
        } else {
            if (n_text.empty()) throw ConfigError("feasibility: --n is required");
            const ARule rule = parse_a_rule(a_text);
            config["K"] = K;
            config["a_rule"] = to_string(rule);
            for (const auto n : parse_n_list(n_text)) {
                ReportRow r;
                r.n = n;
                if (mode == "alpha-min") {
                    r.method = "alpha_min";
                    r.alpha_min = alpha_min(n, K, rule, delta);
                    if (const auto* p = std::get_if<PowerRule>(&rule)) r.a = (*p)(n);
                    out << "n=" << n << " alpha_min=" << format_double(*r.alpha_min) << '\n';
                } else {
                    r.method = "a_interval";
                    r.alpha = alpha;
                    const auto region = feasible_a_interval(n, alpha, K, delta);
                    if (region) {
                        r.a_lower = region->lower;
                        r.a_upper = region->upper;
                        r.a = optimize_a(n, alpha, K, delta);
                        out << "n=" << n << " I_n=(" << format_double(region->lower) << ", "
                            << format_double(region->upper) << ") a*=" << format_double(*r.a) << '\n';
                    } else {
                        out << "n=" << n << " I_n=empty\n";
                    }
                }
                rows.push_back(r);
            }
        }
    } else if (command == "simulate" || command == "width-curve") {
        std::string config_path;
        std::optional<unsigned> threads;
        app.add_option("--config", config_path, "JSON study document")->required();
        app.add_option("--threads", threads);
        parse_args(app, args);
        const json doc = load_json_file(config_path);
        SimStudySpec spec = parse_sim_spec(doc);
        if (threads) spec.threads = *threads;
        if (outputs.csv.empty()) outputs.csv = get_or<std::string>(doc, "output", "");
        if (outputs.summary.empty()) outputs.summary = get_or<std::string>(doc, "summary", "");
        config = doc;
        for (const auto& m : spec.methods) {
            if (method_uses_uncertified_delta(m)) {
                const auto& d = std::holds_alternative<MeanMethod>(m) ? std::get<MeanMethod>(m).delta
                                                                      : std::get<OlsMethod>(m).tuning.delta;
                warn_uncertified(d, warnings, err);
            }
        }
        if (command == "simulate") {
            const auto report = run_coverage_study(spec);
            for (const auto& s : report.rows) rows.push_back(to_report_row(s));
        } else {
            for (const auto& w : width_curve(spec)) {
                ReportRow r;
                r.method = method_name(spec.methods.front());
                r.n = w.n;
                r.alpha = spec.alpha;
                r.width = w.mean_width;
                r.baseline_width = w.baseline_width;
                r.ratio = w.ratio;
                r.is_whole_line = !w.ratio.has_value() && !w.mean_width.has_value();
                rows.push_back(r);
            }
        }
    } else {
        throw ConfigError("unknown command '" + command + "'");
    }

    if (command == "mean-ci" || command == "ols-ci") {
        for (auto& r : rows) r.alpha = alpha;
    }
    emit(command, rows, warnings, outputs, config, out);
    return 0;
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        return dispatch(std::move(args), out, err);
    } catch (const HelpRequested& h) {
        out << h.text;
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        err << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace navae
