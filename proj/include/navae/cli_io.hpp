#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "navae/dgp_sim.hpp"
#include "navae/mean_ci.hpp"
#include "navae/ols_ci.hpp"

namespace navae {

/// One numeric column, optional header "x", blank lines skipped.
Sample load_mean_csv(const std::string& path);
Sample parse_mean_csv(std::istream& in);

/// Header "y,x1,...,xp". With `add_intercept` a column of ones is prepended
/// and u must have p+1 entries, intercept first.
Design load_ols_csv(const std::string& path, bool add_intercept, std::string_view u_spec);
Design parse_ols_csv(std::istream& in, bool add_intercept, std::string_view u_spec);

/// Flat output record shared by every command. Empty optionals are written
/// as empty CSV cells and JSON nulls.
struct ReportRow {
    std::string method;
    std::optional<std::int64_t> n;
    std::optional<double> alpha;
    std::optional<double> lower;
    std::optional<double> upper;
    bool is_whole_line = false;
    std::optional<double> width;
    std::optional<double> coverage;
    std::optional<double> mc_se;
    std::optional<double> whole_line_fraction;
    std::optional<double> mean_alpha_min;
    std::optional<double> median_alpha_min;
    std::optional<double> alpha_min;
    std::optional<double> a;
    std::optional<double> a_lower;
    std::optional<double> a_upper;
    std::optional<std::int64_t> n0;
    std::optional<double> baseline_width;
    std::optional<double> ratio;

    bool operator==(const ReportRow&) const = default;
};

ReportRow to_report_row(const ConfidenceInterval& ci, std::int64_t n);
ReportRow to_report_row(const SimRow& row);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(std::istream& in);
nlohmann::json to_json(const ReportRow& row);

/// Builds a study from its JSON document; unknown keys are rejected.
SimStudySpec parse_sim_spec(const nlohmann::json& doc);
Method parse_method(const nlohmann::json& doc);

/// Entry point of the command-line tool. Returns the process exit status:
/// 0 success, 2 configuration error, 3 data error.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace navae
