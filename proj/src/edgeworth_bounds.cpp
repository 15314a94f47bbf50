#include "navae/edgeworth_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "navae/errors.hpp"

namespace navae {

namespace {

void check_args(std::int64_t n, double K) {
    if (n < 1) throw DomainError("delta: n must be >= 1");
    if (!(K >= 1.0) || !std::isfinite(K)) throw DomainError("delta: kurtosis bound K must be finite and >= 1");
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

struct TableRow {
    double n;
    double K;
    double delta;
};

}  // namespace

double delta_berry_esseen(std::int64_t n, double K) {
    check_args(n, K);
    return 0.4690 * std::pow(K, 0.75) / std::sqrt(static_cast<double>(n));
}

double delta_edgeworth_leading(std::int64_t n, double K) {
    check_args(n, K);
    return 0.1995 * (std::pow(K, 0.75) + 1.0) / std::sqrt(static_cast<double>(n));
}

double delta_edgeworth_continuous_leading(std::int64_t n, double K) {
    check_args(n, K);
    return (0.195 * K + 0.01465 * std::pow(K, 1.5)) / static_cast<double>(n);
}

DeltaProvider DeltaProvider::berry_esseen() { return {Kind::BerryEsseen, "be"}; }

DeltaProvider DeltaProvider::edgeworth_leading() { return {Kind::EdgeworthLeading, "edg-leading"}; }

DeltaProvider DeltaProvider::edgeworth_continuous_leading() {
    return {Kind::EdgeworthContinuousLeading, "edg-cont-leading"};
}

DeltaProvider DeltaProvider::user(Function f, bool certified, std::string label) {
    if (!f) throw ConfigError("delta provider: empty user function");
    DeltaProvider p(Kind::UserSupplied, std::move(label));
    p.user_fn_ = std::move(f);
    p.user_certified_ = certified;
    return p;
}

DeltaProvider DeltaProvider::constant(double value, bool certified) {
    std::ostringstream label;
    label << "const:" << value;
    return user([value](std::int64_t, double) { return value; }, certified, label.str());
}

DeltaProvider DeltaProvider::min_of(std::vector<DeltaProvider> members) {
    if (members.empty()) throw ConfigError("delta provider: min() needs at least one member");
    std::string label = "min(";
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i) label += ",";
        label += members[i].label();
    }
    label += ")";
    DeltaProvider p(Kind::MinOf, std::move(label));
    p.members_ = std::move(members);
    return p;
}

DeltaProvider DeltaProvider::from_table_csv(const std::string& path, bool certified) {
    std::ifstream in(path);
    if (!in) throw ConfigError("delta table: cannot open '" + path + "'");
    std::vector<TableRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::stringstream ss(t);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
            throw DataError("delta table line " + std::to_string(line_no) + ": expected n,K,delta");
        }
        try {
            std::size_t pos = 0;
            TableRow row{std::stod(trim(a), &pos), 0, 0};
            row.K = std::stod(trim(b));
            row.delta = std::stod(trim(c));
            rows.push_back(row);
        } catch (const std::logic_error&) {
            if (rows.empty() && trim(a) == "n") continue;  // header
            throw DataError("delta table line " + std::to_string(line_no) + ": non-numeric cell");
        }
    }
    if (rows.empty()) throw DataError("delta table '" + path + "' has no rows");
    auto table = std::make_shared<const std::vector<TableRow>>(std::move(rows));
    auto fn = [table](std::int64_t n, double K) {
        const double nn = static_cast<double>(n);
        double best_n = -1.0;
        for (const auto& r : *table) {
            if (r.n <= nn && r.K >= K) best_n = std::max(best_n, r.n);
        }
        if (best_n < 0.0) throw ConfigError("delta table: no row covers the requested (n, K)");
        double best_k = std::numeric_limits<double>::infinity();
        double value = 0.0;
        for (const auto& r : *table) {
            if (r.n == best_n && r.K >= K && r.K < best_k) {
                best_k = r.K;
                value = r.delta;
            }
        }
        return value;
    };
    return user(std::move(fn), certified, "user:" + path);
}

DeltaProvider DeltaProvider::parse(std::string_view spec_in) {
    const std::string spec = trim(spec_in);
    if (spec == "be") return berry_esseen();
    if (spec == "edg-leading") return edgeworth_leading();
    if (spec == "edg-cont-leading") return edgeworth_continuous_leading();
    if (spec.rfind("user:", 0) == 0) return from_table_csv(spec.substr(5));
    if (spec.rfind("min(", 0) == 0 && spec.back() == ')') {
        std::vector<DeltaProvider> members;
        std::stringstream ss(spec.substr(4, spec.size() - 5));
        std::string item;
        while (std::getline(ss, item, ',')) members.push_back(parse(item));
        return min_of(std::move(members));
    }
    throw ConfigError("unknown delta provider '" + spec + "'");
}

bool DeltaProvider::certified() const {
    switch (kind_) {
        case Kind::BerryEsseen:
            return true;
        case Kind::UserSupplied:
            return user_certified_;
        case Kind::MinOf:
            return std::all_of(members_.begin(), members_.end(),
                               [](const DeltaProvider& m) { return m.certified(); });
        default:
            return false;
    }
}

double DeltaProvider::operator()(std::int64_t n, double K) const {
    switch (kind_) {
        case Kind::BerryEsseen:
            return delta_berry_esseen(n, K);
        case Kind::EdgeworthLeading:
            return delta_edgeworth_leading(n, K);
        case Kind::EdgeworthContinuousLeading:
            return delta_edgeworth_continuous_leading(n, K);
        case Kind::UserSupplied: {
            check_args(n, K);
            const double d = user_fn_(n, K);
            if (!std::isfinite(d) || d <= 0.0) {
                throw ConfigError("delta provider '" + label_ + "' returned a non-positive or non-finite value");
            }
            return d;
        }
        case Kind::MinOf: {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& m : members_) d = std::min(d, m(n, K));
            return d;
        }
    }
    throw ConfigError("delta provider: invalid kind");
}

}  // namespace navae
