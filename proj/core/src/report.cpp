#include <geoloop/errors.hpp>
#include <geoloop/report.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace geoloop {

ReportEntry& ResidualReport::add(std::string id, std::string anchor, double residual, double tolerance,
                                 nlohmann::json meta) {
  ReportEntry e;
  e.id = std::move(id);
  e.anchor = std::move(anchor);
  e.residual = residual;
  e.tolerance = tolerance;
  e.pass = residual <= tolerance;
  e.meta = std::move(meta);
  entries.push_back(std::move(e));
  return entries.back();
}

ReportEntry& ResidualReport::add_failure(std::string id, std::string anchor, double tolerance,
                                         std::string_view message) {
  return add(std::move(id), std::move(anchor), std::numeric_limits<double>::infinity(), tolerance,
             nlohmann::json{{"error", std::string(message)}});
}

void ResidualReport::append(const ResidualReport& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

void ResidualReport::sort_entries() {
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
}

bool ResidualReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
}

const ReportEntry* ResidualReport::find(std::string_view id) const {
  auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.id == id; });
  return it == entries.end() ? nullptr : &*it;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

// JSON has no infinities; non-finite residuals travel as strings.
nlohmann::json encode_real(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

double decode_real(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw PreconditionError("report field is not a real number");
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

nlohmann::json to_json(const ResidualReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"id", e.id},
                       {"anchor", e.anchor},
                       {"residual", encode_real(e.residual)},
                       {"tol", encode_real(e.tolerance)},
                       {"pass", e.pass},
                       {"meta", e.meta}});
  }
  return {{"suite", report.suite}, {"config", report.config}, {"entries", entries}, {"elapsed_s", report.elapsed_s}};
}

ResidualReport report_from_json(const nlohmann::json& j) {
  ResidualReport r;
  r.suite = j.at("suite").get<std::string>();
  r.config = j.at("config");
  r.elapsed_s = j.at("elapsed_s").get<double>();
  for (const auto& e : j.at("entries")) {
    ReportEntry entry;
    entry.id = e.at("id").get<std::string>();
    entry.anchor = e.at("anchor").get<std::string>();
    entry.residual = decode_real(e.at("residual"));
    entry.tolerance = decode_real(e.at("tol"));
    entry.pass = e.at("pass").get<bool>();
    entry.meta = e.at("meta");
    r.entries.push_back(std::move(entry));
  }
  return r;
}

std::string to_csv(const ResidualReport& report) {
  std::ostringstream out;
  out << "id,anchor,residual,tol,pass,meta\n";
  for (const auto& e : report.entries) {
    out << csv_quote(e.id) << ',' << csv_quote(e.anchor) << ',' << format_number(e.residual) << ','
        << format_number(e.tolerance) << ',' << (e.pass ? "true" : "false") << ',' << csv_quote(e.meta.dump())
        << '\n';
  }
  return out.str();
}

}  // namespace geoloop
