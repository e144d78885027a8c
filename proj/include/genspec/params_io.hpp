#pragma once

// Flat key=value serialization of Params. Lines starting with '#' and blank
// lines are ignored; unknown keys are rejected.

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "genspec/model.hpp"

namespace genspec {

struct ParamsFormatError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline std::string valid_param_keys() {
  std::string out;
  for (const auto& f : kParamFields) {
    if (!out.empty()) out += ", ";
    out += f.name;
  }
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view key, std::string_view text) {
  const std::string buf(text);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size())
    throw ParamsFormatError("invalid number for '" + std::string(key) + "': '" + buf + "'");
  return v;
}

inline double Params::*lookup_field(std::string_view key) {
  for (const auto& f : kParamFields)
    if (f.name == key) return f.member;
  throw ParamsFormatError("unknown parameter key '" + std::string(key) +
                          "'; valid keys: " + valid_param_keys());
}

}  // namespace detail

// Applies one "key=value" assignment; returns the key that was set.
inline std::string apply_assignment(Params& p, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ParamsFormatError("expected key=value, got '" + std::string(assignment) + "'");
  const auto key = detail::trim(assignment.substr(0, eq));
  const auto value = detail::trim(assignment.substr(eq + 1));
  p.*(detail::lookup_field(key)) = detail::parse_number(key, value);
  return std::string(key);
}

// Reads a parameter file. Without a base every key must be present; with a
// base the file only overrides. The result is not validated here.
inline Params read_params(std::istream& in, const std::optional<Params>& base = std::nullopt) {
  Params p = base.value_or(Params{});
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      seen.insert(apply_assignment(p, t));
    } catch (const ParamsFormatError& e) {
      throw ParamsFormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!base) {
    std::string missing;
    for (const auto& f : kParamFields)
      if (!seen.count(std::string(f.name))) missing += (missing.empty() ? "" : ", ") + std::string(f.name);
    if (!missing.empty()) throw ParamsFormatError("missing parameter keys: " + missing);
  }
  return p;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string write_params(const Params& p, std::string_view prefix = "") {
  std::ostringstream os;
  for (const auto& f : kParamFields)
    os << prefix << f.name << '=' << format_double(p.*(f.member)) << '\n';
  return os.str();
}

}  // namespace genspec
