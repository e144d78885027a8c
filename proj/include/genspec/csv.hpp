#pragma once

// Plain CSV: '#'-prefixed metadata lines, one header row, then data rows.

#include <cmath>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "genspec/model.hpp"
#include "genspec/params_io.hpp"

namespace genspec {

inline std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : ""; }

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void meta(std::string_view line) { os_ << "# " << line << '\n'; }
  void params(const Params& p) { os_ << write_params(p, "# "); }

  void header(const std::vector<std::string>& cols) { row(cols); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

}  // namespace genspec
