#pragma once

// Fixed-layout MPS export. Row names are R<index>, column names come from
// ColumnName::str(). Ranged rows are written as E rows plus a RANGES entry
// ([lo, lo + R] for R > 0), which any MPS reader interprets the same way.

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>

#include "sofo/lp/linear_program.hpp"

namespace sofo::lp {

namespace detail {

inline std::string mps_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string mps_field(const std::string& s, std::size_t width) {
  std::string out = s;
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

}  // namespace detail

inline std::string to_mps(const LinearProgram& lp, const std::string& name = "SOFO") {
  using detail::mps_field;
  using detail::mps_number;
  std::ostringstream out;
  const int m = lp.num_rows();
  auto row_name = [](int i) { return "R" + std::to_string(i); };

  // N: free objective row; G/L/E by bound shape; free rows get N as well.
  std::vector<char> type(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double lo = lp.row_lower[static_cast<std::size_t>(i)];
    const double up = lp.row_upper[static_cast<std::size_t>(i)];
    if (std::isfinite(lo) && std::isfinite(up))
      type[static_cast<std::size_t>(i)] = 'E';
    else if (std::isfinite(lo))
      type[static_cast<std::size_t>(i)] = 'G';
    else if (std::isfinite(up))
      type[static_cast<std::size_t>(i)] = 'L';
    else
      type[static_cast<std::size_t>(i)] = 'N';
  }

  out << "NAME          " << name << "\n";
  out << "ROWS\n";
  out << " N  COST\n";
  for (int i = 0; i < m; ++i) out << " " << type[static_cast<std::size_t>(i)] << "  " << row_name(i) << "\n";

  std::vector<std::map<int, double>> cols(static_cast<std::size_t>(lp.num_cols()));
  for (const auto& e : lp.entries) cols[static_cast<std::size_t>(e.col)][e.row] += e.value;

  out << "COLUMNS\n";
  for (int j = 0; j < lp.num_cols(); ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const std::string cname = lp.names[uj].str();
    if (lp.objective[uj] != 0.0)
      out << "    " << mps_field(cname, 8) << "  " << mps_field("COST", 8) << "  " << mps_number(lp.objective[uj])
          << "\n";
    for (const auto& [i, v] : cols[uj])
      out << "    " << mps_field(cname, 8) << "  " << mps_field(row_name(i), 8) << "  " << mps_number(v) << "\n";
  }

  out << "RHS\n";
  for (int i = 0; i < m; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double rhs = 0.0;
    switch (type[ui]) {
      case 'E':
      case 'G': rhs = lp.row_lower[ui]; break;
      case 'L': rhs = lp.row_upper[ui]; break;
      default: continue;
    }
    if (rhs != 0.0) out << "    RHS       " << mps_field(row_name(i), 8) << "  " << mps_number(rhs) << "\n";
  }

  bool any_range = false;
  for (int i = 0; i < m; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (type[ui] == 'E' && lp.row_upper[ui] > lp.row_lower[ui]) {
      if (!any_range) out << "RANGES\n";
      any_range = true;
      out << "    RNG       " << mps_field(row_name(i), 8) << "  "
          << mps_number(lp.row_upper[ui] - lp.row_lower[ui]) << "\n";
    }
  }

  out << "BOUNDS\n";
  for (int j = 0; j < lp.num_cols(); ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const std::string cname = lp.names[uj].str();
    const double lo = lp.col_lower[uj];
    const double up = lp.col_upper[uj];
    if (lo == up) {
      out << " FX BND       " << mps_field(cname, 8) << "  " << mps_number(lo) << "\n";
      continue;
    }
    if (!std::isfinite(lo) && !std::isfinite(up)) {
      out << " FR BND       " << cname << "\n";
      continue;
    }
    if (!std::isfinite(lo))
      out << " MI BND       " << cname << "\n";
    else if (lo != 0.0)
      out << " LO BND       " << mps_field(cname, 8) << "  " << mps_number(lo) << "\n";
    if (std::isfinite(up)) out << " UP BND       " << mps_field(cname, 8) << "  " << mps_number(up) << "\n";
  }
  out << "ENDATA\n";
  return out.str();
}

}  // namespace sofo::lp
