#ifndef RISKREGION_TABLE_IO_HPP
#define RISKREGION_TABLE_IO_HPP

// Delimited text tables: '#' comment lines, an optional header row, then rows
// of numbers separated by commas, tabs or blanks.

#include <iosfwd>
#include <string>
#include <vector>

#include "riskregion/types.hpp"

namespace riskregion {

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::string> comments;
  std::vector<std::vector<double>> rows;

  std::size_t columns() const noexcept { return rows.empty() ? header.size() : rows.front().size(); }
};

/// Throws std::runtime_error on ragged rows or unparsable fields (with the
/// line number).
NumericTable read_table(std::istream& is);
NumericTable read_table_file(const std::string& path);

/// Round-trip formatting with 17 significant digits.
std::string format_number(double v);

void write_sample(std::ostream& os, const Sample& sample, const std::vector<std::string>& comments = {});
Sample sample_from_table(const NumericTable& table);

}  // namespace riskregion

#endif  // RISKREGION_TABLE_IO_HPP
