#include "riskregion/table_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace riskregion {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Comma, tab or semicolon delimited; whitespace when none of those occur.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  const auto delim_pos = line.find_first_of(",\t;");
  if (delim_pos == std::string::npos) {
    std::istringstream ss(line);
    std::string f;
    while (ss >> f) out.push_back(f);
    return out;
  }
  const char delim = line[delim_pos];
  std::string::size_type start = 0;
  while (true) {
    const auto end = line.find(delim, start);
    out.push_back(trim(line.substr(start, end == std::string::npos ? std::string::npos : end - start)));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

NumericTable read_table(std::istream& is) {
  NumericTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      table.comments.push_back(line.substr(first));
      continue;
    }
    const auto fields = split_fields(line.substr(first));
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (const auto& f : fields) {
      double v = 0.0;
      if (!parse_double(f, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (table.rows.empty() && table.header.empty()) {
        table.header = fields;
        continue;
      }
      throw std::runtime_error("line " + std::to_string(line_no) + ": non-numeric field");
    }
    const std::size_t expected = table.rows.empty() ? (table.header.empty() ? row.size() : table.header.size())
                                                    : table.rows.front().size();
    if (row.size() != expected) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": ragged row (" + std::to_string(row.size()) +
                               " fields, expected " + std::to_string(expected) + ")");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

NumericTable read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return read_table(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_sample(std::ostream& os, const Sample& sample, const std::vector<std::string>& comments) {
  for (const auto& c : comments) os << "# " << c << '\n';
  static const char* names[] = {"x", "y", "z"};
  for (int j = 0; j < sample.dim(); ++j) os << (j ? "," : "") << names[j];
  os << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto r = sample.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << format_number(r[j]);
    os << '\n';
  }
}

Sample sample_from_table(const NumericTable& table) {
  const auto d = static_cast<int>(table.columns());
  Sample s(d);
  s.reserve(table.rows.size());
  for (const auto& row : table.rows) s.push_back(row);
  return s;
}

}  // namespace riskregion
