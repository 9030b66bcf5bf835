#include "slq/csv.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "slq/errors.hpp"

namespace slq {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_cell(const std::string& cell, const char* where) {
  const std::string t = trim(cell);
  if (t.empty()) throw ConfigError(std::string("empty numeric cell in ") + where);
  const char* begin = t.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + t.size())
    throw ConfigError("malformed number '" + t + "' in " + where);
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_matrix_csv(std::ostream& os, const Mat& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) os << ',';
      os << format_double(M(i, j));
    }
    os << '\n';
  }
}

void write_matrix_csv(const std::string& path, const Mat& M) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  write_matrix_csv(os, M);
}

Mat read_matrix_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, "matrix csv"));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError("ragged rows in matrix csv");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Mat(0, 0);
  Mat M(static_cast<Eigen::Index>(rows.size()),
        static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return M;
}

Mat read_matrix_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  return read_matrix_csv(is);
}

std::string format_matrix(const Mat& M) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (i) out += ',';
    out += '[';
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out += ',';
      out += format_double(M(i, j));
    }
    out += ']';
  }
  out += ']';
  return out;
}

namespace {

struct Cursor {
  const std::string& s;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  bool eat(char c) {
    if (peek() != c) return false;
    ++pos;
    return true;
  }
  double number() {
    skip_ws();
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin)
      throw ConfigError("expected a number at '" + s.substr(pos, 12) + "'");
    pos += static_cast<std::size_t>(end - begin);
    return v;
  }
};

std::vector<double> parse_row(Cursor& c) {
  std::vector<double> row;
  if (!c.eat('[')) throw ConfigError("expected '[' in matrix literal");
  if (c.eat(']')) return row;
  do {
    row.push_back(c.number());
  } while (c.eat(','));
  if (!c.eat(']')) throw ConfigError("expected ']' in matrix literal");
  return row;
}

}  // namespace

Mat parse_matrix(const std::string& text) {
  Cursor c{text};
  std::vector<std::vector<double>> rows;
  if (c.peek() != '[') {
    // bare scalar
    const double v = c.number();
    if (c.peek() != '\0') throw ConfigError("trailing text after scalar '" + text + "'");
    Mat M(1, 1);
    M(0, 0) = v;
    return M;
  }
  c.eat('[');
  if (c.peek() == '[') {
    do {
      rows.push_back(parse_row(c));
    } while (c.eat(','));
  } else if (c.peek() != ']') {
    std::vector<double> row;
    do {
      row.push_back(c.number());
    } while (c.eat(','));
    rows.push_back(std::move(row));
  }
  if (!c.eat(']')) throw ConfigError("expected closing ']' in matrix literal");
  if (c.peek() != '\0')
    throw ConfigError("trailing text after matrix literal '" + text + "'");
  if (rows.empty()) return Mat(0, 0);
  const std::size_t width = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != width) throw ConfigError("ragged rows in matrix literal");
  Mat M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return M;
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  for (auto& e : entries)
    if (e.first == key) {
      e.second = value;
      return;
    }
  entries.emplace_back(key, value);
}

const std::string* KeyValueFile::find(const std::string& key) const {
  for (const auto& e : entries)
    if (e.first == key) return &e.second;
  return nullptr;
}

std::string KeyValueFile::require(const std::string& key) const {
  const std::string* v = find(key);
  if (!v) throw ConfigError("missing key '" + key + "'");
  return *v;
}

void write_key_value(std::ostream& os, const KeyValueFile& kv) {
  for (const auto& e : kv.entries) os << e.first << " = " << e.second << '\n';
}

KeyValueFile read_key_value(std::istream& is) {
  KeyValueFile kv;
  std::string line;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed key=value line '" + t + "'");
    kv.entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

KeyValueFile read_key_value_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  return read_key_value(is);
}

}  // namespace slq
