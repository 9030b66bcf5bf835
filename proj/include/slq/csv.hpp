#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "slq/matops.hpp"

namespace slq {

/** Shortest round-trip decimal form (printf %.17g trimmed); identical input
 *  bits always produce identical text, which the reproducibility guarantees
 *  lean on. */
std::string format_double(double v);

void write_matrix_csv(std::ostream& os, const Mat& M);
void write_matrix_csv(const std::string& path, const Mat& M);

Mat read_matrix_csv(std::istream& is);
Mat read_matrix_csv(const std::string& path);

/** Nested-bracket matrix literal, row-major: [[1,2],[3,4]]. Inverse pair used
 *  by config files and key=value manifests. */
std::string format_matrix(const Mat& M);
Mat parse_matrix(const std::string& text);

/** key=value manifest, one pair per line, keys written in insertion order. */
struct KeyValueFile {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value);
  const std::string* find(const std::string& key) const;
  std::string require(const std::string& key) const;  // throws ConfigError
};

void write_key_value(std::ostream& os, const KeyValueFile& kv);
KeyValueFile read_key_value(std::istream& is);
KeyValueFile read_key_value_file(const std::string& path);

}  // namespace slq
