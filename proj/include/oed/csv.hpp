#pragma once

#include "oed/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace oed {

/// Comma-separated reals, one row per line. All rows must have the same
/// number of fields. Parse errors carry "<source>:<line>".
Matrix read_matrix_csv(std::istream& in, bool skip_header, const std::string& source = "<stream>");
Matrix read_matrix_csv(const std::string& path, bool skip_header = false);

/// Targets for regression: a single real per line gives an n x 1 matrix;
/// with `classes` set, each line is an integer class id in [0, classes)
/// expanded to a one-hot row.
struct Labels {
  Matrix targets;
  std::vector<int> class_ids;  // empty for real-valued labels
};

Labels read_labels_csv(std::istream& in, std::optional<int> classes, bool skip_header,
                       const std::string& source = "<stream>");
Labels read_labels_csv(const std::string& path, std::optional<int> classes, bool skip_header = false);

Matrix one_hot(const std::vector<int>& class_ids, int classes);

/// Shortest decimal text that round-trips the double.
std::string format_double(double value);

}  // namespace oed
