#include "oed/csv.hpp"

#include "oed/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace oed {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << source << ":" << line << ": " << what;
  throw FormatError(msg.str());
}

std::vector<double> parse_row(std::string_view text, const std::string& source, std::size_t line) {
  std::vector<double> row;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    const std::string_view field =
        trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
      parse_fail(source, line, "cannot parse '" + std::string(field) + "' as a real number");
    row.push_back(value);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return row;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return in;
}

}  // namespace

Matrix read_matrix_csv(std::istream& in, bool skip_header, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (line == 1 && skip_header) continue;
    if (trim(text).empty()) continue;
    auto row = parse_row(text, source, line);
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream what;
      what << "expected " << rows.front().size() << " fields, found " << row.size();
      parse_fail(source, line, what.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(source + ": no data rows");
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return out;
}

Matrix read_matrix_csv(const std::string& path, bool skip_header) {
  auto in = open_or_throw(path);
  return read_matrix_csv(in, skip_header, path);
}

Labels read_labels_csv(std::istream& in, std::optional<int> classes, bool skip_header, const std::string& source) {
  std::vector<double> values;
  std::vector<int> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (line == 1 && skip_header) continue;
    const std::string_view field = trim(text);
    if (field.empty()) continue;
    if (classes) {
      int id = 0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), id);
      if (ec != std::errc() || ptr != field.data() + field.size())
        parse_fail(source, line, "cannot parse '" + std::string(field) + "' as a class id");
      if (id < 0 || id >= *classes) {
        std::ostringstream what;
        what << "class id " << id << " outside [0, " << *classes << ")";
        parse_fail(source, line, what.str());
      }
      ids.push_back(id);
    } else {
      const auto row = parse_row(field, source, line);
      if (row.size() != 1) parse_fail(source, line, "expected a single label per line");
      values.push_back(row.front());
    }
  }
  Labels labels;
  if (classes) {
    if (ids.empty()) throw FormatError(source + ": no labels");
    labels.targets = one_hot(ids, *classes);
    labels.class_ids = std::move(ids);
  } else {
    if (values.empty()) throw FormatError(source + ": no labels");
    labels.targets = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
  }
  return labels;
}

Labels read_labels_csv(const std::string& path, std::optional<int> classes, bool skip_header) {
  auto in = open_or_throw(path);
  return read_labels_csv(in, classes, skip_header, path);
}

Matrix one_hot(const std::vector<int>& class_ids, int classes) {
  Matrix out = Matrix::Zero(static_cast<Index>(class_ids.size()), classes);
  for (std::size_t i = 0; i < class_ids.size(); ++i) {
    if (class_ids[i] < 0 || class_ids[i] >= classes) throw InputError("class id out of range");
    out(static_cast<Index>(i), class_ids[i]) = 1.0;
  }
  return out;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buffer, ptr);
}

}  // namespace oed
