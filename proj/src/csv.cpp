#include "msgs/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace msgs {

std::string format_sig(double value, int significant_digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", significant_digits, value);
  return buffer;
}

namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, int line_no, int col_no,
                  const std::string& path) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  // Allow trailing whitespace only.
  while (used < cell.size() &&
         (cell[used] == ' ' || cell[used] == '\t' || cell[used] == '\r')) {
    ++used;
  }
  if (used == 0 || used != cell.size()) {
    throw InputError("non-numeric cell at line " + std::to_string(line_no) +
                     ", column " + std::to_string(col_no) + " of " + path);
  }
  return v;
}

}  // namespace

Matrix read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open features: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_cells(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw InputError("features: row width changes at line " +
                       std::to_string(line_no) + " of " + path);
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      row.push_back(parse_cell(cells[c], line_no, static_cast<int>(c) + 1, path));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("features: empty file " + path);

  Matrix m(static_cast<int>(rows.size()), static_cast<int>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
  }
  return m;
}

std::vector<int> read_labels_csv(const std::string& path, int expected_rows) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open labels: " + path);
  std::vector<int> labels(static_cast<std::size_t>(expected_rows), -1);
  std::string line;
  int line_no = 0;
  int seen = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_cells(line);
    if (cells.size() != 2) {
      throw InputError("labels: expected \"node_id,class_id\" at line " +
                       std::to_string(line_no) + " of " + path);
    }
    const auto node = static_cast<long>(
        parse_cell(cells[0], line_no, 1, path));
    const auto cls = static_cast<long>(parse_cell(cells[1], line_no, 2, path));
    if (node < 0 || node >= expected_rows) {
      throw InputError("labels: node id " + std::to_string(node) +
                       " out of range at line " + std::to_string(line_no) + " of " +
                       path);
    }
    if (cls < 0) {
      throw InputError("labels: negative class at line " + std::to_string(line_no) +
                       " of " + path);
    }
    if (labels[static_cast<std::size_t>(node)] != -1) {
      throw InputError("labels: duplicate node id at line " +
                       std::to_string(line_no) + " of " + path);
    }
    labels[static_cast<std::size_t>(node)] = static_cast<int>(cls);
    ++seen;
  }
  if (seen != expected_rows) {
    throw InputError("labels: " + std::to_string(seen) + " rows for " +
                     std::to_string(expected_rows) + " nodes in " + path);
  }
  return labels;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open for digest: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[4096];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write manifest: " + path);
  for (const auto& [key, value] : entries) out << key << " = " << value << "\n";
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write csv: " + path);
  out << header << "\n";
  for (const auto& row : rows) out << row << "\n";
}

}  // namespace msgs
