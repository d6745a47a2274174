#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "msgs/types.hpp"

namespace msgs {

/// Formats a double with the given number of significant digits (%g style).
std::string format_sig(double value, int significant_digits = 12);

/// Feature CSV: no header, one row per node, comma-separated decimals.
/// Parse failures report the 1-based line (and cell) in the message.
Matrix read_features_csv(const std::string& path);

/// Label CSV: no header, rows "node_id,class_id". Returns labels indexed by
/// node id; every id in [0, expected_rows) must appear exactly once.
std::vector<int> read_labels_csv(const std::string& path, int expected_rows);

/// FNV-1a 64-bit digest of a file's bytes, as fixed-width hex.
std::string file_digest(const std::string& path);

/// Run manifest: "key = value" lines, sorted by insertion order.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);

/// Generic CSV writer: header plus preformatted rows.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows);

}  // namespace msgs
