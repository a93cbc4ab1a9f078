#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dvarimax/linalg.hpp"

namespace dvarimax {

/// 17 significant digits: round-trips every binary64.
std::string format_real(double v);

/// Shortest representation that round-trips.
std::string format_short(double v);

/// One matrix row per line, ',' delimiter, optional leading `# comment`.
void write_matrix_csv(std::ostream& os, const Matrix& m,
                      const std::string& comment = {});
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                      const std::string& comment = {});

/// Parses a matrix written by write_matrix_csv. Lines starting with '#' and
/// blank lines are skipped. Parse errors name the line and column.
Matrix read_matrix_csv(std::istream& is, const std::string& source = "<stream>");
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace dvarimax
