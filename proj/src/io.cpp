#include "dvarimax/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "dvarimax/error.hpp"

namespace dvarimax {

namespace {

std::string format_with(double v, int precision) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = precision > 0
                       ? std::to_chars(buf, buf + sizeof buf, v,
                                       std::chars_format::general, precision)
                       : std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string format_real(double v) { return format_with(v, 17); }
std::string format_short(double v) { return format_with(v, 0); }

void write_matrix_csv(std::ostream& os, const Matrix& m,
                      const std::string& comment) {
  if (!comment.empty()) os << "# " << comment << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ',';
      os << format_real(m(i, j));
    }
    os << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                      const std::string& comment) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  write_matrix_csv(os, m, comment);
  if (!os) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

Matrix read_matrix_csv(std::istream& is, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    std::size_t pos = 0;
    long column = 1;
    while (true) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      std::string_view field(line.data() + pos, end - pos);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      double value = 0.0;
      const auto res =
          std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || res.ec != std::errc() ||
          res.ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw Error(ErrorKind::Parse,
                    source + ":" + std::to_string(line_no) + ":" +
                        std::to_string(column) + ": invalid number '" +
                        std::string(field) + "'");
      }
      row.push_back(value);
      if (end == line.size()) break;
      pos = end + 1;
      ++column;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::Parse,
                  source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " columns, got " +
                      std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::Parse, source + ": no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return read_matrix_csv(is, path.string());
}

}  // namespace dvarimax
