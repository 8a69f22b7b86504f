#pragma once

#include "fnnforge/timeseries.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fnnforge::io {

/// Parsed CSV table: numeric body plus the optional header names.
struct CsvTable {
    Matrix values;
    std::vector<std::string> header;
};

/// Parses comma-separated numeric text. A single leading non-numeric row is taken as the header;
/// any other non-numeric cell raises InvalidArgument naming its 1-based row and column.
CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

/// Writes rows with 17 significant digits so doubles round-trip exactly.
void write_csv(std::ostream& out, const Matrix& values, const std::vector<std::string>& header = {});
void write_csv(const std::filesystem::path& path, const Matrix& values,
               const std::vector<std::string>& header = {});

/// 17-significant-digit decimal form used in CSV output.
std::string format_double(double v);

} // namespace fnnforge::io
