#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gexp {

/// Numeric CSV: mandatory header row, comma separated, '.' decimal point.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> lines;  ///< source line of each row, for error positions

    /// Index of the column named `name`, or throws ParseError at the header.
    [[nodiscard]] std::size_t column(const std::string& name) const;
};

/// Blank lines are skipped. Every malformed field raises ParseError with its
/// line and column (1-based, column counted in characters).
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace gexp
