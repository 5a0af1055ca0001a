#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetvar/linalg.hpp"

namespace hetvar::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kData = 3,
    kNumerical = 4,
};

/// Comma-separated, `.` decimal, mandatory header. A first column whose first body
/// field is not a number is taken as a date column and kept aside.
struct CsvTable {
    std::vector<std::string> names;
    Matrix values;
    std::optional<std::vector<std::string>> dates;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);
/// Shortest representation that parses back exactly.
void write_csv(std::ostream& out, const std::vector<std::string>& names, const Matrix& values);
std::string format_double(double x);

/// First differences of each column; one row fewer.
Matrix difference(const Matrix& values);

/// Entry point behind the `hetvar` executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hetvar::cli
