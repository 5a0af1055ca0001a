#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hetvar/cli.hpp"
#include "hetvar/error.hpp"

namespace hetvar::cli {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream s(line);
    while (std::getline(s, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(const std::string& field) {
    const std::string s = trim(field);
    if (s.empty()) {
        return std::nullopt;
    }
    const char* first = s.data();
    if (*first == '+') {
        ++first;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("csv: missing header");
    }
    std::vector<std::string> header = split(line);
    for (auto& h : header) {
        h = trim(h);
    }
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        rows.push_back(split(line));
    }
    if (rows.empty()) {
        throw DataError("csv: no data rows");
    }
    if (parse_double(header.front())) {
        throw DataError("csv: header row is mandatory");
    }
    const bool has_dates = !parse_double(rows.front().front()).has_value();
    const std::size_t offset = has_dates ? 1 : 0;
    if (header.size() <= offset) {
        throw DataError("csv: no numeric columns");
    }
    const std::size_t cols = header.size() - offset;

    CsvTable table;
    table.names.assign(header.begin() + static_cast<long>(offset), header.end());
    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    if (has_dates) {
        table.dates.emplace();
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != header.size()) {
            throw DataError("csv: row " + std::to_string(i + 2) + " has " +
                            std::to_string(rows[i].size()) + " fields, expected " +
                            std::to_string(header.size()));
        }
        if (has_dates) {
            table.dates->push_back(trim(rows[i].front()));
        }
        for (std::size_t j = 0; j < cols; ++j) {
            const auto v = parse_double(rows[i][j + offset]);
            if (!v || !std::isfinite(*v)) {
                throw DataError("csv: row " + std::to_string(i + 2) + ", column '" +
                                table.names[j] + "' is not a finite number");
            }
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
        }
    }
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return read_csv(in);
}

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_csv(std::ostream& out, const std::vector<std::string>& names, const Matrix& values) {
    if (static_cast<Eigen::Index>(names.size()) != values.cols()) {
        throw InvalidArgument("write_csv: header width mismatch");
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
        out << (j ? "," : "") << names[j];
    }
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            out << (j ? "," : "") << format_double(values(i, j));
        }
        out << '\n';
    }
}

Matrix difference(const Matrix& values) {
    if (values.rows() < 2) {
        throw DataError("difference: need at least two rows");
    }
    const Eigen::Index n = values.rows() - 1;
    return values.bottomRows(n) - values.topRows(n);
}

}  // namespace hetvar::cli
