#pragma once
#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <scaledreg/core.hpp>
#include <scaledreg/errors.hpp>

namespace scaledreg {

struct CsvOptions {
    bool header = false;   ///< skip the first row
    int y_column = -1;     ///< >= 0: take y from this column of the x file
    bool center = false;   ///< centre y and columns before standardizing
    bool standardize = true;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Rows of numbers; `row` and `col` in errors are 1-based positions in the file.
inline std::vector<std::vector<double>> read_numeric_csv(const std::string& path, bool header)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (header && lineno == 1) continue;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::string_view rest(line);
        std::size_t col = 0;
        while (true) {
            ++col;
            const std::size_t comma = rest.find(',');
            const std::string_view cell = trim(rest.substr(0, comma));
            double v = 0.0;
            const char* end = cell.data() + cell.size();
            const char* start = cell.data();
            if (!cell.empty() && *start == '+') ++start;
            const auto [ptr, ec] = std::from_chars(start, end, v);
            if (cell.empty() || ec != std::errc() || ptr != end)
                throw ParseError(lineno, col, "'" + std::string(cell) + "' is not a number");
            row.push_back(v);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(lineno, row.size(), "expected " + std::to_string(rows.front().size()) + " columns");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidArgument("'" + path + "' holds no data rows");
    return rows;
}

} // namespace detail

/// Matrix from a numeric CSV, one observation per row.
inline Matrix read_matrix_csv(const std::string& path, bool header = false)
{
    const auto rows = detail::read_numeric_csv(path, header);
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return m;
}

/**
 * X from `x_path`; y from the single-column `y_path`, or from column
 * `opt.y_column` of the x file when `y_path` is empty.
 */
inline Dataset load_dataset(const std::string& x_path, const std::string& y_path, const CsvOptions& opt = {})
{
    Matrix x = read_matrix_csv(x_path, opt.header);
    Vector y;
    if (y_path.empty()) {
        if (opt.y_column < 0 || opt.y_column >= x.cols())
            throw InvalidArgument("no y file and y column " + std::to_string(opt.y_column) + " is out of range");
        y = x.col(opt.y_column);
        Matrix rest(x.rows(), x.cols() - 1);
        for (Index j = 0, k = 0; j < x.cols(); ++j)
            if (j != opt.y_column) rest.col(k++) = x.col(j);
        x = std::move(rest);
    } else {
        const Matrix ym = read_matrix_csv(y_path, opt.header);
        if (ym.cols() != 1) throw DimensionMismatch("y file must have exactly one column");
        y = ym.col(0);
    }
    if (y.size() != x.rows())
        throw DimensionMismatch("y has " + std::to_string(y.size()) + " rows but X has " + std::to_string(x.rows()));
    if (opt.center) center_in_place(x, y);
    return Dataset(std::move(x), std::move(y), opt.standardize);
}

} // namespace scaledreg
