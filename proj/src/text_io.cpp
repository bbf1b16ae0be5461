#include "elmc/text_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "elmc/error.hpp"

namespace elmc {

std::string format_real(double value) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof(buf), "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

double parse_real(std::string_view text, std::string_view where) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError(std::string(where) + ": non-numeric cell '" + std::string(text) + "'");
    }
    if (!std::isfinite(value)) {
        throw ValidationError(std::string(where) + ": non-finite value '" + std::string(text) + "'");
    }
    return value;
}

void write_csv(const std::filesystem::path& path, const Matrix& values) {
    std::string out;
    out.reserve(static_cast<std::size_t>(values.size()) * 24);
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j) {
            if (j > 0) out.push_back(',');
            out += format_real(values(i, j));
        }
        out.push_back('\n');
    }
    write_text_file(path, out);
}

Matrix read_csv(const std::filesystem::path& path, Index expected_cols) {
    const std::string text = read_text_file(path);
    std::vector<std::vector<double>> rows;
    Index width = expected_cols;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        const std::string where = path.string() + ":" + std::to_string(line_no);
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                  : comma - start);
            row.push_back(parse_real(cell, where));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (width < 0) width = static_cast<Index>(row.size());
        if (static_cast<Index>(row.size()) != width) {
            throw ValidationError(where + ": expected " + std::to_string(width) + " columns, found " +
                                  std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    Matrix out(static_cast<Index>(rows.size()), std::max<Index>(width, 0));
    for (Index i = 0; i < out.rows(); ++i) {
        for (Index j = 0; j < out.cols(); ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace elmc
