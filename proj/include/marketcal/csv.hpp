#pragma once

// Plain comma-separated tables: numeric or bare-word cells, no quoting.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace mcal::csv {

/// Shortest round-trip text for a double.
std::string fmt(double v);

class Writer {
public:
    Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

    template <class... Ts>
    void row(const Ts&... cells) {
        std::string line;
        bool first = true;
        (append(line, first, cells), ...);
        out_ << line << '\n';
    }
    void row_vec(const std::vector<std::string>& cells);

private:
    template <class T>
    static void append(std::string& line, bool& first, const T& v) {
        if (!first) line += ',';
        first = false;
        if constexpr (std::is_floating_point_v<T>)
            line += fmt(static_cast<double>(v));
        else if constexpr (std::is_integral_v<T>)
            line += std::to_string(v);
        else
            line += std::string(v);
    }
    std::ofstream out_;
};

class Table {
public:
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> cells;

    std::size_t rows() const { return cells.size(); }
    std::size_t col(std::string_view name) const;
    bool has(std::string_view name) const;
    /// Throws naming the first missing column.
    void require(const std::vector<std::string>& names) const;
    double num(std::size_t row, std::string_view name) const;
    const std::string& str(std::size_t row, std::string_view name) const;

    std::string source;
};

Table read(const std::filesystem::path& path);

}  // namespace mcal::csv
