#include "marketcal/csv.hpp"

#include <array>
#include <sstream>

namespace mcal::csv {

std::string fmt(double v) {
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row_vec(header);
}

void Writer::row_vec(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

std::size_t Table::col(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw std::runtime_error(source + ": missing column '" + std::string(name) + "'");
}

bool Table::has(std::string_view name) const {
    for (const auto& h : header)
        if (h == name) return true;
    return false;
}

void Table::require(const std::vector<std::string>& names) const {
    for (const auto& n : names) (void)col(n);
}

double Table::num(std::size_t row, std::string_view name) const {
    const std::string& s = cells.at(row).at(col(name));
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw std::runtime_error(source + ": row " + std::to_string(row + 1) + " column '" +
                                 std::string(name) + "' is not a number: '" + s + "'");
    return v;
}

const std::string& Table::str(std::size_t row, std::string_view name) const {
    return cells.at(row).at(col(name));
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    Table t;
    t.source = path.string();
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ss(l);
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        if (!l.empty() && l.back() == ',') out.emplace_back();
        return out;
    };
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.header.size())
            throw std::runtime_error(path.string() + ": row " + std::to_string(t.cells.size() + 1) +
                                     " has " + std::to_string(row.size()) + " cells, expected " +
                                     std::to_string(t.header.size()));
        t.cells.push_back(std::move(row));
    }
    return t;
}

}  // namespace mcal::csv
