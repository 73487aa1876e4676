#include "marketcal/market_state.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "marketcal/csv.hpp"

namespace mcal::state {

const std::array<const char*, kStateDims>& state_names() {
    static const std::array<const char*, kStateDims> names{"cpi", "ppi", "pmi", "trend", "noise"};
    return names;
}

DailyBar bar_from_mids(std::span<const double> mids) {
    if (mids.empty()) throw std::invalid_argument("bar needs at least one mid");
    DailyBar b;
    b.open = mids.front();
    b.close = mids.back();
    const auto [lo, hi] = std::minmax_element(mids.begin(), mids.end());
    b.low = *lo;
    b.high = *hi;
    return b;
}

double trend(std::span<const DailyBar> bars) {
    if (bars.size() < kBarWindow)
        throw std::invalid_argument("trend needs " + std::to_string(kBarWindow) + " bars, got " +
                                    std::to_string(bars.size()));
    const auto w = bars.last(kBarWindow);
    double acc = 0;
    for (std::size_t d = 0; d < w.size(); ++d) {
        double tr = w[d].high - w[d].low;
        if (d > 0) {
            const double pc = w[d - 1].close;
            tr = std::max({tr, std::abs(w[d].high - pc), std::abs(w[d].low - pc)});
        }
        if (!(w[d].close > 0)) throw std::invalid_argument("trend needs positive closes");
        acc += tr / w[d].close;
    }
    return acc / static_cast<double>(w.size());
}

double noise(std::span<const double> closes) {
    if (closes.size() < kBarWindow)
        throw std::invalid_argument("noise needs " + std::to_string(kBarWindow) + " closes, got " +
                                    std::to_string(closes.size()));
    const auto w = closes.last(kBarWindow);
    double path = 0;
    for (std::size_t d = 1; d < w.size(); ++d) path += std::abs(w[d] - w[d - 1]);
    if (path == 0.0) return 0.0;
    return 1.0 - std::abs(w.back() - w.front()) / path;
}

void MacroTable::add(const MacroRow& r) {
    if (r.month < 1 || r.month > 12) throw std::invalid_argument("macro month must lie in 1..12");
    rows_[{r.year, r.month}] = r;
}

const MacroRow& MacroTable::at(int year, int month) const {
    auto it = rows_.find({year, month});
    if (it == rows_.end())
        throw std::out_of_range("macro table has no row for " + std::to_string(year) + "-" +
                                (month < 10 ? "0" : "") + std::to_string(month));
    return it->second;
}

std::vector<MacroRow> MacroTable::rows() const {
    std::vector<MacroRow> out;
    for (const auto& [k, r] : rows_) out.push_back(r);
    return out;
}

MacroTable MacroTable::read_csv(const std::filesystem::path& p) {
    const csv::Table t = csv::read(p);
    t.require({"year", "month", "cpi", "ppi", "pmi"});
    MacroTable m;
    for (std::size_t i = 0; i < t.rows(); ++i)
        m.add(MacroRow{static_cast<int>(t.num(i, "year")), static_cast<int>(t.num(i, "month")),
                       t.num(i, "cpi"), t.num(i, "ppi"), t.num(i, "pmi")});
    return m;
}

void MacroTable::write_csv(const std::filesystem::path& p) const {
    csv::Writer w(p, {"year", "month", "cpi", "ppi", "pmi"});
    for (const auto& [k, r] : rows_) w.row(r.year, r.month, r.cpi, r.ppi, r.pmi);
}

std::pair<int, int> Calendar::month_of(std::size_t day) const {
    if (days_per_month < 1) throw std::invalid_argument("days_per_month must be positive");
    const int offset = static_cast<int>(day / static_cast<std::size_t>(days_per_month));
    const int m0 = start_month - 1 + offset;
    return {start_year + m0 / 12, m0 % 12 + 1};
}

StateArray assemble_raw(std::size_t day, const MacroTable& macro, const Calendar& cal,
                        std::span<const DailyBar> bars_before) {
    const auto [y, m] = cal.month_of(day);
    const MacroRow& r = macro.at(y, m);
    std::vector<double> closes;
    closes.reserve(bars_before.size());
    for (const auto& b : bars_before) closes.push_back(b.close);
    return {r.cpi, r.ppi, r.pmi, trend(bars_before), noise(closes)};
}

void StateNormalizer::fit(std::span<const StateArray> rows) {
    if (rows.empty()) throw std::invalid_argument("cannot fit state normalizer on no rows");
    StateArray mean{}, sd{};
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows)
        for (std::size_t d = 0; d < kStateDims; ++d) mean[d] += r[d] / n;
    for (const auto& r : rows)
        for (std::size_t d = 0; d < kStateDims; ++d) sd[d] += (r[d] - mean[d]) * (r[d] - mean[d]) / n;
    for (auto& s : sd) s = std::max(std::sqrt(s), 1e-12);
    set(mean, sd);
}

void StateNormalizer::set(const StateArray& mean, const StateArray& sd) {
    for (double s : sd)
        if (!(s > 0)) throw std::invalid_argument("state normalizer std must be positive");
    mean_ = mean;
    std_ = sd;
    fitted_ = true;
}

StateArray StateNormalizer::normalize(const StateArray& x) const {
    StateArray z{};
    for (std::size_t d = 0; d < kStateDims; ++d) z[d] = (x[d] - mean_[d]) / std_[d];
    return z;
}

StateArray StateNormalizer::denormalize(const StateArray& z) const {
    StateArray x{};
    for (std::size_t d = 0; d < kStateDims; ++d) x[d] = z[d] * std_[d] + mean_[d];
    return x;
}

}  // namespace mcal::state
