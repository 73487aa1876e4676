#pragma once

// Five-indicator market state per trading day: monthly macro values
// (CPI, PPI, PMI) plus a trend (range / close) and a noise (1 - efficiency
// ratio) indicator computed from the trailing daily bars.

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace mcal::state {

inline constexpr std::size_t kStateDims = 5;
inline constexpr std::size_t kBarWindow = 20;
using StateArray = std::array<double, kStateDims>;

const std::array<const char*, kStateDims>& state_names();

struct DailyBar {
    double open = 0;
    double high = 0;
    double low = 0;
    double close = 0;
};

/// Bar from a day's mid series (any consistent price unit).
DailyBar bar_from_mids(std::span<const double> mids);

/// Mean of TR_d / close_d over the window; the first bar's TR is high - low.
double trend(std::span<const DailyBar> bars);
/// 1 - |P_T - P_0| / sum |P_d - P_{d-1}|; 0 for a flat series.
double noise(std::span<const double> closes);

struct MacroRow {
    int year = 0;
    int month = 0;
    double cpi = 0;
    double ppi = 0;
    double pmi = 0;
};

class MacroTable {
public:
    void add(const MacroRow& r);
    /// Throws std::out_of_range naming the missing month.
    const MacroRow& at(int year, int month) const;
    std::vector<MacroRow> rows() const;

    static MacroTable read_csv(const std::filesystem::path& p);
    void write_csv(const std::filesystem::path& p) const;

private:
    std::map<std::pair<int, int>, MacroRow> rows_;
};

/// Trading-day calendar with a fixed number of days per month.
struct Calendar {
    int start_year = 2020;
    int start_month = 1;
    int days_per_month = 21;

    std::pair<int, int> month_of(std::size_t day) const;
};

/// Raw (unscaled) state of one day: macro of its month plus trend/noise of
/// the `kBarWindow` bars that precede it.
StateArray assemble_raw(std::size_t day, const MacroTable& macro, const Calendar& cal,
                        std::span<const DailyBar> bars_before);

class StateNormalizer {
public:
    void fit(std::span<const StateArray> rows);
    StateArray normalize(const StateArray& x) const;
    StateArray denormalize(const StateArray& z) const;
    const StateArray& mean() const { return mean_; }
    const StateArray& std() const { return std_; }
    void set(const StateArray& mean, const StateArray& sd);
    bool fitted() const { return fitted_; }

private:
    StateArray mean_{};
    StateArray std_{1, 1, 1, 1, 1};
    bool fitted_ = false;
};

}  // namespace mcal::state
