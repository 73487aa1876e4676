#include "marketcal/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "marketcal/csv.hpp"
#include "marketcal/rng.hpp"

namespace mcal::bench {

const char* to_string(Split s) {
    switch (s) {
        case Split::Warmup: return "warmup";
        case Split::Train: return "train";
        case Split::Test: return "test";
    }
    return "?";
}

Split split_from_string(const std::string& s) {
    if (s == "warmup") return Split::Warmup;
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw std::invalid_argument("unknown split '" + s + "' (expected warmup, train or test)");
}

namespace {
// planted trend/noise scores are winsorized; the macro latents are already unit scale
constexpr double kPlantedZMax = 3.0;
}  // namespace

StateMap planted_map(double gain) {
    // signs chosen so every behavior reacts to a different mix of indicators
    StateMap a{{{0.6, 0.3, 0.2, -0.3, -0.5},
                {0.1, -0.3, 0.4, 0.7, -0.2},
                {-0.4, 0.2, -0.2, -0.4, 0.6},
                {0.3, 0.5, -0.3, -0.5, 0.2},
                {-0.2, 0.4, 0.6, 0.4, 0.1}}};
    for (auto& row : a) {
        double n = 0;
        for (double v : row) n += v * v;
        n = std::sqrt(n);
        for (double& v : row) v *= gain / n;
    }
    return a;
}

std::vector<std::size_t> Benchmark::days_in(Split s) const {
    std::vector<std::size_t> out;
    for (const auto& d : days)
        if (d.split == s) out.push_back(d.day);
    return out;
}

sim::SimConfig Benchmark::day_config(std::size_t day) const {
    const DayRecord& d = days.at(day);
    sim::SimConfig c = sim;
    c.open_price = d.open_ticks;
    c.rng_seed = d.sim_seed;
    return c;
}

state::StateArray Benchmark::raw_state(std::size_t day) const {
    if (day < state::kBarWindow)
        throw std::invalid_argument("day " + std::to_string(day) + " has fewer than " +
                                    std::to_string(state::kBarWindow) + " preceding bars");
    std::vector<state::DailyBar> bars;
    for (std::size_t k = day - state::kBarWindow; k < day; ++k) bars.push_back(days.at(k).bar);
    return state::assemble_raw(day, macro, calendar, bars);
}

namespace {

Split split_of(std::size_t day, const config::BenchmarkConfig& c) {
    if (day < c.warmup_days) return Split::Warmup;
    if (day < c.warmup_days + c.train_days) return Split::Train;
    return Split::Test;
}

state::MacroTable make_macro(const config::BenchmarkConfig& c, std::uint64_t seed,
                             std::vector<std::array<double, 3>>& latents) {
    const std::size_t months = (c.total_days() + static_cast<std::size_t>(c.days_per_month) - 1) /
                               static_cast<std::size_t>(c.days_per_month);
    Rng rng(derive_seed(seed, "macro"));
    const double innov = std::sqrt(1.0 - c.macro_rho * c.macro_rho);
    std::array<double, 3> z{normal(rng), normal(rng), normal(rng)};
    state::Calendar cal{c.start_year, c.start_month, c.days_per_month};
    state::MacroTable table;
    latents.clear();
    for (std::size_t m = 0; m < months; ++m) {
        if (m > 0)
            for (auto& v : z) v = c.macro_rho * v + innov * normal(rng);
        latents.push_back(z);
        const auto [y, mo] = cal.month_of(m * static_cast<std::size_t>(c.days_per_month));
        table.add(state::MacroRow{y, mo, 100.0 + z[0], 100.0 + 2.0 * z[1], 50.0 + 1.5 * z[2]});
    }
    return table;
}

}  // namespace

Benchmark generate(const config::Config& cfg, sim::CallCounter* counter, std::vector<sim::OrderStream>* streams) {
    cfg.validate();
    const auto& c = cfg.bench;
    Benchmark b;
    b.cfg = c;
    b.sim = cfg.sim;
    b.A = planted_map(c.state_free ? 0.0 : c.state_gain);
    b.calendar = state::Calendar{c.start_year, c.start_month, c.days_per_month};
    std::vector<std::array<double, 3>> latents;
    b.macro = make_macro(c, cfg.seed, latents);
    if (streams) streams->clear();

    Rng rng_b(derive_seed(cfg.seed, "behavior"));
    Rng rng_f(derive_seed(cfg.seed, "fundamental"));
    agents::NormBehavior prev;
    prev.fill(0.5);
    double fund = static_cast<double>(cfg.sim.open_price) * cfg.sim.tick_size;
    // trend/noise enter the map only once a pilot window has fixed their scale
    double pilot_mean[2] = {0, 0}, pilot_sd[2] = {1, 1};
    bool pilot_ready = false;

    for (std::size_t t = 0; t < c.total_days(); ++t) {
        DayRecord d;
        d.day = t;
        d.split = split_of(t, c);
        const auto& lat = latents[t / static_cast<std::size_t>(c.days_per_month)];
        d.planted_z = {lat[0], lat[1], lat[2], 0.0, 0.0};

        if (t == c.warmup_days) {
            std::vector<double> tr, no;
            for (std::size_t k = t - state::kBarWindow; k < t; ++k) {
                const auto x = b.raw_state(k);
                tr.push_back(x[3]);
                no.push_back(x[4]);
            }
            auto stats = [](const std::vector<double>& v, double& m, double& s) {
                m = 0;
                for (double x : v) m += x / static_cast<double>(v.size());
                s = 0;
                for (double x : v) s += (x - m) * (x - m) / static_cast<double>(v.size());
                s = std::max(std::sqrt(s), 1e-12);
            };
            stats(tr, pilot_mean[0], pilot_sd[0]);
            stats(no, pilot_mean[1], pilot_sd[1]);
            // a quiet warmup can leave a near-zero spread, which would blow the
            // planted target out to the clip box; floor at one tick of relative
            // range for trend and one point of efficiency ratio for noise
            pilot_sd[0] = std::max(pilot_sd[0], cfg.sim.tick_size / fund);
            pilot_sd[1] = std::max(pilot_sd[1], 0.01);
            pilot_ready = true;
        }
        if (pilot_ready) {
            const auto x = b.raw_state(t);
            d.planted_z[3] = std::clamp((x[3] - pilot_mean[0]) / pilot_sd[0], -kPlantedZMax, kPlantedZMax);
            d.planted_z[4] = std::clamp((x[4] - pilot_mean[1]) / pilot_sd[1], -kPlantedZMax, kPlantedZMax);
        }

        agents::NormBehavior next{};
        for (std::size_t i = 0; i < agents::kBehaviorDims; ++i) {
            double target = 0.5;
            for (std::size_t j = 0; j < state::kStateDims; ++j) target += b.A[i][j] * d.planted_z[j];
            next[i] = c.persistence * prev[i] + (1.0 - c.persistence) * target + normal(rng_b, 0.0, c.step_sd);
            next[i] = std::clamp(next[i], c.clip_lo, c.clip_hi);
        }
        if (t > 0) {
            double step = 0;
            for (std::size_t i = 0; i < agents::kBehaviorDims; ++i) step += (next[i] - prev[i]) * (next[i] - prev[i]);
            if (step > c.max_step) {
                // shrink toward yesterday; stays inside the clip box since both ends are
                const double k = std::sqrt(c.max_step / step) * (1.0 - 1e-9);
                for (std::size_t i = 0; i < agents::kBehaviorDims; ++i) next[i] = prev[i] + k * (next[i] - prev[i]);
            }
        }
        d.b_star = next;
        prev = next;

        fund *= std::exp(normal(rng_f, 0.0, c.fund_step_sd));
        d.open_ticks = std::max<lob::Ticks>(1, std::llround(fund / cfg.sim.tick_size));
        d.fund.values.resize(sim::kFundamentalPoints);
        d.fund.values[0] = fund;
        for (std::size_t k = 1; k < sim::kFundamentalPoints; ++k) {
            fund *= std::exp(normal(rng_f, 0.0, c.fund_step_sd));
            d.fund.values[k] = fund;
        }
        d.sim_seed = derive_seed(cfg.seed, "target", t);
        b.days.push_back(d);

        sim::OrderStream s = sim::run_day(b.day_config(t), agents::BehaviorVector::from_normalized(d.b_star),
                                          b.days.back().fund, counter);
        b.days.back().q = features::extract(s).to_array();
        std::vector<double> mids(s.mid_per_minute.begin(), s.mid_per_minute.end());
        for (double& m : mids) m *= cfg.sim.tick_size;
        b.days.back().bar = state::bar_from_mids(mids);
        if (streams) streams->push_back(std::move(s));
    }
    return b;
}

double max_step(const Benchmark& b) {
    double worst = 0;
    for (std::size_t t = 0; t + 1 < b.days.size(); ++t)
        worst = std::max(worst, features::behavior_variation(b.days[t].b_star, b.days[t + 1].b_star));
    return worst;
}

// ---- persistence ---------------------------------------------------------

void save(const std::filesystem::path& dir, const Benchmark& b) {
    std::filesystem::create_directories(dir);
    b.macro.write_csv(dir / "macro.csv");
    {
        nlohmann::json j;
        const auto& c = b.cfg;
        j["warmup_days"] = c.warmup_days;
        j["train_days"] = c.train_days;
        j["test_days"] = c.test_days;
        j["days_per_month"] = c.days_per_month;
        j["start_year"] = c.start_year;
        j["start_month"] = c.start_month;
        j["state_gain"] = c.state_gain;
        j["state_free"] = c.state_free;
        j["A"] = b.A;
        j["sim"] = {{"slots_per_day", b.sim.slots_per_day}, {"n_agents", b.sim.n_agents},
                    {"wake_prob", b.sim.wake_prob},         {"tick_size", b.sim.tick_size},
                    {"lot_units", b.sim.lot_units},         {"alpha_ref", b.sim.alpha_ref},
                    {"lambda_band", b.sim.lambda_band},     {"noise_sd_frac", b.sim.noise_sd_frac},
                    {"variance_floor", b.sim.variance_floor}, {"model_tag", b.sim.model_tag}};
        std::ofstream(dir / "benchmark.json") << j.dump(2) << '\n';
    }
    std::vector<std::string> header{"day", "split", "open_ticks", "sim_seed"};
    for (int i = 1; i <= 5; ++i) header.push_back("b" + std::to_string(i) + "_norm");
    for (const char* n : state::state_names()) header.push_back(std::string("z_") + n);
    for (const char* n : {"bar_open", "bar_high", "bar_low", "bar_close"}) header.push_back(n);
    for (std::size_t k = 1; k <= sim::kFundamentalPoints; ++k) header.push_back("f" + std::to_string(k));
    for (std::size_t k = 1; k <= features::kFeatureDims; ++k) header.push_back("q" + std::to_string(k));
    csv::Writer w(dir / "days.csv", header);
    for (const auto& d : b.days) {
        std::vector<std::string> row{std::to_string(d.day), to_string(d.split), std::to_string(d.open_ticks),
                                     std::to_string(d.sim_seed)};
        for (double v : d.b_star) row.push_back(csv::fmt(v));
        for (double v : d.planted_z) row.push_back(csv::fmt(v));
        for (double v : {d.bar.open, d.bar.high, d.bar.low, d.bar.close}) row.push_back(csv::fmt(v));
        for (double v : d.fund.values) row.push_back(csv::fmt(v));
        for (double v : d.q) row.push_back(csv::fmt(v));
        w.row_vec(row);
    }
}

Benchmark load(const std::filesystem::path& dir) {
    for (const char* f : {"benchmark.json", "macro.csv", "days.csv"})
        if (!std::filesystem::exists(dir / f))
            throw std::runtime_error("missing benchmark input " + (dir / f).string() + " (run gen-benchmark first)");
    Benchmark b;
    {
        std::ifstream in(dir / "benchmark.json");
        const auto j = nlohmann::json::parse(in);
        auto& c = b.cfg;
        c.warmup_days = j.at("warmup_days").get<std::size_t>();
        c.train_days = j.at("train_days").get<std::size_t>();
        c.test_days = j.at("test_days").get<std::size_t>();
        c.days_per_month = j.at("days_per_month").get<int>();
        c.start_year = j.at("start_year").get<int>();
        c.start_month = j.at("start_month").get<int>();
        c.state_gain = j.at("state_gain").get<double>();
        c.state_free = j.at("state_free").get<bool>();
        b.A = j.at("A").get<StateMap>();
        const auto& s = j.at("sim");
        b.sim.slots_per_day = s.at("slots_per_day").get<std::int64_t>();
        b.sim.n_agents = s.at("n_agents").get<std::size_t>();
        b.sim.wake_prob = s.at("wake_prob").get<double>();
        b.sim.tick_size = s.at("tick_size").get<double>();
        b.sim.lot_units = s.at("lot_units").get<std::int64_t>();
        b.sim.alpha_ref = s.at("alpha_ref").get<double>();
        b.sim.lambda_band = s.at("lambda_band").get<double>();
        b.sim.noise_sd_frac = s.at("noise_sd_frac").get<double>();
        b.sim.variance_floor = s.at("variance_floor").get<double>();
        b.sim.model_tag = s.at("model_tag").get<std::string>();
    }
    b.calendar = state::Calendar{b.cfg.start_year, b.cfg.start_month, b.cfg.days_per_month};
    b.macro = state::MacroTable::read_csv(dir / "macro.csv");
    const csv::Table t = csv::read(dir / "days.csv");
    t.require({"day", "split", "open_ticks", "sim_seed"});
    for (std::size_t r = 0; r < t.rows(); ++r) {
        DayRecord d;
        d.day = std::stoull(t.str(r, "day"));
        if (d.day != r) throw std::runtime_error("days.csv must list days 0..n-1 in order");
        d.split = split_from_string(t.str(r, "split"));
        d.open_ticks = std::stoll(t.str(r, "open_ticks"));
        d.sim_seed = std::stoull(t.str(r, "sim_seed"));
        for (std::size_t i = 0; i < 5; ++i) d.b_star[i] = t.num(r, "b" + std::to_string(i + 1) + "_norm");
        for (std::size_t i = 0; i < state::kStateDims; ++i)
            d.planted_z[i] = t.num(r, std::string("z_") + state::state_names()[i]);
        d.bar = {t.num(r, "bar_open"), t.num(r, "bar_high"), t.num(r, "bar_low"), t.num(r, "bar_close")};
        d.fund.values.resize(sim::kFundamentalPoints);
        for (std::size_t k = 0; k < sim::kFundamentalPoints; ++k) d.fund.values[k] = t.num(r, "f" + std::to_string(k + 1));
        for (std::size_t k = 0; k < features::kFeatureDims; ++k) d.q[k] = t.num(r, "q" + std::to_string(k + 1));
        b.days.push_back(std::move(d));
    }
    return b;
}

}  // namespace mcal::bench
