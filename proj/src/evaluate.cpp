#include "marketcal/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "marketcal/csv.hpp"
#include "marketcal/rng.hpp"

namespace mcal::eval {

namespace {

double mean(const std::vector<double>& v) {
    if (v.empty()) return std::nan("");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Reference mean |rho| magnitudes (calisim, bayesopt), annotation only.
struct Reference {
    const char* indicator;
    double calisim;
    double bayesopt;
};
constexpr Reference kReference[] = {{"cpi", 0.2555, 0.0447}, {"trend", 0.3266, 0.0921}};

}  // namespace

void Calibration::write_csv(const std::filesystem::path& p) const {
    std::vector<std::string> header{"day"};
    for (int i = 1; i <= 5; ++i) header.push_back("b" + std::to_string(i));
    for (int i = 1; i <= 5; ++i) header.push_back("b" + std::to_string(i) + "_norm");
    header.push_back("source");
    csv::Writer w(p, header);
    for (std::size_t i = 0; i < days.size(); ++i) {
        std::vector<std::string> row{std::to_string(days[i])};
        const auto raw = agents::BehaviorVector::from_normalized(b[i]).raw();
        for (double v : raw) row.push_back(csv::fmt(v));
        for (double v : b[i]) row.push_back(csv::fmt(v));
        row.push_back(source);
        w.row_vec(row);
    }
}

Calibration Calibration::read_csv(const std::filesystem::path& p, const std::string& method) {
    if (!std::filesystem::exists(p))
        throw std::runtime_error("missing calibration input " + p.string() + " (run calibrate first)");
    const csv::Table t = csv::read(p);
    t.require({"day", "b1_norm", "b2_norm", "b3_norm", "b4_norm", "b5_norm", "source"});
    Calibration c;
    c.method = method;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        c.days.push_back(std::stoull(t.str(r, "day")));
        agents::NormBehavior nb{};
        for (std::size_t i = 0; i < 5; ++i) nb[i] = t.num(r, "b" + std::to_string(i + 1) + "_norm");
        c.b.push_back(nb);
        c.source = t.str(r, "source");
    }
    return c;
}

double MethodReport::mean_recon() const { return mean(recon); }
double MethodReport::median_variation() const { return median(variation); }
double MethodReport::mean_fidelity() const { return mean(fidelity); }

double Report::mean_abs_rho(const std::string& method, std::size_t indicator) const {
    const auto it = rho.find(method);
    if (it == rho.end()) return std::nan("");
    double s = 0;
    for (double r : it->second.at(indicator)) s += std::abs(r);
    return s / static_cast<double>(agents::kBehaviorDims);
}

const MethodReport* Report::find(const std::string& method) const {
    const auto it = methods.find(method);
    return it == methods.end() ? nullptr : &it->second;
}

std::uint64_t replay_seed(std::uint64_t seed, std::size_t day) { return derive_seed(seed, "replay", day); }

Report evaluate(const bench::Benchmark& b, const std::vector<Calibration>& cals,
                const features::FeatureNormalizer& norm, std::uint64_t seed, batch::Exec exec,
                const std::vector<std::string>& expected) {
    if (cals.empty()) throw std::runtime_error("nothing to evaluate: no calibrations given");
    Report r;
    r.days = cals.front().days;
    for (const auto& name : expected)
        if (std::none_of(cals.begin(), cals.end(), [&](const Calibration& c) { return c.method == name; }))
            r.absent.push_back(name);

    std::vector<batch::SimJob> jobs;
    for (const auto& c : cals) {
        if (c.days != r.days)
            throw std::runtime_error("calibration '" + c.method + "' covers different days than '" +
                                     cals.front().method + "'");
        for (std::size_t i = 0; i < c.days.size(); ++i) {
            sim::SimConfig sc = b.day_config(c.days[i]);
            sc.rng_seed = replay_seed(seed, c.days[i]);
            jobs.push_back({sc, agents::BehaviorVector::from_normalized(c.b[i]), b.days.at(c.days[i]).fund});
        }
    }
    const auto feats = batch::simulate_features(jobs, exec);

    std::size_t k = 0;
    for (const auto& c : cals) {
        MethodReport m;
        m.method = c.method;
        m.simulator_calls = c.simulator_calls;
        for (std::size_t i = 0; i < c.days.size(); ++i, ++k) {
            const auto& day = b.days.at(c.days[i]);
            m.recon.push_back(features::reconstruction_error_z(norm.normalize(feats[k].to_array()), norm.normalize(day.q)));
            m.fidelity.push_back(features::behavior_variation(c.b[i], day.b_star));
            if (i + 1 < c.days.size()) m.variation.push_back(features::behavior_variation(c.b[i], c.b[i + 1]));
        }
        auto& rho = r.rho[c.method];
        std::vector<std::vector<double>> x(state::kStateDims);
        for (std::size_t day : c.days) {
            const auto s = b.raw_state(day);
            for (std::size_t j = 0; j < state::kStateDims; ++j) x[j].push_back(s[j]);
        }
        for (std::size_t p = 0; p < agents::kBehaviorDims; ++p) {
            std::vector<double> y;
            for (const auto& nb : c.b) y.push_back(nb[p]);
            for (std::size_t j = 0; j < state::kStateDims; ++j) rho[j][p] = features::pearson(x[j], y);
        }
        r.methods[c.method] = std::move(m);
    }
    return r;
}

void write_report(const std::filesystem::path& dir, const Report& r) {
    std::filesystem::create_directories(dir);
    {
        csv::Writer w(dir / "recon_errors.csv", {"day", "method", "recon_error"});
        for (const auto& [name, m] : r.methods)
            for (std::size_t i = 0; i < m.recon.size(); ++i) w.row(r.days[i], name, m.recon[i]);
    }
    {
        csv::Writer w(dir / "behavior_variation.csv", {"day", "method", "variation"});
        for (const auto& [name, m] : r.methods)
            for (std::size_t i = 0; i < m.variation.size(); ++i) w.row(r.days[i + 1], name, m.variation[i]);
    }
    {
        csv::Writer w(dir / "fidelity.csv", {"day", "method", "sq_error"});
        for (const auto& [name, m] : r.methods)
            for (std::size_t i = 0; i < m.fidelity.size(); ++i) w.row(r.days[i], name, m.fidelity[i]);
    }
    {
        csv::Writer w(dir / "correlation.csv", {"indicator", "param", "method", "rho"});
        for (const auto& [name, t] : r.rho)
            for (std::size_t j = 0; j < state::kStateDims; ++j)
                for (std::size_t p = 0; p < agents::kBehaviorDims; ++p)
                    w.row(state::state_names()[j], agents::behavior_names()[p], name, t[j][p]);
    }
    {
        csv::Writer w(dir / "correlation_summary.csv", {"indicator", "method", "mean_abs_rho", "reference"});
        for (const auto& [name, t] : r.rho)
            for (std::size_t j = 0; j < state::kStateDims; ++j) {
                std::string ref = "";
                for (const auto& ref_row : kReference)
                    if (std::string(ref_row.indicator) == state::state_names()[j]) {
                        if (name == "calisim") ref = csv::fmt(ref_row.calisim);
                        if (name == "bayesopt") ref = csv::fmt(ref_row.bayesopt);
                    }
                w.row(state::state_names()[j], name, r.mean_abs_rho(name, j), ref);
            }
    }
    {
        csv::Writer w(dir / "summary.csv",
                      {"method", "mean_recon_error", "median_variation", "mean_fidelity", "simulator_calls", "present"});
        for (const auto& [name, m] : r.methods)
            w.row(name, m.mean_recon(), m.median_variation(), m.mean_fidelity(), m.simulator_calls, "yes");
        for (const auto& name : r.absent) w.row(name, "", "", "", "", "absent");
    }

    std::ofstream(dir / "plot_variation.py") << R"PY(import pandas as pd, matplotlib.pyplot as plt
d = pd.read_csv("behavior_variation.csv")
fig, ax = plt.subplots()
for m, g in d.groupby("method"):
    ax.hist(g["variation"], bins=20, alpha=0.5, label=m)
ax.set_xlabel("behavior variation between consecutive days")
ax.set_ylabel("days")
ax.legend()
fig.savefig("variation_hist.png", dpi=120)
)PY";
    std::ofstream(dir / "plot_cdf.py") << R"PY(import numpy as np, pandas as pd, matplotlib.pyplot as plt
d = pd.read_csv("recon_errors.csv")
fig, ax = plt.subplots()
for m, g in d.groupby("method"):
    x = np.sort(g["recon_error"].to_numpy())
    ax.step(x, np.arange(1, len(x) + 1) / len(x), where="post", label=m)
ax.set_xlabel("reconstruction error (z-space)")
ax.set_ylabel("CDF")
ax.legend()
fig.savefig("recon_cdf.png", dpi=120)
)PY";
    std::ofstream(dir / "plot_correlation.py") << R"PY(import pandas as pd, matplotlib.pyplot as plt
d = pd.read_csv("correlation_summary.csv")
p = d.pivot(index="indicator", columns="method", values="mean_abs_rho")
ax = p.plot.bar()
ax.set_ylabel("mean |rho| over behavior parameters")
ax.figure.savefig("correlation.png", dpi=120)
)PY";
}

}  // namespace mcal::eval
