// marketcal: command-line front end for the simulation / calibration stages.
//
// Exit codes: 0 success, 1 configuration or missing-input error, 2 usage error.

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "marketcal/config.hpp"
#include "marketcal/csv.hpp"
#include "marketcal/log.hpp"
#include "marketcal/pipeline.hpp"
#include "marketcal/stream_io.hpp"

namespace {

using namespace mcal;
namespace fs = std::filesystem;

struct Common {
    std::string config_path;
    std::string profile;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool serial = false;
    bool verbose = false;
    bool quiet = false;
};

void add_common(CLI::App* sc, Common& c) {
    sc->add_option("--config", c.config_path, "JSON config file");
    sc->add_option("--profile", c.profile, "base profile: ci or full");
    sc->add_option("--seed", c.seed, "master seed");
    sc->add_option("--out", c.out, "output root (default $MARKETCAL_OUT or ./out)");
    sc->add_flag("--serial", c.serial, "run day-level work on one thread");
    sc->add_flag("-v,--verbose", c.verbose, "progress messages");
    sc->add_flag("-q,--quiet", c.quiet, "suppress warnings");
}

config::Config resolve(const Common& c) {
    config::Config cfg;
    if (!c.config_path.empty()) {
        cfg = config::Config::load(c.config_path);
        if (!c.profile.empty() && c.profile != cfg.profile)
            throw config::ConfigError("--profile " + c.profile + " conflicts with the config file's profile " + cfg.profile);
    } else {
        cfg = config::Config::profile_defaults(c.profile.empty() ? "ci" : c.profile);
    }
    if (c.seed) cfg.set_seed(*c.seed);
    cfg.validate();
    log::set_level(c.quiet ? log::Level::Quiet : c.verbose ? log::Level::Info : log::Level::Warn);
    return cfg;
}

pipeline::Options options(const Common& c) {
    pipeline::Options o;
    o.exec = c.serial ? batch::Exec::Serial : batch::Exec::Parallel;
    return o;
}

fs::path root_of(const Common& c) {
    return pipeline::output_root(c.out ? std::optional<fs::path>(*c.out) : std::nullopt);
}

bench::Split split_arg(const std::string& s) { return bench::split_from_string(s); }

std::array<double, 5> parse5(const std::string& text, const char* what) {
    std::array<double, 5> v{};
    std::stringstream ss(text);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(ss, cell, ',')) {
        if (i >= 5) throw config::ConfigError(std::string(what) + ": expected 5 comma-separated numbers");
        try {
            v[i++] = std::stod(cell);
        } catch (const std::exception&) {
            throw config::ConfigError(std::string(what) + ": '" + cell + "' is not a number");
        }
    }
    if (i != 5) throw config::ConfigError(std::string(what) + ": expected 5 comma-separated numbers");
    return v;
}

void print_features(std::ostream& os, const features::FeatureVector& f) {
    const auto a = f.to_array();
    for (std::size_t i = 0; i < a.size(); ++i) os << features::feature_names()[i] << ',' << csv::fmt(a[i]) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Agent-based market simulation and behavior calibration"};
    app.require_subcommand(1);
    Common common;

    auto* gen = app.add_subcommand("gen-benchmark", "generate the synthetic ground-truth benchmark");
    add_common(gen, common);
    bool streams = false;
    gen->add_flag("--streams", streams, "also write every target order stream");

    auto* simc = app.add_subcommand("simulate", "simulate one day and write its order stream");
    add_common(simc, common);
    std::string behavior = "1,1,1,600,0.1", stem;
    bool normalized = false;
    simc->add_option("--behavior", behavior, "delta_f,delta_c,delta_n,tau,p_inst");
    simc->add_flag("--normalized", normalized, "behavior given in [0,1] coordinates");
    simc->add_option("--stream", stem, "output stem (writes .csv, .meta.json, .mid.csv)")->required();

    auto* ext = app.add_subcommand("extract-features", "stylized features of a stored order stream");
    add_common(ext, common);
    std::string in_stem;
    ext->add_option("--stream", in_stem, "input stem")->required();

    auto* ts = app.add_subcommand("train-surrogate", "build the surrogate corpus and train the surrogate");
    add_common(ts, common);

    auto* tm = app.add_subcommand("train-metamarket", "train the calibrator");
    add_common(tm, common);
    std::string arm = "main";
    tm->add_option("--arm", arm, "main, or ws0 to drop the state-consistency term")
        ->check(CLI::IsMember({"main", "ws0"}));

    auto* cal = app.add_subcommand("calibrate", "per-day behavior calibration");
    add_common(cal, common);
    std::string method, days = "test";
    cal->add_option("--method", method, "calisim, randsearch, bayesopt or ground_truth")
        ->required()
        ->check(CLI::IsMember({"calisim", "randsearch", "bayesopt", "ground_truth"}));
    cal->add_option("--days", days, "train or test")->check(CLI::IsMember({"train", "test"}));
    cal->add_option("--arm", arm, "calibrator arm for calisim")->check(CLI::IsMember({"main", "ws0"}));

    auto* ev = app.add_subcommand("evaluate", "market-replay evaluation of stored calibrations");
    add_common(ev, common);
    ev->add_option("--days", days, "train or test")->check(CLI::IsMember({"train", "test"}));

    auto* hy = app.add_subcommand("hypothesize", "behavior under a modified market state");
    add_common(hy, common);
    std::size_t day = 0;
    std::string dz = "0,0,0,0,0";
    hy->add_option("--day", day, "benchmark day")->required();
    hy->add_option("--dz", dz, "state shift in z units: cpi,ppi,pmi,trend,noise");
    hy->add_option("--arm", arm, "calibrator arm")->check(CLI::IsMember({"main", "ws0"}));

    auto* all = app.add_subcommand("run-all", "every stage in order, evaluated on the test split");
    add_common(all, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        const config::Config cfg = resolve(common);
        const fs::path root = root_of(common);
        const auto opt = options(common);
        const pipeline::Arm arm_v = arm == "ws0" ? pipeline::Arm::NoState : pipeline::Arm::Main;

        if (*gen) {
            auto o = opt;
            o.write_streams = streams;
            const auto b = pipeline::gen_benchmark(cfg, root, o);
            std::cout << "benchmark: " << b.days.size() << " days -> " << (root / "benchmark").string() << '\n';
        } else if (*simc) {
            agents::set_default_bounds(cfg.bounds);
            const auto v = parse5(behavior, "--behavior");
            const auto b = normalized ? agents::BehaviorVector::from_normalized(v) : agents::BehaviorVector::from_raw(v);
            b.validate();
            const auto fund = sim::FundamentalSeries::flat(static_cast<double>(cfg.sim.open_price) * cfg.sim.tick_size);
            const auto s = sim::run_day(cfg.sim, b, fund);
            io::write_stream(stem, s);
            std::cout << "stream: " << s.events.size() << " events -> " << io::stream_paths(stem).events.string() << '\n';
        } else if (*ext) {
            print_features(std::cout, features::extract(io::read_stream(in_stem)));
        } else if (*ts) {
            const auto c = pipeline::train_surrogate(cfg, root, opt);
            std::cout << "surrogate: epoch0 val " << c.val.front() << ", best val " << c.best_val << " at epoch "
                      << c.best_epoch << ", constant-mean val " << c.const_mean_val << '\n';
        } else if (*tm) {
            const auto logs = pipeline::train_metamarket(cfg, root, arm_v);
            std::cout << "calibrator (" << arm << "): recon " << logs.front().recon << " -> " << logs.back().recon
                      << ", variation " << logs.front().variation << " -> " << logs.back().variation << '\n';
        } else if (*cal) {
            const auto c = pipeline::calibrate(cfg, root, pipeline::method_from_string(method), split_arg(days), opt, arm_v);
            std::cout << c.method << ": " << c.days.size() << " days, " << c.simulator_calls << " simulator calls\n";
        } else if (*ev) {
            const auto r = pipeline::evaluate(cfg, root, split_arg(days), opt);
            std::cout << "method,mean_recon_error,median_variation,mean_fidelity,simulator_calls\n";
            for (const auto& [name, m] : r.methods)
                std::cout << name << ',' << csv::fmt(m.mean_recon()) << ',' << csv::fmt(m.median_variation()) << ','
                          << csv::fmt(m.mean_fidelity()) << ',' << m.simulator_calls << '\n';
            for (const auto& a : r.absent) std::cout << a << ",absent\n";
        } else if (*hy) {
            const auto h = pipeline::hypothesize(cfg, root, day, parse5(dz, "--dz"), arm_v);
            const fs::path out = root / "hypothesis" / ("day_" + std::to_string(day) + ".csv");
            csv::Writer w(out, {"param", "factual", "counterfactual", "delta"});
            std::cout << "param,factual,counterfactual,delta\n";
            for (std::size_t i = 0; i < agents::kBehaviorDims; ++i) {
                const double d = h.counterfactual[i] - h.factual[i];
                w.row(agents::behavior_names()[i], h.factual[i], h.counterfactual[i], d);
                std::cout << agents::behavior_names()[i] << ',' << csv::fmt(h.factual[i]) << ','
                          << csv::fmt(h.counterfactual[i]) << ',' << csv::fmt(d) << '\n';
            }
        } else if (*all) {
            const auto r = pipeline::run_all(cfg, root, opt);
            for (const auto& [name, m] : r.methods)
                std::cout << name << ": recon " << m.mean_recon() << ", variation " << m.median_variation()
                          << ", fidelity " << m.mean_fidelity() << ", calls " << m.simulator_calls << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
