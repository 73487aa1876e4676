#include "marketcal/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "marketcal/baselines.hpp"
#include "marketcal/csv.hpp"
#include "marketcal/log.hpp"
#include "marketcal/stream_io.hpp"

namespace mcal::pipeline {

using nlohmann::json;

namespace {

fs::path bench_dir(const fs::path& root) { return root / "benchmark"; }
fs::path sur_dir(const fs::path& root) { return root / "surrogate"; }
fs::path meta_dir(const fs::path& root) { return root / "meta"; }
fs::path calib_dir(const fs::path& root) { return root / "calibration"; }

std::string method_name(Method m, Arm arm) {
    std::string s = to_string(m);
    if (m == Method::CaliSim && arm == Arm::NoState) s += "_ws0";
    return s;
}

fs::path calib_path(const fs::path& root, const std::string& method, bench::Split split) {
    return calib_dir(root) / (method + "_" + bench::to_string(split) + ".csv");
}

fs::path manifest_path(const fs::path& root, const std::string& stage) {
    return root / "manifests" / (stage + ".json");
}

void write_manifest(const config::Config& cfg, const fs::path& root, const std::string& stage, json extra) {
    fs::create_directories(root / "manifests");
    json j;
    j["stage"] = stage;
    j["config"] = json::parse(cfg.to_json());
    j["seed"] = cfg.seed;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    std::ofstream(manifest_path(root, stage)) << j.dump(2) << '\n';
}

void require_file(const fs::path& p, const std::string& stage) {
    if (!fs::exists(p)) throw std::runtime_error("missing input " + p.string() + " (run " + stage + " first)");
}

}  // namespace

fs::path output_root(const std::optional<fs::path>& cli_value) {
    if (cli_value) return *cli_value;
    if (const char* env = std::getenv("MARKETCAL_OUT"); env && *env) return fs::path(env);
    return fs::path("out");
}

const char* to_string(Method m) {
    switch (m) {
        case Method::CaliSim: return "calisim";
        case Method::RandSearch: return "randsearch";
        case Method::BayesOpt: return "bayesopt";
        case Method::GroundTruth: return "ground_truth";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "calisim") return Method::CaliSim;
    if (s == "randsearch") return Method::RandSearch;
    if (s == "bayesopt") return Method::BayesOpt;
    if (s == "ground_truth") return Method::GroundTruth;
    throw std::invalid_argument("unknown method '" + s + "' (expected calisim, randsearch, bayesopt or ground_truth)");
}

const char* to_string(Arm a) { return a == Arm::Main ? "main" : "ws0"; }

// ---- benchmark -------------------------------------------------------------

bench::Benchmark gen_benchmark(const config::Config& cfg, const fs::path& root, const Options& opt) {
    agents::set_default_bounds(cfg.bounds);
    sim::CallCounter counter;
    std::vector<sim::OrderStream> streams;
    bench::Benchmark b = bench::generate(cfg, &counter, opt.write_streams ? &streams : nullptr);
    const fs::path dir = bench_dir(root);
    bench::save(dir, b);

    // indicator tables, raw and z-scored with training-split statistics
    std::vector<std::size_t> days;
    std::vector<state::StateArray> raw, train_raw;
    for (const auto& d : b.days) {
        if (d.day < state::kBarWindow) continue;
        days.push_back(d.day);
        raw.push_back(b.raw_state(d.day));
        if (d.split == bench::Split::Train) train_raw.push_back(raw.back());
    }
    state::StateNormalizer sn;
    sn.fit(train_raw);
    csv::Writer wr(dir / "states.csv", {"day", "cpi", "ppi", "pmi", "trend", "noise"});
    csv::Writer wz(dir / "states_z.csv", {"day", "cpi", "ppi", "pmi", "trend", "noise"});
    for (std::size_t i = 0; i < days.size(); ++i) {
        const auto& x = raw[i];
        const auto z = sn.normalize(x);
        wr.row(days[i], x[0], x[1], x[2], x[3], x[4]);
        wz.row(days[i], z[0], z[1], z[2], z[3], z[4]);
    }
    if (opt.write_streams) {
        fs::create_directories(dir / "streams");
        for (std::size_t t = 0; t < streams.size(); ++t) {
            char name[32];
            std::snprintf(name, sizeof name, "day_%04zu", t);
            io::write_stream(dir / "streams" / name, streams[t]);
        }
    }
    write_manifest(cfg, root, "gen-benchmark",
                   {{"output", dir.string()},
                    {"days", b.days.size()},
                    {"simulator_calls", counter.value()},
                    {"max_step", bench::max_step(b)}});
    return b;
}

// ---- surrogate -------------------------------------------------------------

surrogate::TrainCurves train_surrogate(const config::Config& cfg, const fs::path& root, const Options& opt) {
    agents::set_default_bounds(cfg.bounds);
    const bench::Benchmark b = bench::load(bench_dir(root));
    std::vector<surrogate::DayInput> inputs;
    for (std::size_t d : b.days_in(bench::Split::Train)) inputs.push_back({d, b.day_config(d), b.days[d].fund});
    sim::CallCounter counter;
    const surrogate::Dataset ds = surrogate::build_dataset(inputs, cfg.surrogate.per_day, cfg.surrogate.val_fraction,
                                                           derive_seed(cfg.seed, "dataset"), opt.exec, &counter);
    const fs::path dir = sur_dir(root);
    fs::create_directories(dir);
    surrogate::write_dataset_csv(dir / "dataset.csv", ds);

    surrogate::SurrogateNet net(cfg.surrogate.train.seed);
    const surrogate::TrainCurves c = surrogate::train(net, ds, cfg.surrogate.train);
    ckpt::Archive a;
    net.save(a);
    ckpt::save(dir / "surrogate.ckpt", a);
    {
        csv::Writer w(dir / "curves.csv", {"epoch", "train_loss", "val_loss"});
        for (std::size_t e = 0; e < c.train.size(); ++e) w.row(e, c.train[e], c.val[e]);
    }
    write_manifest(cfg, root, "train-surrogate",
                   {{"rows", ds.rows.size()},
                    {"validation_rows", ds.count(true)},
                    {"simulator_calls", counter.value()},
                    {"best_epoch", c.best_epoch},
                    {"best_val", c.best_val},
                    {"epoch0_val", c.val.front()},
                    {"const_mean_val", c.const_mean_val},
                    {"checkpoint", (dir / "surrogate.ckpt").string()}});
    return c;
}

surrogate::SurrogateNet load_surrogate(const fs::path& root) {
    const fs::path p = sur_dir(root) / "surrogate.ckpt";
    require_file(p, "train-surrogate");
    surrogate::SurrogateNet net;
    net.load(ckpt::load(p));
    net.set_trainable(false);
    return net;
}

// ---- meta-market -----------------------------------------------------------

std::vector<meta::DaySample> day_samples(const bench::Benchmark& b, const std::vector<std::size_t>& days,
                                         const meta::MetaMarket& K, const features::FeatureNormalizer& target_norm) {
    const std::size_t W = K.config().window;
    std::vector<meta::DaySample> out;
    for (std::size_t t : days) {
        if (t + 1 < W || t < state::kBarWindow)
            throw std::invalid_argument("day " + std::to_string(t) + " lacks a full feature window");
        meta::DaySample s;
        s.day = t;
        for (std::size_t k = t + 1 - W; k <= t; ++k) s.window.push_back(K.feature_norm.normalize(b.days[k].q));
        s.x = K.state_norm.normalize(b.raw_state(t));
        s.f = surrogate::normalize_fundamental(b.days[t].fund,
                                               static_cast<double>(b.days[t].open_ticks) * b.sim.tick_size);
        s.q = target_norm.normalize(b.days[t].q);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<meta::EpochLog> train_metamarket(const config::Config& cfg, const fs::path& root, Arm arm) {
    agents::set_default_bounds(cfg.bounds);
    const bench::Benchmark b = bench::load(bench_dir(root));
    surrogate::SurrogateNet sur = load_surrogate(root);
    meta::MetaConfig mc = cfg.meta;
    if (arm == Arm::NoState) mc.w_s = 0.0;
    meta::MetaMarket K(mc);

    std::vector<features::FeatureArray> seen;
    std::vector<state::StateArray> states;
    for (const auto& d : b.days) {
        if (d.split == bench::Split::Test) continue;
        seen.push_back(d.q);
        if (d.split == bench::Split::Train) states.push_back(b.raw_state(d.day));
    }
    K.feature_norm.fit(seen);
    K.state_norm.fit(states);

    const auto samples = day_samples(b, b.days_in(bench::Split::Train), K, sur.normalizer());
    const auto t0 = std::chrono::steady_clock::now();
    const auto logs = meta::train(K, samples, sur);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path dir = meta_dir(root);
    fs::create_directories(dir);
    ckpt::Archive a;
    K.save(a);
    ckpt::save(dir / (std::string(to_string(arm)) + ".ckpt"), a);
    {
        csv::Writer w(dir / (std::string(to_string(arm)) + "_curves.csv"),
                      {"epoch", "loss", "recon_error", "behavior_variation", "state_loss"});
        for (const auto& l : logs) w.row(l.epoch, l.loss, l.recon, l.variation, l.stat);
    }
    write_manifest(cfg, root, std::string("train-metamarket-") + to_string(arm),
                   {{"arm", to_string(arm)},
                    {"w_t", mc.w_t},
                    {"w_s", mc.w_s},
                    {"train_days", samples.size()},
                    {"seconds", secs},
                    {"checkpoint", (dir / (std::string(to_string(arm)) + ".ckpt")).string()}});
    return logs;
}

meta::MetaMarket load_metamarket(const config::Config& cfg, const fs::path& root, Arm arm) {
    const fs::path p = meta_dir(root) / (std::string(to_string(arm)) + ".ckpt");
    require_file(p, std::string("train-metamarket") + (arm == Arm::NoState ? " --arm ws0" : ""));
    meta::MetaConfig mc = cfg.meta;
    if (arm == Arm::NoState) mc.w_s = 0.0;
    meta::MetaMarket K(mc);
    K.load(ckpt::load(p));
    return K;
}

// ---- calibration -----------------------------------------------------------

eval::Calibration calibrate(const config::Config& cfg, const fs::path& root, Method m, bench::Split split,
                            const Options& opt, Arm arm) {
    agents::set_default_bounds(cfg.bounds);
    const bench::Benchmark b = bench::load(bench_dir(root));
    eval::Calibration c;
    c.method = method_name(m, arm);
    c.source = to_string(m);
    c.days = b.days_in(split);
    if (split == bench::Split::Warmup) throw std::invalid_argument("warmup days cannot be calibrated");

    switch (m) {
        case Method::CaliSim: {
            surrogate::SurrogateNet sur = load_surrogate(root);
            meta::MetaMarket K = load_metamarket(cfg, root, arm);
            const auto samples = day_samples(b, c.days, K, sur.normalizer());
            const std::uint64_t before = sim::simulator_calls();
            for (const auto& s : samples) c.b.push_back(K.infer(s.window, s.x));
            c.simulator_calls = sim::simulator_calls() - before;
            break;
        }
        case Method::RandSearch:
        case Method::BayesOpt: {
            const surrogate::SurrogateNet sur = load_surrogate(root);
            const auto& norm = sur.normalizer();
            c.b.resize(c.days.size());
            sim::CallCounter counter;
            batch::for_each_index(
                c.days.size(),
                [&](std::size_t i) {
                    const std::size_t d = c.days[i];
                    baselines::DayTarget t{d, b.day_config(d), b.days[d].fund, b.days[d].q};
                    // one simulation seed for every candidate of the day
                    t.cfg.rng_seed = derive_seed(cfg.seed, "search-sim", d);
                    const auto scorer = baselines::simulator_scorer(t, norm, batch::Exec::Serial, &counter);
                    const std::uint64_t seed = derive_seed(cfg.seed, "search", d);
                    c.b[i] = m == Method::RandSearch ? baselines::random_search(scorer, cfg.search.trials, seed).best
                                                     : baselines::bayes_opt(scorer, cfg.search.bayes, seed).best;
                },
                opt.exec);
            c.simulator_calls = counter.value();
            break;
        }
        case Method::GroundTruth:
            for (std::size_t d : c.days) c.b.push_back(b.days[d].b_star);
            break;
    }
    fs::create_directories(calib_dir(root));
    const fs::path out = calib_path(root, c.method, split);
    c.write_csv(out);
    write_manifest(cfg, root, "calibrate-" + c.method + "-" + bench::to_string(split),
                   {{"method", c.method},
                    {"split", bench::to_string(split)},
                    {"days", c.days.size()},
                    {"simulator_calls", c.simulator_calls},
                    {"simulator_calls_per_day",
                     c.days.empty() ? 0.0 : static_cast<double>(c.simulator_calls) / static_cast<double>(c.days.size())},
                    {"output", out.string()}});
    return c;
}

// ---- evaluation ------------------------------------------------------------

eval::Report evaluate(const config::Config& cfg, const fs::path& root, bench::Split split, const Options& opt) {
    agents::set_default_bounds(cfg.bounds);
    const std::vector<std::string> expected{"calisim", "calisim_ws0", "randsearch", "bayesopt", "ground_truth"};
    require_file(calib_path(root, "calisim", split), "calibrate --method calisim");
    const bench::Benchmark b = bench::load(bench_dir(root));
    const surrogate::SurrogateNet sur = load_surrogate(root);

    std::vector<eval::Calibration> cals;
    for (const auto& name : expected) {
        const fs::path p = calib_path(root, name, split);
        if (!fs::exists(p)) continue;
        eval::Calibration c = eval::Calibration::read_csv(p, name);
        const fs::path mp = manifest_path(root, "calibrate-" + name + "-" + bench::to_string(split));
        if (fs::exists(mp)) {
            std::ifstream in(mp);
            c.simulator_calls = json::parse(in).at("simulator_calls").get<std::uint64_t>();
        }
        cals.push_back(std::move(c));
    }
    const eval::Report r = eval::evaluate(b, cals, sur.normalizer(), cfg.seed, opt.exec, expected);
    const fs::path dir = root / "eval" / bench::to_string(split);
    eval::write_report(dir, r);
    json summary;
    for (const auto& [name, m] : r.methods)
        summary[name] = {{"mean_recon_error", m.mean_recon()},
                         {"median_variation", m.median_variation()},
                         {"mean_fidelity", m.mean_fidelity()},
                         {"simulator_calls", m.simulator_calls}};
    write_manifest(cfg, root, std::string("evaluate-") + bench::to_string(split),
                   {{"output", dir.string()}, {"summary", summary}, {"absent", r.absent}});
    return r;
}

meta::Hypothesis hypothesize(const config::Config& cfg, const fs::path& root, std::size_t day,
                             const state::StateArray& dz, Arm arm) {
    agents::set_default_bounds(cfg.bounds);
    const bench::Benchmark b = bench::load(bench_dir(root));
    if (day >= b.days.size()) throw std::invalid_argument("day " + std::to_string(day) + " is outside the benchmark");
    const surrogate::SurrogateNet sur = load_surrogate(root);
    meta::MetaMarket K = load_metamarket(cfg, root, arm);
    const auto s = day_samples(b, {day}, K, sur.normalizer()).front();
    state::StateArray xm = s.x;
    for (std::size_t i = 0; i < xm.size(); ++i) xm[i] += dz[i];
    return meta::hypothesize(K, s.window, s.x, xm);
}

eval::Report run_all(const config::Config& cfg, const fs::path& root, const Options& opt) {
    gen_benchmark(cfg, root, opt);
    train_surrogate(cfg, root, opt);
    train_metamarket(cfg, root, Arm::Main);
    train_metamarket(cfg, root, Arm::NoState);
    for (Method m : {Method::CaliSim, Method::RandSearch, Method::BayesOpt, Method::GroundTruth})
        calibrate(cfg, root, m, bench::Split::Test, opt);
    calibrate(cfg, root, Method::CaliSim, bench::Split::Test, opt, Arm::NoState);
    return evaluate(cfg, root, bench::Split::Test, opt);
}

}  // namespace mcal::pipeline
