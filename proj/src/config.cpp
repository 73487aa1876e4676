#include "marketcal/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mcal::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "': " + why);
}

// Reads known keys of one section and rejects the rest.
class Section {
public:
    Section(const json& root, std::string name) : name_(std::move(name)) {
        if (!root.contains(name_)) return;
        node_ = &root.at(name_);
        if (!node_->is_object()) fail(name_, "must be an object");
    }
    void finish() const {
        if (!node_) return;
        for (auto it = node_->begin(); it != node_->end(); ++it)
            if (!seen_.count(it.key())) fail(name_ + "." + it.key(), "unknown field");
    }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        try {
            out = node_->at(key).get<T>();
        } catch (const json::exception&) {
            fail(name_ + "." + key, "wrong type");
        }
    }

private:
    std::string name_;
    const json* node_ = nullptr;
    std::set<std::string> seen_;
};

void visit(const json& j, Config& c) {
    {
        Section s(j, "simulator");
        s.get("slots_per_day", c.sim.slots_per_day);
        s.get("n_agents", c.sim.n_agents);
        s.get("wake_prob", c.sim.wake_prob);
        s.get("tick_size", c.sim.tick_size);
        s.get("lot_units", c.sim.lot_units);
        s.get("open_price", c.sim.open_price);
        s.get("alpha_ref", c.sim.alpha_ref);
        s.get("lambda_band", c.sim.lambda_band);
        s.get("noise_sd_frac", c.sim.noise_sd_frac);
        s.get("variance_floor", c.sim.variance_floor);
        s.finish();
    }
    {
        Section s(j, "bounds");
        s.get("lo", c.bounds.lo);
        s.get("hi", c.bounds.hi);
        s.finish();
    }
    {
        Section s(j, "network");
        s.get("window", c.meta.window);
        s.get("hidden", c.meta.hidden);
        s.get("lstm_layers", c.meta.lstm_layers);
        s.get("analyzer_hidden", c.meta.analyzer_hidden);
        s.finish();
    }
    {
        Section s(j, "training");
        s.get("surrogate_per_day", c.surrogate.per_day);
        s.get("surrogate_val_fraction", c.surrogate.val_fraction);
        s.get("surrogate_epochs", c.surrogate.train.epochs);
        s.get("surrogate_lr", c.surrogate.train.lr);
        s.get("surrogate_batch", c.surrogate.train.batch);
        s.get("meta_epochs", c.meta.epochs);
        s.get("meta_lr", c.meta.lr);
        s.get("meta_chunk", c.meta.chunk);
        s.get("w_t", c.meta.w_t);
        s.get("w_s", c.meta.w_s);
        s.get("sigma", c.meta.sigma);
        s.get("similar_noise", c.meta.similar_noise);
        s.get("dissimilar_noise", c.meta.dissimilar_noise);
        s.finish();
    }
    {
        Section s(j, "benchmark");
        auto& b = c.bench;
        s.get("warmup_days", b.warmup_days);
        s.get("train_days", b.train_days);
        s.get("test_days", b.test_days);
        s.get("days_per_month", b.days_per_month);
        s.get("start_year", b.start_year);
        s.get("start_month", b.start_month);
        s.get("persistence", b.persistence);
        s.get("state_gain", b.state_gain);
        s.get("state_free", b.state_free);
        s.get("step_sd", b.step_sd);
        s.get("clip_lo", b.clip_lo);
        s.get("clip_hi", b.clip_hi);
        s.get("max_step", b.max_step);
        s.get("fund_step_sd", b.fund_step_sd);
        s.get("macro_rho", b.macro_rho);
        s.finish();
    }
    {
        Section s(j, "search");
        s.get("trials", c.search.trials);
        s.get("warm_start", c.search.bayes.warm_start);
        s.get("candidates", c.search.bayes.candidates);
        s.get("gp_noise", c.search.bayes.noise);
        s.get("length_grid", c.search.bayes.length_grid);
        s.finish();
    }
}

}  // namespace

void Config::set_seed(std::uint64_t s) {
    seed = s;
    sim.rng_seed = derive_seed(s, "sim");
    surrogate.train.seed = derive_seed(s, "surrogate");
    meta.seed = derive_seed(s, "meta");
}

Config Config::profile_defaults(const std::string& name) {
    Config c;
    c.profile = name;
    if (name == "ci") {
        c.sim.n_agents = 100;
        c.sim.slots_per_day = 3600;
    } else if (name == "full") {
        c.sim.n_agents = 500;
        c.sim.slots_per_day = 14400;
        c.bench.train_days = 250;
        c.bench.test_days = 60;
        c.bench.days_per_month = 21;
        c.surrogate.per_day = 10;
    } else {
        fail("profile", "unknown profile '" + name + "' (expected ci or full)");
    }
    c.search.bayes.trials = c.search.trials;
    c.set_seed(c.seed);
    return c;
}

Config Config::from_json(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError(source + ": top level must be an object");
    static const std::set<std::string> top{"profile", "seed",     "simulator", "bounds",
                                           "network", "training", "benchmark", "search"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!top.count(it.key())) fail(it.key(), "unknown section");

    std::string prof = "ci";
    if (j.contains("profile")) {
        if (!j["profile"].is_string()) fail("profile", "must be a string");
        prof = j["profile"].get<std::string>();
    }
    Config c = profile_defaults(prof);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) fail("seed", "must be a non-negative integer");
        c.set_seed(j["seed"].get<std::uint64_t>());
    }
    visit(j, c);
    c.search.bayes.trials = c.search.trials;
    c.validate();
    return c;
}

Config Config::load(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open config file " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), p.string());
}

void Config::validate() const {
    auto wrap = [](const char* section, auto&& fn) {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string(section) + ": " + e.what());
        }
    };
    wrap("simulator", [&] { sim.validate(); });
    wrap("bounds", [&] { bounds.validate(); });
    wrap("network/training", [&] { meta.validate(); });
    if (search.trials == 0) fail("search.trials", "must be at least 1");
    wrap("search", [&] { search.bayes.validate(); });
    const auto& b = bench;
    if (b.train_days < 2) fail("benchmark.train_days", "must be at least 2");
    if (b.test_days < 2) fail("benchmark.test_days", "must be at least 2");
    if (b.warmup_days < 2 * state::kBarWindow)
        fail("benchmark.warmup_days", "must cover two bar windows (" + std::to_string(2 * state::kBarWindow) + ")");
    if (b.warmup_days < meta.window) fail("benchmark.warmup_days", "must cover the calibrator window");
    if (b.days_per_month < 1) fail("benchmark.days_per_month", "must be at least 1");
    if (b.start_month < 1 || b.start_month > 12) fail("benchmark.start_month", "must lie in 1..12");
    if (!(b.persistence >= 0 && b.persistence < 1)) fail("benchmark.persistence", "must lie in [0, 1)");
    if (!(b.state_gain >= 0)) fail("benchmark.state_gain", "must be non-negative");
    if (!(b.step_sd >= 0)) fail("benchmark.step_sd", "must be non-negative");
    if (!(0 <= b.clip_lo && b.clip_lo < b.clip_hi && b.clip_hi <= 1)) fail("benchmark.clip_lo", "need 0 <= clip_lo < clip_hi <= 1");
    if (!(b.max_step > 0)) fail("benchmark.max_step", "must be positive");
    if (!(b.fund_step_sd >= 0)) fail("benchmark.fund_step_sd", "must be non-negative");
    if (!(b.macro_rho >= 0 && b.macro_rho < 1)) fail("benchmark.macro_rho", "must lie in [0, 1)");
    if (surrogate.per_day == 0) fail("training.surrogate_per_day", "must be at least 1");
    if (!(surrogate.val_fraction > 0 && surrogate.val_fraction < 1))
        fail("training.surrogate_val_fraction", "must lie in (0, 1)");
    if (surrogate.train.batch == 0) fail("training.surrogate_batch", "must be at least 1");
    if (!(surrogate.train.lr > 0)) fail("training.surrogate_lr", "must be positive");
    if (b.train_days < meta.chunk) fail("training.meta_chunk", "longer than the training split");
}

std::string Config::to_json() const {
    json j;
    j["profile"] = profile;
    j["seed"] = seed;
    j["simulator"] = {{"slots_per_day", sim.slots_per_day}, {"n_agents", sim.n_agents},
                      {"wake_prob", sim.wake_prob},         {"tick_size", sim.tick_size},
                      {"lot_units", sim.lot_units},         {"open_price", sim.open_price},
                      {"alpha_ref", sim.alpha_ref},         {"lambda_band", sim.lambda_band},
                      {"noise_sd_frac", sim.noise_sd_frac}, {"variance_floor", sim.variance_floor}};
    j["bounds"] = {{"lo", bounds.lo}, {"hi", bounds.hi}};
    j["network"] = {{"window", meta.window},
                    {"hidden", meta.hidden},
                    {"lstm_layers", meta.lstm_layers},
                    {"analyzer_hidden", meta.analyzer_hidden}};
    j["training"] = {{"surrogate_per_day", surrogate.per_day},
                     {"surrogate_val_fraction", surrogate.val_fraction},
                     {"surrogate_epochs", surrogate.train.epochs},
                     {"surrogate_lr", surrogate.train.lr},
                     {"surrogate_batch", surrogate.train.batch},
                     {"meta_epochs", meta.epochs},
                     {"meta_lr", meta.lr},
                     {"meta_chunk", meta.chunk},
                     {"w_t", meta.w_t},
                     {"w_s", meta.w_s},
                     {"sigma", meta.sigma},
                     {"similar_noise", meta.similar_noise},
                     {"dissimilar_noise", meta.dissimilar_noise}};
    j["benchmark"] = {{"warmup_days", bench.warmup_days},   {"train_days", bench.train_days},
                      {"test_days", bench.test_days},       {"days_per_month", bench.days_per_month},
                      {"start_year", bench.start_year},     {"start_month", bench.start_month},
                      {"persistence", bench.persistence},   {"state_gain", bench.state_gain},
                      {"state_free", bench.state_free},     {"step_sd", bench.step_sd},
                      {"clip_lo", bench.clip_lo},           {"clip_hi", bench.clip_hi},
                      {"max_step", bench.max_step},         {"fund_step_sd", bench.fund_step_sd},
                      {"macro_rho", bench.macro_rho}};
    j["search"] = {{"trials", search.trials},
                   {"warm_start", search.bayes.warm_start},
                   {"candidates", search.bayes.candidates},
                   {"gp_noise", search.bayes.noise},
                   {"length_grid", search.bayes.length_grid}};
    return j.dump(2);
}

}  // namespace mcal::config
