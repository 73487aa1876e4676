#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "marketcal/checkpoint.hpp"
#include "marketcal/csv.hpp"
#include "marketcal/evaluate.hpp"
#include "marketcal/rng.hpp"
#include "marketcal/stream_io.hpp"

using namespace mcal;
namespace fs = std::filesystem;

namespace {
struct TempDir {
    fs::path p;
    explicit TempDir(const char* name) : p(fs::temp_directory_path() / name) {
        fs::remove_all(p);
        fs::create_directories(p);
    }
    ~TempDir() { fs::remove_all(p); }
};
}  // namespace

TEST_CASE("csv numbers survive a write / read cycle bit for bit") {
    TempDir d("mcal_test_csv");
    Rng rng(3);
    std::vector<double> xs{0.1, 1.0 / 3, -2.5e-300, 1e300, 0.0, 123456789.0};
    for (int i = 0; i < 50; ++i) xs.push_back(normal(rng) * std::exp(10 * normal(rng)));
    {
        csv::Writer w(d.p / "x.csv", {"i", "x", "tag"});
        for (std::size_t i = 0; i < xs.size(); ++i) w.row(i, xs[i], "ok");
    }
    const auto t = csv::read(d.p / "x.csv");
    REQUIRE(t.rows() == xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(t.num(i, "x") == xs[i]);
        CHECK(t.str(i, "tag") == "ok");
    }
    CHECK_THROWS_WITH(t.require({"i", "y"}), doctest::Contains("y"));
    CHECK_THROWS(csv::read(d.p / "missing.csv"));
}

TEST_CASE("checkpoint archive round trip and shape checks") {
    TempDir d("mcal_test_ckpt");
    ad::ParamTensor p("layer.w", {3, 4});
    Rng rng(1);
    for (auto& v : p.values) v = normal(rng);
    ckpt::Archive a;
    ckpt::put(a, p);
    ckpt::put(a, "extra", {1.5, -2.0});
    ckpt::save(d.p / "m.ckpt", a);
    const auto b = ckpt::load(d.p / "m.ckpt");
    CHECK(b == a);

    ad::ParamTensor q("layer.w", {3, 4});
    ckpt::get(b, q);
    CHECK(q.values == p.values);
    CHECK(ckpt::get(b, "extra", 2) == std::vector<double>{1.5, -2.0});
    CHECK_THROWS(ckpt::get(b, "extra", 3));
    ad::ParamTensor wrong("layer.w", {4, 3});
    CHECK_THROWS(ckpt::get(b, wrong));
    ad::ParamTensor absent("layer.b", {1, 4});
    CHECK_THROWS_WITH(ckpt::get(b, absent), doctest::Contains("layer.b"));

    // truncated file
    {
        std::ifstream in(d.p / "m.ckpt", std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream(d.p / "cut.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    }
    CHECK_THROWS(ckpt::load(d.p / "cut.ckpt"));
    std::ofstream(d.p / "junk.ckpt") << "not a checkpoint";
    CHECK_THROWS(ckpt::load(d.p / "junk.ckpt"));
}

TEST_CASE("order stream files round trip") {
    TempDir d("mcal_test_stream");
    sim::SimConfig c;
    c.n_agents = 60;
    c.slots_per_day = 1200;
    c.rng_seed = 11;
    agents::NormBehavior nb{0.4, 0.6, 0.5, 0.3, 0.5};
    const auto s = sim::run_day(c, agents::BehaviorVector::from_normalized(nb), sim::FundamentalSeries::flat(10.0));
    REQUIRE(!s.events.empty());
    io::write_stream(d.p / "day", s);
    const auto paths = io::stream_paths(d.p / "day");
    CHECK(fs::exists(paths.events));
    CHECK(fs::exists(paths.meta));
    CHECK(fs::exists(paths.mids));
    const auto r = io::read_stream(d.p / "day");
    CHECK(r.events == s.events);
    CHECK(r.mid_per_slot == s.mid_per_slot);
    CHECK(r.mid_per_minute == s.mid_per_minute);
    CHECK(features::extract(r).to_array() == features::extract(s).to_array());
    CHECK_THROWS(io::read_stream(d.p / "nothing"));
}

TEST_CASE("calibration csv round trip") {
    TempDir d("mcal_test_cal");
    eval::Calibration c;
    c.method = "randsearch";
    c.source = "randsearch";
    Rng rng(8);
    for (std::size_t t = 100; t < 110; ++t) {
        c.days.push_back(t);
        agents::NormBehavior nb{};
        for (double& v : nb) v = uniform01(rng);
        c.b.push_back(nb);
    }
    c.write_csv(d.p / "cal.csv");
    const auto r = eval::Calibration::read_csv(d.p / "cal.csv", "randsearch");
    CHECK(r.days == c.days);
    CHECK(r.b == c.b);
    CHECK(r.source == c.source);
    CHECK_THROWS_WITH(eval::Calibration::read_csv(d.p / "none.csv", "x"), doctest::Contains("none.csv"));
}
