#include "marketcal/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "marketcal/csv.hpp"
#include "marketcal/log.hpp"
#include "marketcal/rng.hpp"

namespace mcal::surrogate {

FundNorm normalize_fundamental(const sim::FundamentalSeries& f, double open_price) {
    f.validate();
    if (!(open_price > 0)) throw std::invalid_argument("open price must be positive");
    FundNorm out{};
    for (std::size_t k = 0; k < kFundDims; ++k) out[k] = std::log(f.values[k] / open_price);
    return out;
}

std::size_t Dataset::count(bool validation) const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [&](const Row& r) { return r.validation == validation; }));
}

std::vector<bool> split_days(std::size_t n_days, double val_fraction, std::uint64_t seed) {
    if (!(val_fraction >= 0 && val_fraction < 1)) throw std::invalid_argument("val_fraction must lie in [0,1)");
    std::vector<std::size_t> order(n_days);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "split"));
    std::shuffle(order.begin(), order.end(), rng);
    auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n_days)));
    if (val_fraction > 0 && n_val == 0 && n_days > 1) n_val = 1;
    std::vector<bool> flags(n_days, false);
    for (std::size_t i = 0; i < n_val; ++i) flags[order[i]] = true;
    return flags;
}

Dataset build_dataset(const std::vector<DayInput>& days, std::size_t per_day, double val_fraction,
                      std::uint64_t seed, batch::Exec exec, sim::CallCounter* counter) {
    if (days.empty() || per_day == 0) throw std::invalid_argument("dataset needs days and draws");
    const std::vector<bool> val = split_days(days.size(), val_fraction, seed);
    Dataset ds;
    std::vector<batch::SimJob> jobs;
    for (std::size_t d = 0; d < days.size(); ++d) {
        const double open = static_cast<double>(days[d].cfg.open_price) * days[d].cfg.tick_size;
        const FundNorm fn = normalize_fundamental(days[d].fund, open);
        for (std::size_t k = 0; k < per_day; ++k) {
            Rng rng(derive_seed(seed, "draw", days[d].day, k));
            Row r;
            r.day = days[d].day;
            r.draw = k;
            for (auto& x : r.b) x = uniform01(rng);
            r.f = fn;
            r.validation = val[d];
            batch::SimJob job{days[d].cfg, agents::BehaviorVector::from_normalized(r.b), days[d].fund};
            job.cfg.rng_seed = derive_seed(seed, "dataset-sim", days[d].day, k);
            jobs.push_back(std::move(job));
            ds.rows.push_back(r);
        }
    }
    std::vector<features::FeatureVector> q(jobs.size());
    batch::for_each_index(
        jobs.size(),
        [&](std::size_t i) {
            try {
                q[i] = features::extract(sim::run_day(jobs[i].cfg, jobs[i].b, jobs[i].fund, counter));
            } catch (const std::exception& e) {
                throw std::runtime_error("dataset simulation failed at day " + std::to_string(ds.rows[i].day) +
                                         ", draw " + std::to_string(ds.rows[i].draw) + ": " + e.what());
            }
        },
        exec);
    std::vector<features::FeatureArray> train_q;
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        ds.rows[i].q = q[i].to_array();
        if (!ds.rows[i].validation) train_q.push_back(ds.rows[i].q);
    }
    if (train_q.empty()) throw std::invalid_argument("dataset has no training rows");
    ds.norm.fit(train_q);
    return ds;
}

void write_dataset_csv(const std::filesystem::path& p, const Dataset& ds) {
    std::vector<std::string> header{"day", "draw"};
    for (int i = 1; i <= 5; ++i) header.push_back("b" + std::to_string(i));
    for (int i = 1; i <= 24; ++i) header.push_back("f" + std::to_string(i));
    for (int i = 1; i <= 13; ++i) header.push_back("q" + std::to_string(i));
    csv::Writer w(p, header);
    for (const auto& r : ds.rows) {
        std::vector<std::string> cells{std::to_string(r.day), std::to_string(r.draw)};
        for (double x : r.b) cells.push_back(csv::fmt(x));
        for (double x : r.f) cells.push_back(csv::fmt(x));
        for (double x : r.q) cells.push_back(csv::fmt(x));
        w.row_vec(cells);
    }
}

SurrogateNet::SurrogateNet(std::uint64_t seed)
    : fund_("sur.fund", {kFundDims, 50, 4}, seed),
      trunk_("sur.trunk", {agents::kBehaviorDims + 4, 50, 100, 50, features::kFeatureDims}, seed) {}

ad::Var SurrogateNet::forward(ad::Var b, ad::Var f) {
    if (b.size() != agents::kBehaviorDims || f.size() != kFundDims)
        throw std::invalid_argument("surrogate input shape mismatch");
    return trunk_(ad::concat(b, fund_(f)));
}

features::FeatureArray SurrogateNet::predict(const agents::NormBehavior& b, const FundNorm& f) {
    agents::NormBehavior bc = b;
    for (auto& x : bc) {
        if (x < 0.0 || x > 1.0) {
            log::warn_once("surrogate input behavior coordinate clamped into [0,1]");
            x = std::clamp(x, 0.0, 1.0);
        }
    }
    ad::Tape t;
    t.set_recording(false);
    const auto out = forward(t.constant(std::span<const double>(bc)), t.constant(std::span<const double>(f)));
    features::FeatureArray z{};
    std::copy(out.value().begin(), out.value().end(), z.begin());
    return z;
}

ad::ParamList SurrogateNet::params() {
    ad::ParamList p = fund_.params();
    for (auto* q : trunk_.params()) p.push_back(q);
    return p;
}

void SurrogateNet::set_trainable(bool on) {
    fund_.set_trainable(on);
    trunk_.set_trainable(on);
}

void SurrogateNet::save(ckpt::Archive& a) const {
    for (const auto* net : {&fund_, &trunk_})
        for (const auto& l : net->layers()) {
            ckpt::put(a, l.W);
            ckpt::put(a, l.b);
        }
    ckpt::put(a, "sur.norm.mean", {norm_.mean().begin(), norm_.mean().end()});
    ckpt::put(a, "sur.norm.std", {norm_.std().begin(), norm_.std().end()});
}

void SurrogateNet::load(const ckpt::Archive& a) {
    for (auto* p : params()) ckpt::get(a, *p);
    features::FeatureArray m{}, s{};
    const auto mv = ckpt::get(a, "sur.norm.mean", features::kFeatureDims);
    const auto sv = ckpt::get(a, "sur.norm.std", features::kFeatureDims);
    std::copy(mv.begin(), mv.end(), m.begin());
    std::copy(sv.begin(), sv.end(), s.begin());
    norm_.set(m, s);
}

namespace {

ad::Var row_loss(SurrogateNet& net, ad::Tape& t, const Row& r, const features::FeatureNormalizer& norm) {
    const features::FeatureArray z = norm.normalize(r.q);
    const ad::Var pred = net.forward(t.constant(std::span<const double>(r.b)), t.constant(std::span<const double>(r.f)));
    return ad::sq_norm(ad::sub(pred, t.constant(std::span<const double>(z))));
}

}  // namespace

double mean_loss(SurrogateNet& net, const Dataset& ds, bool validation) {
    double acc = 0;
    std::size_t n = 0;
    ad::Tape t;
    t.set_recording(false);
    for (const auto& r : ds.rows) {
        if (r.validation != validation) continue;
        t.clear();
        acc += row_loss(net, t, r, ds.norm).scalar();
        ++n;
    }
    return n ? acc / static_cast<double>(n) : 0.0;
}

TrainCurves train(SurrogateNet& net, const Dataset& ds, const TrainOptions& opt) {
    if (ds.count(false) == 0 || ds.count(true) == 0)
        throw std::invalid_argument("surrogate training needs training and validation rows");
    if (opt.batch == 0) throw std::invalid_argument("batch size must be positive");
    net.normalizer() = ds.norm;
    net.set_trainable(true);

    TrainCurves c;
    {
        double acc = 0;
        for (const auto& r : ds.rows)
            if (r.validation) {
                const auto z = ds.norm.normalize(r.q);
                for (double v : z) acc += v * v;
            }
        c.const_mean_val = acc / static_cast<double>(ds.count(true));
    }

    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < ds.rows.size(); ++i)
        if (!ds.rows[i].validation) train_idx.push_back(i);

    ad::Adam adam(net.params(), ad::AdamConfig{opt.lr});
    Rng rng(derive_seed(opt.seed, "surrogate-shuffle"));

    c.train.push_back(mean_loss(net, ds, false));
    c.val.push_back(mean_loss(net, ds, true));
    c.best_val = c.val.back();
    ckpt::Archive best;
    net.save(best);

    ad::Tape t;
    for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        for (std::size_t start = 0; start < train_idx.size(); start += opt.batch) {
            const std::size_t end = std::min(train_idx.size(), start + opt.batch);
            t.clear();
            ad::Var total = t.scalar(0.0);
            for (std::size_t k = start; k < end; ++k)
                total = ad::add(total, row_loss(net, t, ds.rows[train_idx[k]], ds.norm));
            const ad::Var loss = ad::scale(total, 1.0 / static_cast<double>(end - start));
            if (!std::isfinite(loss.scalar()))
                throw std::runtime_error("surrogate loss became non-finite at epoch " + std::to_string(epoch));
            t.backward(loss);
            adam.step();
        }
        c.train.push_back(mean_loss(net, ds, false));
        c.val.push_back(mean_loss(net, ds, true));
        if (c.val.back() < c.best_val) {
            c.best_val = c.val.back();
            c.best_epoch = epoch;
            best.clear();
            net.save(best);
        }
    }
    net.load(best);
    return c;
}

}  // namespace mcal::surrogate
