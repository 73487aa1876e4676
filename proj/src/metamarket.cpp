#include "marketcal/metamarket.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mcal::meta {

void MetaConfig::validate() const {
    auto bad = [](const char* f, const char* why) {
        throw std::invalid_argument(std::string("meta.") + f + ": " + why);
    };
    if (window < 1) bad("window", "must be at least 1");
    if (hidden < 1) bad("hidden", "must be at least 1");
    if (lstm_layers < 1) bad("lstm_layers", "must be at least 1");
    if (analyzer_hidden.empty()) bad("analyzer_hidden", "needs at least one layer");
    if (w_t < 0) bad("w_t", "must be non-negative");
    if (w_s < 0) bad("w_s", "must be non-negative");
    if (!(sigma >= 0)) bad("sigma", "must be non-negative");
    if (!(similar_noise > 0) || !(dissimilar_noise > similar_noise))
        bad("similar_noise", "need 0 < similar_noise < dissimilar_noise");
    if (chunk < 2) bad("chunk", "must be at least 2");
    if (!(lr > 0)) bad("lr", "must be positive");
}

StateTriplet make_triplet(const state::StateArray& x, double similar_sd, double dissimilar_sd, Rng& rng) {
    StateTriplet tr;
    tr.anchor = x;
    auto dist = [](const state::StateArray& a, const state::StateArray& b) {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    };
    for (int attempt = 0; attempt < 1000; ++attempt) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            tr.similar[i] = x[i] + normal(rng, 0.0, similar_sd);
            tr.dissimilar[i] = x[i] + normal(rng, 0.0, dissimilar_sd);
        }
        if (dist(x, tr.similar) < dist(x, tr.dissimilar)) return tr;
    }
    throw std::runtime_error("could not fabricate an ordered state triplet");
}

MetaMarket::MetaMarket(const MetaConfig& cfg)
    : cfg_(cfg), extractor_("meta.lstm", features::kFeatureDims, cfg.hidden, cfg.lstm_layers, cfg.seed) {
    cfg_.validate();
    std::vector<std::size_t> widths{state::kStateDims};
    widths.insert(widths.end(), cfg.analyzer_hidden.begin(), cfg.analyzer_hidden.end());
    widths.push_back(theta2_size());
    analyzer_ = nn::Mlp("meta.analyzer", widths, cfg.seed);

    // state-blind start: the last projection emits a fixed estimator theta2_0
    auto& last = analyzer_.layers().back();
    std::fill(last.W.values.begin(), last.W.values.end(), 0.0);
    ad::ParamTensor w0("meta.theta0.W", {agents::kBehaviorDims, cfg.hidden});
    ad::glorot_init(w0, cfg.seed);
    std::fill(last.b.values.begin(), last.b.values.end(), 0.0);
    std::copy(w0.values.begin(), w0.values.end(), last.b.values.begin());
}

ad::ParamList MetaMarket::params() {
    ad::ParamList p = extractor_.params();
    for (auto* q : analyzer_.params()) p.push_back(q);
    return p;
}

ad::Var MetaMarket::encode(ad::Tape& t, const std::vector<features::FeatureArray>& window) {
    if (window.size() != cfg_.window)
        throw std::invalid_argument("feature window has " + std::to_string(window.size()) +
                                    " days, calibrator needs " + std::to_string(cfg_.window));
    std::vector<ad::Var> seq;
    seq.reserve(window.size());
    for (const auto& f : window) seq.push_back(t.constant(std::span<const double>(f)));
    return extractor_.encode(t, seq);
}

ad::Var MetaMarket::estimate(ad::Var u, ad::Var x) {
    const ad::Var theta2 = analyzer_(x);
    const std::size_t nw = agents::kBehaviorDims * cfg_.hidden;
    const ad::Var W = ad::slice(theta2, 0, nw);
    const ad::Var b = ad::slice(theta2, nw, agents::kBehaviorDims);
    return ad::sigmoid(ad::affine(u, W, b, agents::kBehaviorDims));
}

ad::Var MetaMarket::estimate(ad::Tape& t, ad::Var u, const state::StateArray& x) {
    return estimate(u, t.constant(std::span<const double>(x)));
}

agents::NormBehavior MetaMarket::infer(const std::vector<features::FeatureArray>& window,
                                       const state::StateArray& x) {
    ad::Tape t;
    t.set_recording(false);
    const ad::Var b = estimate(t, encode(t, window), x);
    agents::NormBehavior out{};
    std::copy(b.value().begin(), b.value().end(), out.begin());
    return out;
}

void MetaMarket::save(ckpt::Archive& a) {
    for (auto* p : params()) ckpt::put(a, *p);
    ckpt::put(a, "meta.config",
              {static_cast<double>(cfg_.window), static_cast<double>(cfg_.hidden),
               static_cast<double>(cfg_.lstm_layers), cfg_.w_t, cfg_.w_s, cfg_.sigma});
    const auto& last = analyzer_.layers().back();
    ckpt::put(a, "meta.theta0", last.b.values);
    ckpt::put(a, "meta.feature_norm.mean", {feature_norm.mean().begin(), feature_norm.mean().end()});
    ckpt::put(a, "meta.feature_norm.std", {feature_norm.std().begin(), feature_norm.std().end()});
    ckpt::put(a, "meta.state_norm.mean", {state_norm.mean().begin(), state_norm.mean().end()});
    ckpt::put(a, "meta.state_norm.std", {state_norm.std().begin(), state_norm.std().end()});
    const auto& bounds = agents::default_bounds();
    ckpt::put(a, "meta.bounds.lo", {bounds.lo.begin(), bounds.lo.end()});
    ckpt::put(a, "meta.bounds.hi", {bounds.hi.begin(), bounds.hi.end()});
}

void MetaMarket::load(const ckpt::Archive& a) {
    const auto c = ckpt::get(a, "meta.config", 6);
    if (static_cast<std::size_t>(c[0]) != cfg_.window || static_cast<std::size_t>(c[1]) != cfg_.hidden ||
        static_cast<std::size_t>(c[2]) != cfg_.lstm_layers)
        throw std::runtime_error("calibrator checkpoint was built with a different network shape");
    for (auto* p : params()) ckpt::get(a, *p);
    auto arr = [&](const char* name, auto& out) {
        const auto v = ckpt::get(a, name, out.size());
        std::copy(v.begin(), v.end(), out.begin());
    };
    features::FeatureArray fm{}, fs{};
    arr("meta.feature_norm.mean", fm);
    arr("meta.feature_norm.std", fs);
    feature_norm.set(fm, fs);
    state::StateArray sm{}, ss{};
    arr("meta.state_norm.mean", sm);
    arr("meta.state_norm.std", ss);
    state_norm.set(sm, ss);
}

// ---- losses ------------------------------------------------------------

ad::Var loss_repr(ad::Var b, const DaySample& d, surrogate::SurrogateNet& sur) {
    ad::Tape& t = *b.tape;
    const ad::Var pred = sur.forward(b, t.constant(std::span<const double>(d.f)));
    return ad::sq_norm(ad::sub(pred, t.constant(std::span<const double>(d.q))));
}

ad::Var loss_temp(const std::vector<ad::Var>& bs) {
    if (bs.size() < 2) throw std::invalid_argument("temporal loss needs at least two days");
    ad::Var acc = ad::sq_norm(ad::sub(bs[0], bs[1]));
    for (std::size_t i = 1; i + 1 < bs.size(); ++i) acc = ad::add(acc, ad::sq_norm(ad::sub(bs[i], bs[i + 1])));
    return acc;
}

ad::Var loss_stat(MetaMarket& K, ad::Var u, const StateTriplet& tr, double sigma) {
    ad::Tape& t = *u.tape;
    const ad::Var ud = ad::detach(u);
    const ad::Var b0 = K.estimate(t, ud, tr.anchor);
    const ad::Var bs = K.estimate(t, ud, tr.similar);
    const ad::Var bd = K.estimate(t, ud, tr.dissimilar);
    const ad::Var gap = ad::sub(ad::norm(ad::sub(b0, bs)), ad::norm(ad::sub(b0, bd)));
    return ad::hinge(ad::add(gap, t.scalar(sigma)));
}

ad::Var chunk_loss(ad::Tape& t, MetaMarket& K, const std::vector<DaySample>& chunk,
                   const std::vector<StateTriplet>& triplets, surrogate::SurrogateNet& sur) {
    if (chunk.empty() || triplets.size() != chunk.size())
        throw std::invalid_argument("chunk loss needs one triplet per day");
    const MetaConfig& cfg = K.config();
    std::vector<ad::Var> bs;
    ad::Var repr = t.scalar(0.0);
    ad::Var stat = t.scalar(0.0);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
        const ad::Var u = K.encode(t, chunk[i].window);
        const ad::Var b = K.estimate(t, u, chunk[i].x);
        bs.push_back(b);
        repr = ad::add(repr, loss_repr(b, chunk[i], sur));
        if (cfg.w_s > 0) stat = ad::add(stat, loss_stat(K, u, triplets[i], cfg.sigma));
    }
    const double n = static_cast<double>(chunk.size());
    ad::Var total = ad::scale(repr, 1.0 / n);
    if (cfg.w_t > 0 && bs.size() >= 2)
        total = ad::add(total, ad::scale(loss_temp(bs), cfg.w_t / static_cast<double>(bs.size() - 1)));
    if (cfg.w_s > 0) total = ad::add(total, ad::scale(stat, cfg.w_s / n));
    return total;
}

Evaluation evaluate(MetaMarket& K, const std::vector<DaySample>& days, surrogate::SurrogateNet& sur,
                    std::uint64_t seed) {
    Evaluation ev;
    ad::Tape t;
    t.set_recording(false);
    for (const auto& d : days) {
        t.clear();
        const ad::Var u = K.encode(t, d.window);
        const ad::Var b = K.estimate(t, u, d.x);
        ev.recon += loss_repr(b, d, sur).scalar();
        Rng rng(derive_seed(seed, "eval-triplet", d.day));
        const auto tr = make_triplet(d.x, K.config().similar_noise, K.config().dissimilar_noise, rng);
        ev.stat += loss_stat(K, u, tr, K.config().sigma).scalar();
        agents::NormBehavior nb{};
        std::copy(b.value().begin(), b.value().end(), nb.begin());
        ev.b.push_back(nb);
    }
    if (!days.empty()) {
        ev.recon /= static_cast<double>(days.size());
        ev.stat /= static_cast<double>(days.size());
    }
    for (std::size_t i = 0; i + 1 < ev.b.size(); ++i) ev.variation += features::behavior_variation(ev.b[i], ev.b[i + 1]);
    if (ev.b.size() > 1) ev.variation /= static_cast<double>(ev.b.size() - 1);
    return ev;
}

std::vector<EpochLog> train(MetaMarket& K, const std::vector<DaySample>& days, surrogate::SurrogateNet& sur) {
    const MetaConfig& cfg = K.config();
    if (days.size() < cfg.chunk) throw std::invalid_argument("meta-market corpus is shorter than one chunk");
    for (std::size_t i = 1; i < days.size(); ++i)
        if (days[i].day != days[i - 1].day + 1)
            throw std::invalid_argument("meta-market corpus must hold consecutive days");
    sur.set_trainable(false);
    ad::Adam adam(K.params(), ad::AdamConfig{cfg.lr});

    std::vector<EpochLog> log;
    auto record = [&](std::size_t epoch, double loss) {
        const Evaluation ev = evaluate(K, days, sur, cfg.seed);
        log.push_back(EpochLog{epoch, loss, ev.recon, ev.variation, ev.stat});
    };
    record(0, 0.0);

    ad::Tape t;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, "meta-epoch", epoch));
        // chunk boundaries shift every epoch so pairs straddle different cuts
        std::vector<std::pair<std::size_t, std::size_t>> chunks;
        std::size_t start = 0;
        std::size_t first = std::uniform_int_distribution<std::size_t>(2, cfg.chunk)(rng);
        while (start < days.size()) {
            std::size_t len = chunks.empty() ? first : cfg.chunk;
            len = std::min(len, days.size() - start);
            if (len < 2 && !chunks.empty()) {
                chunks.back().second += len;
                break;
            }
            chunks.emplace_back(start, len);
            start += len;
        }
        std::shuffle(chunks.begin(), chunks.end(), rng);

        double total = 0;
        for (const auto& [s, len] : chunks) {
            std::vector<DaySample> chunk(days.begin() + static_cast<std::ptrdiff_t>(s),
                                         days.begin() + static_cast<std::ptrdiff_t>(s + len));
            std::vector<StateTriplet> triplets;
            for (const auto& d : chunk)
                triplets.push_back(make_triplet(d.x, cfg.similar_noise, cfg.dissimilar_noise, rng));
            t.clear();
            const ad::Var loss = chunk_loss(t, K, chunk, triplets, sur);
            if (!std::isfinite(loss.scalar()))
                throw std::runtime_error("meta-market loss became non-finite at epoch " + std::to_string(epoch));
            t.backward(loss);
            adam.step();
            total += loss.scalar();
        }
        record(epoch, total / static_cast<double>(chunks.size()));
    }
    return log;
}

Hypothesis hypothesize(MetaMarket& K, const std::vector<features::FeatureArray>& window,
                       const state::StateArray& x, const state::StateArray& x_modified) {
    return Hypothesis{K.infer(window, x), K.infer(window, x_modified)};
}

}  // namespace mcal::meta
