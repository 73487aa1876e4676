#include "marketcal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace mcal::sim {

namespace {

std::atomic<std::uint64_t> g_simulator_calls{0};

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw std::invalid_argument("SimConfig." + field + ": " + why);
}

void release_fill(agents::AgentAccount& acct, lob::OrderId id, lob::Lots filled,
                  std::int64_t lot_units) {
    auto it = std::find_if(acct.resting.begin(), acct.resting.end(),
                           [&](const agents::RestingOrder& o) { return o.id == id; });
    if (it == acct.resting.end()) throw std::logic_error("fill for an order the agent does not hold");
    if (it->side == lob::Side::Bid)
        acct.reserved_cash -= it->price * filled * lot_units;
    else
        acct.reserved_holdings -= filled;
    it->remaining -= filled;
    if (it->remaining == 0) acct.resting.erase(it);
}

void release_cancel(agents::AgentAccount& acct, lob::OrderId id, std::int64_t lot_units) {
    auto it = std::find_if(acct.resting.begin(), acct.resting.end(),
                           [&](const agents::RestingOrder& o) { return o.id == id; });
    if (it == acct.resting.end()) return;
    if (it->side == lob::Side::Bid)
        acct.reserved_cash -= it->price * it->remaining * lot_units;
    else
        acct.reserved_holdings -= it->remaining;
    acct.resting.erase(it);
}

}  // namespace

void SimConfig::validate() const {
    if (slots_per_day < 60) bad_field("slots_per_day", "must be at least 60");
    if (slots_per_day % static_cast<std::int64_t>(kSlotsPerMinute) != 0)
        bad_field("slots_per_day", "must be a whole number of minutes");
    if (n_agents < 1) bad_field("n_agents", "must be at least 1");
    if (!(wake_prob >= 0.0 && wake_prob <= 1.0)) bad_field("wake_prob", "must lie in [0, 1]");
    if (!(tick_size > 0.0)) bad_field("tick_size", "must be positive");
    if (lot_units < 1) bad_field("lot_units", "must be at least 1");
    if (open_price < 1) bad_field("open_price", "must be at least one tick");
    if (!(alpha_ref > 0.0)) bad_field("alpha_ref", "must be positive");
    if (!(lambda_band > 0.0 && lambda_band < 1.0)) bad_field("lambda_band", "must lie in (0, 1)");
    if (!(noise_sd_frac > 0.0)) bad_field("noise_sd_frac", "must be positive");
    if (!(variance_floor > 0.0)) bad_field("variance_floor", "must be positive");
}

void FundamentalSeries::validate() const {
    if (values.size() != kFundamentalPoints)
        throw std::invalid_argument("fundamental series must have " +
                                    std::to_string(kFundamentalPoints) + " points, got " +
                                    std::to_string(values.size()));
    for (double v : values)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("fundamental values must be positive and finite");
}

double FundamentalSeries::at_slot(std::int64_t slot, std::int64_t slots_per_day) const {
    const std::int64_t interval = slots_per_day / static_cast<std::int64_t>(kFundamentalPoints);
    const auto k = std::min<std::int64_t>(static_cast<std::int64_t>(kFundamentalPoints) - 1,
                                          slot / std::max<std::int64_t>(1, interval));
    return values[static_cast<std::size_t>(k)];
}

FundamentalSeries FundamentalSeries::flat(double price) {
    return FundamentalSeries{std::vector<double>(kFundamentalPoints, price)};
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Place: return "PLACE";
        case EventKind::Cancel: return "CANCEL";
        case EventKind::Trade: return "TRADE";
    }
    return "?";
}

std::uint64_t simulator_calls() { return g_simulator_calls.load(); }

void settle(agents::AgentAccount& account, const lob::TradeEvent& trade, lob::Side side,
            std::int64_t lot_units) {
    if (trade.size < 1) throw std::logic_error("settle: trade size must be at least one lot");
    const std::int64_t notional = trade.price * trade.size * lot_units;
    if (side == lob::Side::Bid) {
        if (account.cash - notional < 0) throw std::logic_error("settle: buyer cash would go negative");
        account.cash -= notional;
        account.holdings += trade.size;
    } else {
        if (account.holdings - trade.size < 0)
            throw std::logic_error("settle: seller holdings would go negative");
        account.holdings -= trade.size;
        account.cash += notional;
    }
}

std::vector<double> minute_series(const std::vector<double>& per_slot) {
    std::vector<double> out;
    out.reserve(per_slot.size() / kSlotsPerMinute);
    for (std::size_t end = kSlotsPerMinute; end <= per_slot.size(); end += kSlotsPerMinute)
        out.push_back(per_slot[end - 1]);
    return out;
}

OrderStream run_day(const SimConfig& cfg, const agents::BehaviorVector& b,
                    const FundamentalSeries& fund, CallCounter* counter) {
    cfg.validate();
    b.validate();
    fund.validate();
    g_simulator_calls.fetch_add(1);
    if (counter) counter->calls.fetch_add(1);

    Rng pop_rng(derive_seed(cfg.rng_seed, "population"));
    Rng wake_rng(derive_seed(cfg.rng_seed, "wake"));
    Rng agent_rng(derive_seed(cfg.rng_seed, "decide"));
    Rng batch_rng(derive_seed(cfg.rng_seed, "batch"));

    agents::PopulationSpec spec{cfg.n_agents, cfg.alpha_ref, cfg.open_price, cfg.lot_units};
    std::vector<agents::Agent> population = agents::build_population(b, spec, pop_rng);

    lob::OrderBook book(cfg.open_price, cfg.tick_size, static_cast<double>(cfg.lot_units));

    OrderStream out;
    out.meta = StreamMeta{cfg.open_price, cfg.tick_size, cfg.lot_units, cfg.slots_per_day,
                          cfg.rng_seed};
    out.mid_per_slot.reserve(static_cast<std::size_t>(cfg.slots_per_day));
    out.events.reserve(static_cast<std::size_t>(cfg.slots_per_day * 2));

    const double sigma_noise = cfg.noise_sd_frac * static_cast<double>(cfg.open_price) * cfg.tick_size;
    std::vector<double> history;  // completed minute mids in currency
    history.reserve(static_cast<std::size_t>(cfg.slots_per_day / 60) + 1);

    lob::OrderId next_id = 1;
    std::vector<agents::AgentRequest> batch;
    std::bernoulli_distribution wake(cfg.wake_prob);

    for (std::int64_t slot = 0; slot < cfg.slots_per_day; ++slot) {
        const double mid = book.mid_price();
        history.push_back(mid * cfg.tick_size);
        agents::MarketView view{mid, history, cfg.tick_size, cfg.lot_units, cfg.lambda_band,
                                sigma_noise, cfg.variance_floor};
        const double fundamental_now = fund.at_slot(slot, cfg.slots_per_day);

        batch.clear();
        for (std::size_t i = 0; i < population.size(); ++i) {
            if (!wake(wake_rng)) continue;
            const auto& agent = population[i];
            batch.push_back(agents::make_order(static_cast<lob::AgentIndex>(i), agent.profile,
                                               agent.account, view, fundamental_now, slot,
                                               agent_rng));
        }
        history.pop_back();

        std::shuffle(batch.begin(), batch.end(), batch_rng);

        std::int64_t seq = 0;
        for (const auto& req : batch) {
            auto& acct = population[static_cast<std::size_t>(req.agent)].account;
            for (lob::OrderId id : req.cancels) {
                if (book.cancel(id)) {
                    auto resting = std::find_if(
                        acct.resting.begin(), acct.resting.end(),
                        [&](const agents::RestingOrder& o) { return o.id == id; });
                    StreamEvent ev{slot, seq++, EventKind::Cancel, id, req.agent};
                    if (resting != acct.resting.end()) {
                        ev.side = resting->side;
                        ev.price = resting->price;
                        ev.size = resting->remaining;
                    }
                    out.events.push_back(ev);
                }
                release_cancel(acct, id, cfg.lot_units);
            }
            if (!req.order) continue;

            // Fills earlier in this batch may have consumed what the agent
            // planned against; re-clamp at execution time.
            agents::OrderIntent intent = *req.order;
            if (intent.side == lob::Side::Bid) {
                const std::int64_t per_lot = intent.price * cfg.lot_units;
                intent.size = std::min(intent.size, std::max<std::int64_t>(0, acct.free_cash()) / per_lot);
            } else {
                intent.size = std::min(intent.size, std::max<std::int64_t>(0, acct.free_holdings()));
            }
            if (intent.size < 1) continue;

            const lob::OrderId id = next_id++;
            if (intent.side == lob::Side::Bid)
                acct.reserved_cash += intent.price * intent.size * cfg.lot_units;
            else
                acct.reserved_holdings += intent.size;
            acct.resting.push_back(
                agents::RestingOrder{id, slot, intent.side, intent.price, intent.size});

            out.events.push_back(StreamEvent{slot, seq++, EventKind::Place, id, req.agent,
                                             intent.side, intent.price, intent.size, 0});
            const auto trades = book.place_limit(
                lob::LimitOrder{id, req.agent, intent.side, intent.price, intent.size, slot}, slot);
            for (const auto& t : trades) {
                out.events.push_back(StreamEvent{slot, seq++, EventKind::Trade, t.maker,
                                                 t.maker_agent, t.taker_side, t.price, t.size,
                                                 t.taker});
                auto& maker = population[static_cast<std::size_t>(t.maker_agent)].account;
                auto& taker = population[static_cast<std::size_t>(t.taker_agent)].account;
                release_fill(maker, t.maker, t.size, cfg.lot_units);
                settle(maker, t, lob::opposite(t.taker_side), cfg.lot_units);
                release_fill(taker, t.taker, t.size, cfg.lot_units);
                settle(taker, t, t.taker_side, cfg.lot_units);
            }
        }

        out.mid_per_slot.push_back(book.mid_price());
        if ((slot + 1) % static_cast<std::int64_t>(kSlotsPerMinute) == 0)
            history.push_back(out.mid_per_slot.back() * cfg.tick_size);
    }
    out.mid_per_minute = minute_series(out.mid_per_slot);
    return out;
}

FundamentalSeries fundamental_from_stream(const OrderStream& s) {
    const std::size_t interval = s.mid_per_slot.size() / kFundamentalPoints;
    if (interval == 0)
        throw std::invalid_argument("stream shorter than one fundamental sample interval");
    FundamentalSeries f;
    f.values.reserve(kFundamentalPoints);
    for (std::size_t k = 0; k < kFundamentalPoints; ++k)
        f.values.push_back(s.mid_per_slot[k * interval] * s.meta.tick_size);
    return f;
}

ReplayResult replay(const OrderStream& s) {
    lob::OrderBook book(s.meta.open_price, s.meta.tick_size, static_cast<double>(s.meta.lot_units));
    ReplayResult r;
    r.mid_per_slot.reserve(static_cast<std::size_t>(s.meta.slots_per_day));
    std::size_t e = 0;
    for (std::int64_t slot = 0; slot < s.meta.slots_per_day; ++slot) {
        for (; e < s.events.size() && s.events[e].slot == slot; ++e) {
            const auto& ev = s.events[e];
            if (ev.kind == EventKind::Place) {
                r.mid_before_place.push_back(book.mid_price());
                auto trades = book.place_limit(
                    lob::LimitOrder{ev.order_id, ev.agent, ev.side, ev.price, ev.size, slot}, slot);
                r.trades.insert(r.trades.end(), trades.begin(), trades.end());
            } else if (ev.kind == EventKind::Cancel) {
                book.cancel(ev.order_id);
            }
        }
        r.mid_per_slot.push_back(book.mid_price());
    }
    if (e != s.events.size()) throw std::invalid_argument("stream has events beyond the last slot");
    return r;
}

}  // namespace mcal::sim
