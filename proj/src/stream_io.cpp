#include "marketcal/stream_io.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "marketcal/csv.hpp"

namespace mcal::io {

StreamPaths stream_paths(const std::filesystem::path& stem) {
    const std::string s = stem.string();
    return {s + ".csv", s + ".meta.json", s + ".mid.csv"};
}

void write_stream(const std::filesystem::path& stem, const sim::OrderStream& s) {
    const StreamPaths p = stream_paths(stem);
    {
        csv::Writer w(p.events, {"slot", "seq", "kind", "order_id", "agent", "side", "price_ticks",
                                 "size_lots", "match_id"});
        for (const auto& e : s.events)
            w.row(e.slot, e.seq, sim::to_string(e.kind), e.order_id, e.agent, lob::to_string(e.side),
                  e.price, e.size, e.match_id);
    }
    {
        nlohmann::json j{{"open_price", s.meta.open_price},
                         {"tick_size", s.meta.tick_size},
                         {"lot_size", s.meta.lot_units},
                         {"slots_per_day", s.meta.slots_per_day},
                         {"seed", s.meta.seed}};
        std::ofstream out(p.meta, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + p.meta.string());
        out << j.dump(2) << '\n';
    }
    csv::Writer w(p.mids, {"minute", "mid_ticks"});
    for (std::size_t m = 0; m < s.mid_per_minute.size(); ++m) w.row(m, s.mid_per_minute[m]);
}

namespace {

sim::EventKind parse_kind(const std::string& k) {
    if (k == "PLACE") return sim::EventKind::Place;
    if (k == "CANCEL") return sim::EventKind::Cancel;
    if (k == "TRADE") return sim::EventKind::Trade;
    throw std::runtime_error("unknown event kind '" + k + "'");
}

lob::Side parse_side(const std::string& s) {
    if (s == "BID") return lob::Side::Bid;
    if (s == "ASK") return lob::Side::Ask;
    throw std::runtime_error("unknown side '" + s + "'");
}

}  // namespace

sim::OrderStream read_stream(const std::filesystem::path& stem) {
    const StreamPaths p = stream_paths(stem);
    sim::OrderStream s;
    {
        std::ifstream in(p.meta);
        if (!in) throw std::runtime_error("cannot read " + p.meta.string());
        const auto j = nlohmann::json::parse(in);
        s.meta.open_price = j.at("open_price").get<lob::Ticks>();
        s.meta.tick_size = j.at("tick_size").get<double>();
        s.meta.lot_units = j.at("lot_size").get<std::int64_t>();
        s.meta.slots_per_day = j.at("slots_per_day").get<std::int64_t>();
        s.meta.seed = j.at("seed").get<std::uint64_t>();
    }
    const csv::Table t = csv::read(p.events);
    t.require({"slot", "seq", "kind", "order_id", "agent", "side", "price_ticks", "size_lots", "match_id"});
    s.events.reserve(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) {
        sim::StreamEvent e;
        e.slot = static_cast<std::int64_t>(t.num(i, "slot"));
        e.seq = static_cast<std::int64_t>(t.num(i, "seq"));
        e.kind = parse_kind(t.str(i, "kind"));
        e.order_id = static_cast<lob::OrderId>(std::stoull(t.str(i, "order_id")));
        e.agent = static_cast<lob::AgentIndex>(t.num(i, "agent"));
        e.side = parse_side(t.str(i, "side"));
        e.price = static_cast<lob::Ticks>(std::stoll(t.str(i, "price_ticks")));
        e.size = static_cast<lob::Lots>(std::stoll(t.str(i, "size_lots")));
        e.match_id = static_cast<lob::OrderId>(std::stoull(t.str(i, "match_id")));
        s.events.push_back(e);
    }
    s.mid_per_slot = sim::replay(s).mid_per_slot;
    s.mid_per_minute = sim::minute_series(s.mid_per_slot);
    return s;
}

}  // namespace mcal::io
