#include "marketcal/lob.hpp"

#include <string>

namespace mcal::lob {

const char* to_string(Side s) { return s == Side::Bid ? "BID" : "ASK"; }

DuplicateOrderId::DuplicateOrderId(OrderId dup)
    : std::invalid_argument("duplicate order id " + std::to_string(dup)), id(dup) {}

OrderBook::OrderBook(Ticks open_price, double tick_size, double lot_size)
    : open_(open_price), tick_size_(tick_size), lot_size_(lot_size) {
    if (open_price < 1) throw std::invalid_argument("open price must be at least one tick");
    if (!(tick_size > 0.0) || !(lot_size > 0.0))
        throw std::invalid_argument("tick and lot size must be positive");
}

void OrderBook::register_id(OrderId id) {
    if (!seen_.insert(id).second) throw DuplicateOrderId(id);
}

template <class Levels>
void OrderBook::match(Levels& levels, LimitOrder& taker, bool is_market, std::int64_t slot,
                      std::vector<TradeEvent>& out) {
    const auto crosses = [&](Ticks maker_price) {
        if (is_market) return true;
        return taker.side == Side::Bid ? taker.price >= maker_price : taker.price <= maker_price;
    };
    while (taker.size > 0 && !levels.empty()) {
        auto level_it = levels.begin();
        if (!crosses(level_it->first)) break;
        Queue& queue = level_it->second;
        while (taker.size > 0 && !queue.empty()) {
            LimitOrder& maker = queue.front();
            const Lots fill = std::min(maker.size, taker.size);
            out.push_back(TradeEvent{slot, maker.id, taker.id, maker.agent, taker.agent, taker.side,
                                     maker.price, fill, maker.agent == taker.agent});
            maker.size -= fill;
            taker.size -= fill;
            last_trade_ = maker.price;
            if (maker.size == 0) {
                index_.erase(maker.id);
                queue.pop_front();
            }
        }
        if (queue.empty()) levels.erase(level_it);
    }
}

void OrderBook::rest(const LimitOrder& order) {
    if (order.side == Side::Bid) {
        Queue& q = bids_[order.price];
        auto it = q.insert(q.end(), order);
        index_.emplace(order.id, Locator{order.side, order.price, it});
    } else {
        Queue& q = asks_[order.price];
        auto it = q.insert(q.end(), order);
        index_.emplace(order.id, Locator{order.side, order.price, it});
    }
}

std::vector<TradeEvent> OrderBook::place_limit(const LimitOrder& order, std::int64_t slot) {
    if (order.size < 1) throw std::invalid_argument("limit order size must be at least one lot");
    if (order.price < 1) throw std::invalid_argument("limit order price must be at least one tick");
    register_id(order.id);

    std::vector<TradeEvent> trades;
    LimitOrder taker = order;
    if (taker.side == Side::Bid)
        match(asks_, taker, false, slot, trades);
    else
        match(bids_, taker, false, slot, trades);
    if (taker.size > 0) rest(taker);
    return trades;
}

std::vector<TradeEvent> OrderBook::place_market(OrderId id, Side side, Lots size, AgentIndex agent,
                                                std::int64_t slot) {
    if (size < 1) throw std::invalid_argument("market order size must be at least one lot");
    const bool empty = side == Side::Bid ? asks_.empty() : bids_.empty();
    if (empty) throw NoLiquidity();
    register_id(id);

    std::vector<TradeEvent> trades;
    LimitOrder taker{id, agent, side, 0, size, slot};
    if (side == Side::Bid)
        match(asks_, taker, true, slot, trades);
    else
        match(bids_, taker, true, slot, trades);
    return trades;
}

bool OrderBook::cancel(OrderId id) {
    auto found = index_.find(id);
    if (found == index_.end()) return false;
    const Locator loc = found->second;
    index_.erase(found);
    if (loc.side == Side::Bid) {
        auto level = bids_.find(loc.price);
        level->second.erase(loc.it);
        if (level->second.empty()) bids_.erase(level);
    } else {
        auto level = asks_.find(loc.price);
        level->second.erase(loc.it);
        if (level->second.empty()) asks_.erase(level);
    }
    return true;
}

std::optional<Ticks> OrderBook::best_bid() const {
    if (bids_.empty()) return std::nullopt;
    return bids_.begin()->first;
}

std::optional<Ticks> OrderBook::best_ask() const {
    if (asks_.empty()) return std::nullopt;
    return asks_.begin()->first;
}

double OrderBook::mid_price() const {
    if (!bids_.empty() && !asks_.empty())
        return 0.5 * static_cast<double>(bids_.begin()->first + asks_.begin()->first);
    if (last_trade_) return static_cast<double>(*last_trade_);
    return static_cast<double>(open_);
}

const LimitOrder* OrderBook::find(OrderId id) const {
    auto found = index_.find(id);
    return found == index_.end() ? nullptr : &*found->second.it;
}

Lots OrderBook::depth(Side side) const {
    Lots total = 0;
    const auto sum = [&](const auto& levels) {
        for (const auto& [price, queue] : levels)
            for (const auto& o : queue) total += o.size;
    };
    if (side == Side::Bid)
        sum(bids_);
    else
        sum(asks_);
    return total;
}

std::vector<LimitOrder> OrderBook::level(Side side, Ticks price) const {
    const auto collect = [&](const auto& levels) {
        auto it = levels.find(price);
        if (it == levels.end()) return std::vector<LimitOrder>{};
        return std::vector<LimitOrder>(it->second.begin(), it->second.end());
    };
    return side == Side::Bid ? collect(bids_) : collect(asks_);
}

}  // namespace mcal::lob
