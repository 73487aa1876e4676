#include "marketcal/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <set>

namespace mcal::log {

namespace {
std::atomic<int> g_level{static_cast<int>(Level::Warn)};
std::mutex g_mu;
}  // namespace

void set_level(Level l) { g_level.store(static_cast<int>(l)); }
Level level() { return static_cast<Level>(g_level.load()); }

void info(const std::string& msg) {
    if (g_level.load() < static_cast<int>(Level::Info)) return;
    std::lock_guard<std::mutex> lock(g_mu);
    std::cerr << "[info] " << msg << '\n';
}

void warn(const std::string& msg) {
    if (g_level.load() < static_cast<int>(Level::Warn)) return;
    std::lock_guard<std::mutex> lock(g_mu);
    std::cerr << "[warn] " << msg << '\n';
}

void warn_once(const std::string& msg) {
    static std::set<std::string> seen;
    {
        std::lock_guard<std::mutex> lock(g_mu);
        if (!seen.insert(msg).second) return;
    }
    warn(msg);
}

}  // namespace mcal::log
