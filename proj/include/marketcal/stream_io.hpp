#pragma once

// Order-stream persistence: event CSV, JSON metadata sidecar and the
// per-minute mid CSV. Reading rebuilds the mid series by replaying events.

#include <filesystem>

#include "marketcal/simulator.hpp"

namespace mcal::io {

struct StreamPaths {
    std::filesystem::path events;  // <stem>.csv
    std::filesystem::path meta;    // <stem>.meta.json
    std::filesystem::path mids;    // <stem>.mid.csv
};

StreamPaths stream_paths(const std::filesystem::path& stem);

void write_stream(const std::filesystem::path& stem, const sim::OrderStream& s);
sim::OrderStream read_stream(const std::filesystem::path& stem);

}  // namespace mcal::io
