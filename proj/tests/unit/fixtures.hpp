#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "p2p/profiles.hpp"

namespace p2p::fixture {

// Prosumer whose generator output equals `generation` exactly (installed
// power = peak, resource = generation / peak) and costs nothing.
inline ProsumerSpec prosumer(std::string id, std::vector<double> demand, std::vector<double> generation,
                             BatterySpec battery = {}, double step_hours = 0.5) {
    double peak = 0.0;
    for (double g : generation) peak = std::max(peak, g);
    std::vector<double> resource(generation.size(), 0.0);
    if (peak > 0.0) {
        for (std::size_t t = 0; t < generation.size(); ++t) resource[t] = generation[t] / peak;
    }
    GeneratorSpec gen{peak, 0.0, 20.0, TimeSeries(std::move(resource), step_hours)};
    return ProsumerSpec{std::move(id), TimeSeries(std::move(demand), step_hours), std::move(gen), std::move(battery)};
}

inline BatterySpec battery(double capacity_kwh, double max_power_kw, double cost_per_kwh = 0.0) {
    BatterySpec b;
    b.capacity_kwh = capacity_kwh;
    b.max_power_kw = max_power_kw;
    b.cost_per_kwh = cost_per_kwh;
    return b;
}

// Three prosumers with disjoint complementary steps under 16p/0p tariffs:
// pairwise gains AB 10, AC 6, BC 2 pence and a grand-coalition gain of 18.
inline std::vector<ProsumerSpec> hand_trio() {
    return {
        prosumer("A", {0.0, 0.0, 0.0}, {1.25, 0.75, 0.0}),
        prosumer("B", {1.25, 0.0, 0.0}, {0.0, 0.0, 0.25}),
        prosumer("C", {0.0, 0.75, 0.25}, {0.0, 0.0, 0.0}),
    };
}

}  // namespace p2p::fixture
