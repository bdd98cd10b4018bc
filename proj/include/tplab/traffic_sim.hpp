#pragma once

// Synthetic multi-lane highway traffic in the NGSIM record layout.
//
// Car following uses the intelligent driver model; desired speeds are modulated
// by stop-and-go waves travelling upstream, and drivers change lanes when an
// adjacent lane offers a clear acceleration advantage and a safe gap. Used for
// fixtures and for exercising the pipeline when the public recordings are not
// at hand.

#include <cstdint>
#include <vector>

#include "tplab/ngsim.hpp"

namespace tplab {

struct TrafficConfig {
    std::uint64_t seed = 1;
    double duration_s = 600.0;
    double road_length_ft = 2200.0;
    int lanes = 5;
    double lane_width_ft = 12.0;

    // intelligent driver model (feet, seconds)
    double desired_speed_mean = 55.0;
    double desired_speed_spread = 12.0;
    double lane_speed_step = 2.5;  // lower-numbered (left) lanes are faster
    double time_headway = 1.2;
    double min_gap = 8.0;
    double max_accel = 4.0;
    double comfort_decel = 6.0;
    double vehicle_length = 15.0;

    // stop-and-go waves
    double wave_depth = 0.55;
    double wave_length_ft = 900.0;
    double wave_speed = 16.0;  // upstream propagation, ft/s

    // lane changes
    double decision_interval_s = 1.0;
    double change_incentive = 1.0;  // ft/s^2 advantage required
    double safe_decel = 8.0;
    double change_duration_s = 4.0;
    double change_cooldown_s = 10.0;
    double change_probability = 0.35;  // per qualifying decision

    double spawn_gap_ft = 45.0;
    double lateral_noise_ft = 0.15;
};

std::vector<RawRecord> simulate_traffic(const TrafficConfig& cfg);

}  // namespace tplab
