#pragma once

// Synthetic scene pieces for model and training tests.

#include <cmath>

#include "tplab/rng.hpp"
#include "tplab/scene.hpp"

namespace tplab::testing {

/// Nine vehicles moving at plausible highway speeds, ego-centred.
inline ScenePiece random_piece(Rng& rng)
{
    std::array<History, kGridSlots> world{};
    const double base_x = rng.uniform(0.0, 20.0), base_y = rng.uniform(0.0, 600.0);
    for (std::size_t s = 0; s < kGridSlots; ++s) {
        const double row = static_cast<double>(s / 3), col = static_cast<double>(s % 3);
        const double x0 = base_x + 3.7 * (row - 1.0) + rng.uniform(-0.3, 0.3);
        const double y0 = base_y + 15.0 * (col - 1.0) + rng.uniform(-3.0, 3.0);
        const double v = rng.uniform(5.0, 15.0), lat = rng.uniform(-0.3, 0.3);
        for (std::size_t k = 0; k < kHistoryPoints; ++k) {
            const double t = 0.2 * static_cast<double>(k) - 3.0;
            world[s][k] = {x0 + lat * t, y0 + v * t};
        }
    }
    Future fut{};
    const auto& ego_end = world[kEgoSlot - 1].back();
    const double v = rng.uniform(5.0, 15.0), lat = rng.uniform(-0.6, 0.6);
    for (std::size_t k = 0; k < kFuturePoints; ++k) {
        const double t = 0.5 * static_cast<double>(k + 1);
        fut[k] = {ego_end.x + lat * t, ego_end.y + v * t};
    }
    return center_piece(world, fut);
}

/// A queue standing still: all histories constant, future at the origin.
inline ScenePiece stationary_piece()
{
    std::array<History, kGridSlots> world{};
    for (std::size_t s = 0; s < kGridSlots; ++s) {
        const double row = static_cast<double>(s / 3), col = static_cast<double>(s % 3);
        for (auto& p : world[s]) p = {3.5 * (row - 1.0), 9.0 * (col - 1.0)};
    }
    Future fut{};
    return center_piece(world, fut);
}

/// A queue creeping forward at `speed` m/s, lanes 3.5 m apart, 9 m spacing.
inline ScenePiece creeping_piece(double speed)
{
    std::array<History, kGridSlots> world{};
    for (std::size_t s = 0; s < kGridSlots; ++s) {
        const double row = static_cast<double>(s / 3), col = static_cast<double>(s % 3);
        for (std::size_t k = 0; k < kHistoryPoints; ++k) {
            const double t = 0.2 * static_cast<double>(k) - 3.0;
            world[s][k] = {3.5 * (row - 1.0), 9.0 * (col - 1.0) + speed * t};
        }
    }
    Future fut{};
    for (std::size_t k = 0; k < kFuturePoints; ++k) fut[k] = {0.0, speed * 0.5 * static_cast<double>(k + 1)};
    return center_piece(world, fut);
}

}  // namespace tplab::testing
