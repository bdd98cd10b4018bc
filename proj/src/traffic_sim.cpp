#include "tplab/traffic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tplab/common.hpp"
#include "tplab/rng.hpp"

namespace tplab {

namespace {

struct Car {
    VehicleId id = 0;
    int lane = 1;         // lane the car is assigned to (origin lane while changing)
    int target = 1;       // destination lane while changing, else == lane
    double change_start = -1.0;
    double y = 0.0;
    double v = 0.0;
    double v0 = 0.0;
    double next_decision = 0.0;
    double cooldown_until = 0.0;
    double noise = 0.0;
    double x = 0.0;  // lateral, feet
};

constexpr double kDt = 1.0 / kFrameRateHz;

class Simulation {
public:
    explicit Simulation(const TrafficConfig& cfg) : cfg_(cfg), rng_(mix_seed(cfg.seed, 0x7AFF))
    {
        for (int l = 0; l < cfg_.lanes; ++l) lane_phase_.push_back(rng_.uniform(0.0, cfg_.wave_length_ft));
    }

    std::vector<RawRecord> run()
    {
        const double warmup = cfg_.road_length_ft / (0.5 * cfg_.desired_speed_mean);
        const auto warm_steps = static_cast<std::int64_t>(warmup / kDt);
        const auto steps = static_cast<std::int64_t>(cfg_.duration_s / kDt);
        std::vector<RawRecord> out;
        for (std::int64_t s = -warm_steps; s < steps; ++s) {
            step(static_cast<double>(s + warm_steps) * kDt);
            if (s >= 0) {
                for (const auto& c : cars_) {
                    out.push_back({c.id, s, std::round(c.x * 1000.0) / 1000.0, std::round(c.y * 1000.0) / 1000.0,
                                   lane_of(c.x)});
                }
            }
        }
        return out;
    }

private:
    double center(int lane) const { return (lane - 0.5) * cfg_.lane_width_ft; }

    int lane_of(double x) const
    {
        const int l = static_cast<int>(std::floor(x / cfg_.lane_width_ft)) + 1;
        return std::clamp(l, 1, cfg_.lanes);
    }

    bool occupies(const Car& c, int lane) const { return c.lane == lane || c.target == lane; }

    double desired_speed(const Car& c, int lane, double t) const
    {
        const double phase = 2.0 * std::numbers::pi * (c.y + cfg_.wave_speed * t + lane_phase_[lane - 1]) /
                             cfg_.wave_length_ft;
        const double w = 0.5 * (1.0 + std::sin(phase));
        const double lane_bias = cfg_.lane_speed_step * ((cfg_.lanes + 1) / 2.0 - lane);
        return std::max(5.0, (c.v0 + lane_bias) * (1.0 - cfg_.wave_depth * w * w));
    }

    double idm(double v, double v0, double gap, double dv) const
    {
        const double s_star = cfg_.min_gap + std::max(0.0, v * cfg_.time_headway +
                                                              v * dv / (2.0 * std::sqrt(cfg_.max_accel * cfg_.comfort_decel)));
        const double free = 1.0 - std::pow(v / v0, 4);
        const double inter = std::isfinite(gap) ? (s_star / std::max(gap, 0.1)) * (s_star / std::max(gap, 0.1)) : 0.0;
        return cfg_.max_accel * (free - inter);
    }

    // Nearest car occupying `lane` strictly ahead of / behind y, excluding `self`.
    const Car* neighbour(int lane, double y, const Car* self, bool ahead) const
    {
        const Car* best = nullptr;
        for (const auto& o : cars_) {
            if (&o == self || !occupies(o, lane)) continue;
            const double d = ahead ? o.y - y : y - o.y;
            if (d <= 0.0) continue;
            if (!best || d < (ahead ? best->y - y : y - best->y)) best = &o;
        }
        return best;
    }

    double accel_in_lane(const Car& c, int lane, double t) const
    {
        const Car* lead = neighbour(lane, c.y, &c, true);
        const double gap = lead ? lead->y - c.y - cfg_.vehicle_length : std::numeric_limits<double>::infinity();
        const double dv = lead ? c.v - lead->v : 0.0;
        return idm(c.v, desired_speed(c, lane, t), gap, dv);
    }

    void consider_lane_change(Car& c, double t)
    {
        if (c.change_start >= 0.0 || t < c.cooldown_until || t < c.next_decision) return;
        c.next_decision = t + cfg_.decision_interval_s;
        const double current = accel_in_lane(c, c.lane, t);
        int best_lane = 0;
        double best_gain = cfg_.change_incentive;
        for (int lane : {c.lane - 1, c.lane + 1}) {
            if (lane < 1 || lane > cfg_.lanes) continue;
            const Car* lead = neighbour(lane, c.y, &c, true);
            const Car* follow = neighbour(lane, c.y, &c, false);
            if (lead && lead->y - c.y - cfg_.vehicle_length < cfg_.min_gap) continue;
            if (follow && c.y - follow->y - cfg_.vehicle_length < cfg_.min_gap) continue;
            if (follow) {
                const double gap = c.y - follow->y - cfg_.vehicle_length;
                if (idm(follow->v, follow->v0, gap, follow->v - c.v) < -cfg_.safe_decel) continue;
            }
            const double gain = accel_in_lane(c, lane, t) - current;
            if (gain > best_gain) {
                best_gain = gain;
                best_lane = lane;
            }
        }
        if (best_lane != 0 && rng_.uniform() < cfg_.change_probability) {
            c.target = best_lane;
            c.change_start = t;
        }
    }

    void spawn(double t)
    {
        for (int lane = 1; lane <= cfg_.lanes; ++lane) {
            const Car* last = nullptr;
            for (const auto& o : cars_)
                if (occupies(o, lane) && (!last || o.y < last->y)) last = &o;
            const double need = cfg_.spawn_gap_ft * (1.0 + rng_.uniform(0.0, 0.6));
            if (last && last->y < need) continue;
            Car c;
            c.id = next_id_++;
            c.lane = c.target = lane;
            c.v0 = std::max(25.0, cfg_.desired_speed_mean + cfg_.desired_speed_spread * rng_.normal());
            c.v = last ? std::min(last->v, c.v0) : 0.6 * c.v0;
            c.x = center(lane);
            c.next_decision = t + rng_.uniform(0.0, cfg_.decision_interval_s);
            cars_.push_back(c);
        }
    }

    void step(double t)
    {
        for (auto& c : cars_) consider_lane_change(c, t);

        std::vector<double> acc(cars_.size());
        for (std::size_t i = 0; i < cars_.size(); ++i) {
            const Car& c = cars_[i];
            double a = accel_in_lane(c, c.lane, t);
            if (c.target != c.lane) a = std::min(a, accel_in_lane(c, c.target, t));
            acc[i] = std::max(a, -3.0 * cfg_.comfort_decel);
        }
        for (std::size_t i = 0; i < cars_.size(); ++i) {
            Car& c = cars_[i];
            const double v_new = std::max(0.0, c.v + acc[i] * kDt);
            c.y += 0.5 * (c.v + v_new) * kDt;
            c.v = v_new;

            c.noise = 0.97 * c.noise + cfg_.lateral_noise_ft * rng_.normal() * 0.25;
            c.noise = std::clamp(c.noise, -1.0, 1.0);
            if (c.change_start >= 0.0) {
                const double tau = (t - c.change_start) / cfg_.change_duration_s;
                if (tau >= 1.0) {
                    c.lane = c.target;
                    c.change_start = -1.0;
                    c.cooldown_until = t + cfg_.change_cooldown_s;
                    c.x = center(c.lane) + c.noise;
                } else {
                    const double s = 0.5 * (1.0 - std::cos(std::numbers::pi * tau));
                    c.x = center(c.lane) + (center(c.target) - center(c.lane)) * s + c.noise;
                }
            } else {
                c.x = center(c.lane) + c.noise;
            }
        }
        // Keep followers from overlapping their leaders after integration.
        for (auto& c : cars_) {
            const Car* lead = neighbour(c.lane, c.y, &c, true);
            if (lead && lead->y - c.y < cfg_.vehicle_length * 0.6) c.v = std::min(c.v, lead->v);
        }
        std::erase_if(cars_, [&](const Car& c) { return c.y > cfg_.road_length_ft; });
        spawn(t);
    }

    TrafficConfig cfg_;
    Rng rng_;
    std::vector<double> lane_phase_;
    std::vector<Car> cars_;
    VehicleId next_id_ = 1;
};

}  // namespace

std::vector<RawRecord> simulate_traffic(const TrafficConfig& cfg)
{
    if (cfg.lanes < 1 || cfg.duration_s <= 0.0 || cfg.road_length_ft <= 0.0) {
        throw config_error("simulate_traffic: lanes, duration and road length must be positive");
    }
    return Simulation(cfg).run();
}

}  // namespace tplab
