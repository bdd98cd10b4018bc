#pragma once

// Brute-force ego selection and window enumeration straight from CSV rows,
// in feet, without the library's tracks, frame index or neighbour search.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tplab::testing {

struct OracleRow {
    long long id = 0;
    long long frame = 0;
    double x = 0, y = 0;
    int lane = 0;
};

inline std::vector<OracleRow> read_csv_rows(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<OracleRow> rows;
    while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        OracleRow r;
        if (ss >> r.id >> r.frame >> r.x >> r.y >> r.lane) rows.push_back(r);
    }
    return rows;
}

struct OracleEgo {
    long long id = 0;
    long long change_frame = 0;
};

struct OraclePiece {
    long long ego = 0;
    long long t = 0;
    std::array<long long, 9> grid{};
};

class ExtractionOracle {
public:
    explicit ExtractionOracle(const std::vector<OracleRow>& rows)
    {
        std::map<long long, std::vector<OracleRow>> raw;
        for (const auto& r : rows) raw[r.id].push_back(r);
        for (auto& [id, v] : raw) {
            std::sort(v.begin(), v.end(), [](const OracleRow& a, const OracleRow& b) { return a.frame < b.frame; });
            bool contiguous = true;
            for (std::size_t k = 1; k < v.size(); ++k) contiguous = contiguous && v[k].frame == v[k - 1].frame + 1;
            if (!contiguous) continue;
            tracks_[id] = v;
            for (const auto& r : v) frames_[r.frame].push_back(r);
        }
    }

    std::vector<OracleEgo> egos() const
    {
        std::vector<OracleEgo> out;
        for (const auto& [id, v] : tracks_) {
            bool ok = true;
            for (const auto& r : v) ok = ok && r.lane >= 1 && r.lane <= 4;
            int changes = 0;
            long long c = 0;
            for (std::size_t k = 1; k < v.size(); ++k)
                if (v[k].lane != v[k - 1].lane) {
                    ++changes;
                    c = v[k].frame;
                }
            if (!ok || changes != 1) continue;
            double ymin = v[0].y, ymax = v[0].y;
            for (const auto& r : v) {
                ymin = std::min(ymin, r.y);
                ymax = std::max(ymax, r.y);
            }
            if (!(ymax - ymin > 1000.0)) continue;
            const double yc = at(id, c)->y;
            if (yc < 300.0 || yc > 1900.0) continue;
            double xmin = 1e300, xmax = -1e300;
            for (const auto& r : v)
                if (r.frame >= c - 60 && r.frame <= c + 60) {
                    xmin = std::min(xmin, r.x);
                    xmax = std::max(xmax, r.x);
                }
            if (!(xmax - xmin > 10.0)) continue;
            out.push_back({id, c});
        }
        return out;
    }

    std::optional<std::array<long long, 9>> grid(long long ego, long long t) const
    {
        const auto it = frames_.find(t);
        if (it == frames_.end()) return std::nullopt;
        const auto& rows = it->second;
        const OracleRow* self = nullptr;
        for (const auto& r : rows)
            if (r.id == ego) self = &r;
        if (!self) return std::nullopt;

        // best (distance, id) over rows passing `keep`
        auto pick = [&](auto keep, auto dist) -> std::optional<OracleRow> {
            std::optional<OracleRow> best;
            for (const auto& r : rows) {
                if (!keep(r)) continue;
                if (!best || dist(r) < dist(*best) || (dist(r) == dist(*best) && r.id < best->id)) best = r;
            }
            return best;
        };
        auto ahead = [&](const OracleRow& ref) {
            return pick([&](const OracleRow& r) { return r.lane == ref.lane && r.id != ref.id && r.y > ref.y; },
                        [&](const OracleRow& r) { return r.y - ref.y; });
        };
        auto behind = [&](const OracleRow& ref) {
            return pick([&](const OracleRow& r) { return r.lane == ref.lane && r.id != ref.id && r.y < ref.y; },
                        [&](const OracleRow& r) { return ref.y - r.y; });
        };

        std::array<long long, 9> g{};
        g[4] = ego;
        const auto pre = ahead(*self), fol = behind(*self);
        if (!pre || !fol) return std::nullopt;
        g[5] = pre->id;
        g[3] = fol->id;
        for (int side : {-1, +1}) {
            const int lane = self->lane + side;
            const auto near = pick([&](const OracleRow& r) { return r.lane == lane; },
                                   [&](const OracleRow& r) { return std::abs(r.y - self->y); });
            if (!near) return std::nullopt;
            const auto p = ahead(*near), f = behind(*near);
            if (!p || !f) return std::nullopt;
            const std::size_t base = side < 0 ? 0 : 6;
            g[base] = f->id;
            g[base + 1] = near->id;
            g[base + 2] = p->id;
        }
        return g;
    }

    std::vector<OraclePiece> pieces() const
    {
        std::vector<OraclePiece> out;
        for (const auto& e : egos()) {
            for (long long t = e.change_frame - 130; t <= e.change_frame + 129; ++t) {
                if (!at(e.id, t + 50) || !at(e.id, t - 30)) continue;
                const auto g = grid(e.id, t);
                if (!g) continue;
                bool histories = true;
                for (long long id : *g) histories = histories && at(id, t - 30) && at(id, t);
                if (histories) out.push_back({e.id, t, *g});
            }
        }
        return out;
    }

    const OracleRow* at(long long id, long long frame) const
    {
        const auto it = tracks_.find(id);
        if (it == tracks_.end() || it->second.empty()) return nullptr;
        const auto& v = it->second;
        const long long k = frame - v.front().frame;
        if (k < 0 || k >= static_cast<long long>(v.size())) return nullptr;
        return &v[static_cast<std::size_t>(k)];
    }

private:
    std::map<long long, std::vector<OracleRow>> tracks_;
    std::map<long long, std::vector<OracleRow>> frames_;
};

}  // namespace tplab::testing
