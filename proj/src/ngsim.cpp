#include "tplab/ngsim.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include "tplab/binio.hpp"
#include "tplab/common.hpp"

namespace tplab {

namespace {

constexpr std::string_view kTracksMagic = "TPLAB-TRACKS-v1";

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    const bool comma = line.find(',') != std::string_view::npos;
    std::size_t i = 0;
    while (i <= line.size()) {
        if (comma) {
            std::size_t j = line.find(',', i);
            if (j == std::string_view::npos) j = line.size();
            std::string_view f = line.substr(i, j - i);
            while (!f.empty() && std::isspace(static_cast<unsigned char>(f.front()))) f.remove_prefix(1);
            while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back()))) f.remove_suffix(1);
            out.push_back(f);
            i = j + 1;
        } else {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            if (i >= line.size()) break;
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            out.push_back(line.substr(i, j - i));
            i = j;
        }
    }
    return out;
}

bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string lower(std::string_view s)
{
    std::string r(s);
    for (auto& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return r;
}

bool is_blank(std::string_view line)
{
    return std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

ColumnMap ColumnMap::ngsim_text()
{
    ColumnMap m;
    m.vehicle_id = 0;
    m.frame_id = 1;
    m.local_x = 4;
    m.local_y = 5;
    m.lane_id = 13;
    return m;
}

TrackSet::TrackSet(std::map<VehicleId, VehicleTrack> tracks)
  : tracks_(std::move(tracks)), index_(build_frame_index(tracks_))
{ }

const VehicleTrack* TrackSet::find(VehicleId id) const
{
    auto it = tracks_.find(id);
    return it == tracks_.end() ? nullptr : &it->second;
}

bool operator==(const TrackSet& a, const TrackSet& b)
{
    if (a.tracks_.size() != b.tracks_.size()) return false;
    for (auto ia = a.tracks_.begin(), ib = b.tracks_.begin(); ia != a.tracks_.end(); ++ia, ++ib) {
        if (ia->first != ib->first || ia->second.points.size() != ib->second.points.size()) return false;
        for (std::size_t k = 0; k < ia->second.points.size(); ++k) {
            const auto& p = ia->second.points[k];
            const auto& q = ib->second.points[k];
            if (p.frame != q.frame || p.lane != q.lane || p.x_m != q.x_m || p.y_m != q.y_m ||
                p.x_ft != q.x_ft || p.y_ft != q.y_ft)
                return false;
        }
    }
    return a.index_ == b.index_;
}

FrameIndex build_frame_index(const std::map<VehicleId, VehicleTrack>& tracks)
{
    FrameIndex index;
    // Tracks iterate in id order, so each bucket comes out sorted by id.
    for (const auto& [id, track] : tracks) {
        for (const auto& p : track.points) index[p.frame].push_back({id, p.lane, p.x_m, p.y_m});
    }
    return index;
}

ParseResult build_tracks(std::vector<RawRecord> records)
{
    ParseResult result;
    result.report.rows = records.size();
    std::stable_sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
        return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id : a.frame_id < b.frame_id;
    });

    std::map<VehicleId, VehicleTrack> tracks;
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t j = i;
        while (j < records.size() && records[j].vehicle_id == records[i].vehicle_id) ++j;
        const VehicleId id = records[i].vehicle_id;

        IngestIssue gaps{id, "gap", {}};
        IngestIssue dups{id, "duplicate", {}};
        for (std::size_t k = i + 1; k < j; ++k) {
            const FrameId prev = records[k - 1].frame_id, cur = records[k].frame_id;
            if (cur == prev) {
                if (dups.frames.empty() || dups.frames.back() != cur) dups.frames.push_back(cur);
            }
            for (FrameId f = prev + 1; f < cur; ++f) gaps.frames.push_back(f);
        }
        if (!dups.frames.empty()) {
            result.report.rejected.push_back(std::move(dups));
        } else if (!gaps.frames.empty()) {
            result.report.rejected.push_back(std::move(gaps));
        } else {
            VehicleTrack track{id, {}};
            track.points.reserve(j - i);
            for (std::size_t k = i; k < j; ++k) {
                const auto& r = records[k];
                track.points.push_back({r.frame_id, r.local_x_ft * kFeetToMeters, r.local_y_ft * kFeetToMeters,
                                        r.lane_id, r.local_x_ft, r.local_y_ft});
            }
            result.report.accepted_rows += j - i;
            tracks.emplace(id, std::move(track));
        }
        i = j;
    }
    result.tracks = TrackSet(std::move(tracks));
    return result;
}

ParseResult parse_trajectory_file(const std::filesystem::path& path, const ColumnMap& columns)
{
    std::ifstream in(path);
    if (!in) throw data_error(path.string() + ": cannot open trajectory file");

    std::vector<RawRecord> records;
    ColumnMap cols = columns;
    bool resolved = false;
    std::string line;
    std::size_t line_no = 0;

    auto resolve = [&](const std::vector<std::string_view>* header) {
        const std::pair<std::optional<std::size_t>*, const char*> fields[] = {
            {&cols.vehicle_id, "Vehicle_ID"}, {&cols.frame_id, "Frame_ID"}, {&cols.local_x, "Local_X"},
            {&cols.local_y, "Local_Y"},       {&cols.lane_id, "Lane_ID"},
        };
        for (auto& [slot, name] : fields) {
            if (slot->has_value()) continue;
            if (header) {
                for (std::size_t c = 0; c < header->size(); ++c) {
                    if (lower((*header)[c]) == lower(name)) *slot = c;
                }
            }
            if (!slot->has_value()) {
                throw config_error(path.string() + ": cannot resolve column '" + name +
                                   "' (no matching header and no column mapping)");
            }
        }
        resolved = true;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) continue;
        const auto fields = split_fields(line);
        if (!resolved) {
            double probe;
            if (!parse_double(fields.front(), probe)) {
                resolve(&fields);
                continue;
            }
            resolve(nullptr);
        }
        const std::size_t need =
            1 + std::max({*cols.vehicle_id, *cols.frame_id, *cols.local_x, *cols.local_y, *cols.lane_id});
        if (fields.size() < need) {
            throw data_error(path.string() + ", line " + std::to_string(line_no) + ": expected at least " +
                             std::to_string(need) + " fields, found " + std::to_string(fields.size()));
        }
        double v[5];
        const std::size_t idx[5] = {*cols.vehicle_id, *cols.frame_id, *cols.local_x, *cols.local_y, *cols.lane_id};
        for (int k = 0; k < 5; ++k) {
            if (!parse_double(fields[idx[k]], v[k])) {
                throw data_error(path.string() + ", line " + std::to_string(line_no) + ": unparseable numeric cell '" +
                                 std::string(fields[idx[k]]) + "' in column " + std::to_string(idx[k]));
            }
        }
        for (int k : {0, 1, 4}) {
            if (v[k] != std::floor(v[k])) {
                throw data_error(path.string() + ", line " + std::to_string(line_no) + ": expected an integer in column " +
                                 std::to_string(idx[k]));
            }
        }
        if (v[1] < 0 || v[4] < 1) {
            throw data_error(path.string() + ":" + std::to_string(line_no) +
                             ": frame id must be >= 0 and lane id >= 1");
        }
        records.push_back({static_cast<VehicleId>(v[0]), static_cast<FrameId>(v[1]), v[2], v[3],
                           static_cast<int>(v[4])});
    }
    if (records.empty()) throw data_error(path.string() + ": empty input (no data rows)");
    return build_tracks(std::move(records));
}

void save_tracks(const std::filesystem::path& path, const TrackSet& tracks, const IngestReport& report,
                 std::uint64_t source_checksum)
{
    nlohmann::json rejected = nlohmann::json::array();
    for (const auto& r : report.rejected) {
        rejected.push_back({{"vehicle_id", r.vehicle_id}, {"reason", r.reason}, {"frames", r.frames}});
    }
    std::vector<std::int64_t> counts;
    for (const auto& [id, t] : tracks.tracks()) {
        counts.push_back(id);
        counts.push_back(static_cast<std::int64_t>(t.points.size()));
    }
    nlohmann::json header = {
        {"source_checksum", hex64(source_checksum)},
        {"vehicles", tracks.size()},
        {"rows", report.rows},
        {"accepted_rows", report.accepted_rows},
        {"rejected", rejected},
    };
    auto out = binio::open_out(path);
    binio::write_header(out, kTracksMagic, header);
    binio::write_i64(out, counts);
    for (const auto& [id, t] : tracks.tracks()) {
        std::vector<std::int64_t> ints;
        std::vector<double> reals;
        for (const auto& p : t.points) {
            ints.push_back(p.frame);
            ints.push_back(p.lane);
            reals.insert(reals.end(), {p.x_m, p.y_m, p.x_ft, p.y_ft});
        }
        binio::write_i64(out, ints);
        binio::write_doubles(out, reals);
    }
    if (!out) throw data_error(path.string() + ": write failed");
}

TrackSnapshot load_tracks(const std::filesystem::path& path)
{
    auto in = binio::open_in(path);
    const auto header = binio::read_header(in, kTracksMagic, path);
    TrackSnapshot snap;
    try {
        snap.source_checksum = std::stoull(header.at("source_checksum").get<std::string>(), nullptr, 16);
        snap.report.rows = header.at("rows").get<std::size_t>();
        snap.report.accepted_rows = header.at("accepted_rows").get<std::size_t>();
        for (const auto& r : header.at("rejected")) {
            snap.report.rejected.push_back({r.at("vehicle_id").get<VehicleId>(), r.at("reason").get<std::string>(),
                                            r.at("frames").get<std::vector<FrameId>>()});
        }
        const auto n = header.at("vehicles").get<std::size_t>();
        std::vector<std::int64_t> counts(2 * n);
        binio::read_i64(in, counts, path);
        std::map<VehicleId, VehicleTrack> tracks;
        for (std::size_t v = 0; v < n; ++v) {
            const auto len = static_cast<std::size_t>(counts[2 * v + 1]);
            std::vector<std::int64_t> ints(2 * len);
            std::vector<double> reals(4 * len);
            binio::read_i64(in, ints, path);
            binio::read_doubles(in, reals, path);
            VehicleTrack t{counts[2 * v], {}};
            for (std::size_t k = 0; k < len; ++k) {
                t.points.push_back({ints[2 * k], reals[4 * k], reals[4 * k + 1], static_cast<int>(ints[2 * k + 1]),
                                    reals[4 * k + 2], reals[4 * k + 3]});
            }
            tracks.emplace(t.vehicle_id, std::move(t));
        }
        binio::expect_eof(in, path);
        snap.tracks = TrackSet(std::move(tracks));
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path.string() + ": corrupt track snapshot header: " + e.what());
    }
    return snap;
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<RawRecord>& records)
{
    std::ofstream out(path);
    if (!out) throw data_error(path.string() + ": cannot open for writing");
    out << "Vehicle_ID,Frame_ID,Local_X,Local_Y,Lane_ID\n";
    char buf[160];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%lld,%lld,%.3f,%.3f,%d\n", static_cast<long long>(r.vehicle_id),
                      static_cast<long long>(r.frame_id), r.local_x_ft, r.local_y_ft, r.lane_id);
        out << buf;
    }
    if (!out) throw data_error(path.string() + ": write failed");
}

}  // namespace tplab
