#pragma once

// NGSIM-style trajectory ingestion.
//
// Raw files are delimiter-separated text (comma or whitespace) with one record
// per line and an optional header. Positions arrive in feet and are converted
// to meters exactly once, here.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tplab {

using VehicleId = std::int64_t;
using FrameId = std::int64_t;

struct RawRecord {
    VehicleId vehicle_id = 0;
    FrameId frame_id = 0;
    double local_x_ft = 0.0;  // lateral
    double local_y_ft = 0.0;  // longitudinal
    int lane_id = 1;
};

struct TrackPoint {
    FrameId frame = 0;
    double x_m = 0.0;
    double y_m = 0.0;
    int lane = 1;
    double x_ft = 0.0;  // raw value, kept for threshold tests stated in feet
    double y_ft = 0.0;
};

struct VehicleTrack {
    VehicleId vehicle_id = 0;
    std::vector<TrackPoint> points;  // consecutive frames

    FrameId first_frame() const { return points.front().frame; }
    FrameId last_frame() const { return points.back().frame; }
    bool contains(FrameId f) const { return !points.empty() && f >= first_frame() && f <= last_frame(); }
    const TrackPoint& at(FrameId f) const { return points[static_cast<std::size_t>(f - first_frame())]; }
};

struct FrameEntry {
    VehicleId vehicle_id = 0;
    int lane = 1;
    double x_m = 0.0;
    double y_m = 0.0;

    friend bool operator==(const FrameEntry&, const FrameEntry&) = default;
};

/// frame -> vehicles present, sorted by vehicle id.
using FrameIndex = std::map<FrameId, std::vector<FrameEntry>>;

struct IngestIssue {
    VehicleId vehicle_id = 0;
    std::string reason;           // "gap" or "duplicate"
    std::vector<FrameId> frames;  // missing or duplicated frames
};

struct IngestReport {
    std::size_t rows = 0;
    std::size_t accepted_rows = 0;
    std::vector<IngestIssue> rejected;
};

/// Immutable after construction.
class TrackSet {
public:
    TrackSet() = default;
    explicit TrackSet(std::map<VehicleId, VehicleTrack> tracks);

    const std::map<VehicleId, VehicleTrack>& tracks() const { return tracks_; }
    const FrameIndex& frame_index() const { return index_; }
    const VehicleTrack* find(VehicleId id) const;
    std::size_t size() const { return tracks_.size(); }
    bool empty() const { return tracks_.empty(); }

    friend bool operator==(const TrackSet& a, const TrackSet& b);

private:
    std::map<VehicleId, VehicleTrack> tracks_;
    FrameIndex index_;
};

/// Logical field -> zero-based column. Fields not mapped are resolved from the
/// header names (Vehicle_ID, Frame_ID, Local_X, Local_Y, Lane_ID).
struct ColumnMap {
    std::optional<std::size_t> vehicle_id;
    std::optional<std::size_t> frame_id;
    std::optional<std::size_t> local_x;
    std::optional<std::size_t> local_y;
    std::optional<std::size_t> lane_id;

    /// Column layout of the public headerless US-101 / I-80 text files.
    static ColumnMap ngsim_text();
};

struct ParseResult {
    TrackSet tracks;
    IngestReport report;
};

/// Groups records per vehicle, converts feet to meters and drops vehicles
/// whose frames are not consecutive.
ParseResult build_tracks(std::vector<RawRecord> records);

ParseResult parse_trajectory_file(const std::filesystem::path& path, const ColumnMap& columns = {});

FrameIndex build_frame_index(const std::map<VehicleId, VehicleTrack>& tracks);

/// Binary snapshot with magic "TPLAB-TRACKS-v1".
void save_tracks(const std::filesystem::path& path, const TrackSet& tracks, const IngestReport& report,
                 std::uint64_t source_checksum);

struct TrackSnapshot {
    TrackSet tracks;
    IngestReport report;
    std::uint64_t source_checksum = 0;
};

TrackSnapshot load_tracks(const std::filesystem::path& path);

/// Writes records in the headered CSV layout.
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<RawRecord>& records);

}  // namespace tplab
