#pragma once

// Lane-change scene extraction: ego selection, neighbour assignment, and the
// slicing of ego-centred history/future windows into scene pieces.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tplab/common.hpp"
#include "tplab/ngsim.hpp"

namespace tplab {

inline constexpr std::size_t kHistoryPoints = 16;  // 3 s at 0.2 s
inline constexpr std::size_t kFuturePoints = 10;   // 5 s at 0.5 s
inline constexpr FrameId kHistoryStride = 2;
inline constexpr FrameId kFutureStride = 5;
inline constexpr FrameId kHistoryFrames = kHistoryStride * (kHistoryPoints - 1);  // 30
inline constexpr FrameId kFutureFrames = kFutureStride * kFuturePoints;           // 50
inline constexpr std::size_t kGridSlots = 9;
inline constexpr std::size_t kEgoSlot = 5;

struct LaneChangeEvent {
    VehicleId vehicle_id = 0;
    FrameId change_frame = 0;
    int from_lane = 0;
    int to_lane = 0;

    friend bool operator==(const LaneChangeEvent&, const LaneChangeEvent&) = default;
};

/// Slots 1..9 laid out as a 3x3 grid (row = (k-1)/3, col = (k-1)%3):
///   row 0 = left lane, row 1 = ego lane, row 2 = right lane;
///   col 0 = follower, col 1 = nearest/ego, col 2 = preceder.
struct NeighborGrid {
    std::array<VehicleId, kGridSlots> ids{};

    VehicleId slot(std::size_t k) const { return ids.at(k - 1); }
    static constexpr std::size_t row_of(std::size_t k) { return (k - 1) / 3; }
    static constexpr std::size_t col_of(std::size_t k) { return (k - 1) % 3; }

    friend bool operator==(const NeighborGrid&, const NeighborGrid&) = default;
};

enum class PieceLabel : std::uint8_t {
    LaneChanging = 0,  // t before the lane-change frame
    LaneKeeping = 1,   // t at or after the lane-change frame
};

using History = std::array<Point2, kHistoryPoints>;
using Future = std::array<Point2, kFuturePoints>;

struct ScenePiece {
    VehicleId ego_id = 0;
    FrameId t_frame = 0;
    FrameId change_frame = 0;
    NeighborGrid grid;
    std::array<History, kGridSlots> histories{};  // slot k at index k-1, oldest first
    Future future{};
    Point2 origin;  // ego's absolute position at t, meters
    PieceLabel label = PieceLabel::LaneKeeping;

    const History& ego_history() const { return histories[kEgoSlot - 1]; }
    friend bool operator==(const ScenePiece&, const ScenePiece&) = default;
};

struct DatasetSplit {
    std::vector<std::size_t> train;  // indices into the piece list
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

// ---- operations -------------------------------------------------------------

std::vector<LaneChangeEvent> detect_lane_changes(const VehicleTrack& track);

/// Selection thresholds, in feet as published.
struct EgoCriteria {
    int min_lane = 1;
    int max_lane = 4;
    double min_span_ft = 1000.0;
    double change_y_min_ft = 300.0;
    double change_y_max_ft = 1900.0;
    FrameId divergence_half_window = 6 * kFrameRateHz;
    double min_divergence_ft = 10.0;
};

struct EgoSelection {
    VehicleId vehicle_id = 0;
    LaneChangeEvent event;
    bool divergence_window_clipped = false;
};

/// Vehicles passing every ego criterion, in id order.
std::vector<EgoSelection> select_ego_vehicles(const TrackSet& tracks, const EgoCriteria& criteria = {});

/// Fills the 9-slot grid around ego at frame t, or nullopt if a slot is empty.
/// Throws a contract error if the ego is absent from the frame.
std::optional<NeighborGrid> assign_neighbors(const FrameIndex& index, VehicleId ego, FrameId t);

/// Shifts world-frame trajectories so that the ego's position at t becomes the
/// origin. `world_histories[k-1]` is slot k; the last ego history point is t.
ScenePiece center_piece(const std::array<History, kGridSlots>& world_histories, const Future& world_future);

struct ExtractionStats {
    std::size_t egos = 0;
    std::size_t candidates = 0;
    std::size_t pieces = 0;
    std::size_t lane_changing = 0;
    std::size_t lane_keeping = 0;
    std::size_t rejected_grid = 0;
    std::size_t rejected_future = 0;
    std::size_t rejected_history = 0;
    std::vector<VehicleId> clipped_divergence;
};

inline constexpr FrameId kWindowBefore = 130;  // candidates [c - 130, c + 129]
inline constexpr FrameId kWindowAfter = 129;

std::vector<ScenePiece> extract_pieces(const TrackSet& tracks, std::span<const EgoSelection> egos,
                                       ExtractionStats* stats = nullptr);

/// Keeps round(fraction * n) pieces chosen under seed, in their original order.
std::vector<ScenePiece> subsample_pieces(std::vector<ScenePiece> pieces, double fraction, std::uint64_t seed);

/// Deterministic shuffle under seed; floor(70%) to train.
DatasetSplit split_dataset(std::size_t piece_count, std::uint64_t seed);

// ---- serialization ------------------------------------------------------------

struct PieceFileHeader {
    std::uint64_t seed = 0;
    std::uint64_t source_checksum = 0;
    double subsample = 1.0;
    std::string dataset_id;  // hash over source checksum, subsample fraction and seed
    ExtractionStats stats;
};

struct PieceFile {
    PieceFileHeader header;
    std::vector<ScenePiece> pieces;
    DatasetSplit split;

    std::vector<ScenePiece> train_pieces() const;
    std::vector<ScenePiece> test_pieces() const;
};

std::string make_dataset_id(std::uint64_t source_checksum, std::uint64_t seed, double subsample = 1.0);

/// Magic "TPLAB-PIECES-v1".
void save_pieces(const std::filesystem::path& path, const PieceFile& file);
PieceFile load_pieces(const std::filesystem::path& path);

/// Human-readable statistics report.
std::string format_stats(const PieceFile& file);

}  // namespace tplab
