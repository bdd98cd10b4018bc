#include "tplab/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tplab/binio.hpp"
#include "tplab/rng.hpp"

namespace tplab {

namespace {

constexpr std::string_view kPiecesMagic = "TPLAB-PIECES-v1";

const FrameEntry* find_entry(const std::vector<FrameEntry>& bucket, VehicleId id)
{
    auto it = std::lower_bound(bucket.begin(), bucket.end(), id,
                               [](const FrameEntry& e, VehicleId v) { return e.vehicle_id < v; });
    return (it != bucket.end() && it->vehicle_id == id) ? &*it : nullptr;
}

// Nearest vehicle in `lane` strictly ahead of (sign > 0) or behind (sign < 0)
// the reference longitudinal position. Ties go to the smaller id.
std::optional<VehicleId> nearest_directional(const std::vector<FrameEntry>& bucket, int lane, double ref_y,
                                             VehicleId exclude, int sign)
{
    std::optional<VehicleId> best;
    double best_gap = 0.0;
    for (const auto& e : bucket) {
        if (e.lane != lane || e.vehicle_id == exclude) continue;
        const double gap = sign * (e.y_m - ref_y);
        if (gap <= 0.0) continue;
        if (!best || gap < best_gap || (gap == best_gap && e.vehicle_id < *best)) {
            best = e.vehicle_id;
            best_gap = gap;
        }
    }
    return best;
}

std::optional<VehicleId> nearest_in_lane(const std::vector<FrameEntry>& bucket, int lane, double ref_y)
{
    std::optional<VehicleId> best;
    double best_gap = 0.0;
    for (const auto& e : bucket) {
        if (e.lane != lane) continue;
        const double gap = std::abs(e.y_m - ref_y);
        if (!best || gap < best_gap || (gap == best_gap && e.vehicle_id < *best)) {
            best = e.vehicle_id;
            best_gap = gap;
        }
    }
    return best;
}

History sample_history(const VehicleTrack& track, FrameId t)
{
    History h;
    for (std::size_t k = 0; k < kHistoryPoints; ++k) {
        const auto& p = track.at(t - kHistoryFrames + static_cast<FrameId>(k) * kHistoryStride);
        h[k] = {p.x_m, p.y_m};
    }
    return h;
}

Future sample_future(const VehicleTrack& track, FrameId t)
{
    Future f;
    for (std::size_t k = 0; k < kFuturePoints; ++k) {
        const auto& p = track.at(t + static_cast<FrameId>(k + 1) * kFutureStride);
        f[k] = {p.x_m, p.y_m};
    }
    return f;
}

}  // namespace

std::vector<LaneChangeEvent> detect_lane_changes(const VehicleTrack& track)
{
    std::vector<LaneChangeEvent> events;
    for (std::size_t k = 1; k < track.points.size(); ++k) {
        const auto& prev = track.points[k - 1];
        const auto& cur = track.points[k];
        if (cur.lane != prev.lane) events.push_back({track.vehicle_id, cur.frame, prev.lane, cur.lane});
    }
    return events;
}

std::vector<EgoSelection> select_ego_vehicles(const TrackSet& tracks, const EgoCriteria& c)
{
    std::vector<EgoSelection> selected;
    for (const auto& [id, track] : tracks.tracks()) {
        if (track.points.empty()) continue;
        const bool lanes_ok = std::all_of(track.points.begin(), track.points.end(), [&](const TrackPoint& p) {
            return p.lane >= c.min_lane && p.lane <= c.max_lane;
        });
        if (!lanes_ok) continue;

        const auto events = detect_lane_changes(track);
        if (events.size() != 1) continue;
        const auto& ev = events.front();

        auto [ymin, ymax] = std::minmax_element(track.points.begin(), track.points.end(),
                                                [](const TrackPoint& a, const TrackPoint& b) { return a.y_ft < b.y_ft; });
        if (!(ymax->y_ft - ymin->y_ft > c.min_span_ft)) continue;

        const double y_change = track.at(ev.change_frame).y_ft;
        if (y_change < c.change_y_min_ft || y_change > c.change_y_max_ft) continue;

        const FrameId lo_want = ev.change_frame - c.divergence_half_window;
        const FrameId hi_want = ev.change_frame + c.divergence_half_window;
        const FrameId lo = std::max(lo_want, track.first_frame());
        const FrameId hi = std::min(hi_want, track.last_frame());
        double xmin = track.at(lo).x_ft, xmax = xmin;
        for (FrameId f = lo; f <= hi; ++f) {
            xmin = std::min(xmin, track.at(f).x_ft);
            xmax = std::max(xmax, track.at(f).x_ft);
        }
        if (!(xmax - xmin > c.min_divergence_ft)) continue;

        selected.push_back({id, ev, lo != lo_want || hi != hi_want});
    }
    return selected;
}

std::optional<NeighborGrid> assign_neighbors(const FrameIndex& index, VehicleId ego, FrameId t)
{
    auto it = index.find(t);
    const FrameEntry* self = it == index.end() ? nullptr : find_entry(it->second, ego);
    if (!self) {
        throw contract_error("assign_neighbors: vehicle " + std::to_string(ego) + " not present at frame " +
                             std::to_string(t));
    }
    const auto& bucket = it->second;
    NeighborGrid grid;
    grid.ids[kEgoSlot - 1] = ego;

    auto fill = [&](std::size_t slot, std::optional<VehicleId> v) {
        if (!v) return false;
        grid.ids[slot - 1] = *v;
        return true;
    };
    if (!fill(6, nearest_directional(bucket, self->lane, self->y_m, ego, +1))) return std::nullopt;
    if (!fill(4, nearest_directional(bucket, self->lane, self->y_m, ego, -1))) return std::nullopt;

    // Row 0 holds lane - 1 (left), row 2 holds lane + 1 (right).
    for (const auto& [lane, first_slot] : {std::pair{self->lane - 1, std::size_t{1}}, std::pair{self->lane + 1, std::size_t{7}}}) {
        const auto nearest = nearest_in_lane(bucket, lane, self->y_m);
        if (!fill(first_slot + 1, nearest)) return std::nullopt;
        const FrameEntry* n = find_entry(bucket, *nearest);
        if (!fill(first_slot, nearest_directional(bucket, lane, n->y_m, *nearest, -1))) return std::nullopt;
        if (!fill(first_slot + 2, nearest_directional(bucket, lane, n->y_m, *nearest, +1))) return std::nullopt;
    }
    return grid;
}

ScenePiece center_piece(const std::array<History, kGridSlots>& world_histories, const Future& world_future)
{
    ScenePiece piece;
    piece.origin = world_histories[kEgoSlot - 1].back();
    const Point2 o = piece.origin;
    for (std::size_t s = 0; s < kGridSlots; ++s) {
        for (std::size_t k = 0; k < kHistoryPoints; ++k) {
            piece.histories[s][k] = {world_histories[s][k].x - o.x, world_histories[s][k].y - o.y};
        }
    }
    for (std::size_t k = 0; k < kFuturePoints; ++k) {
        piece.future[k] = {world_future[k].x - o.x, world_future[k].y - o.y};
    }
    return piece;
}

std::vector<ScenePiece> extract_pieces(const TrackSet& tracks, std::span<const EgoSelection> egos,
                                       ExtractionStats* stats)
{
    ExtractionStats local;
    ExtractionStats& st = stats ? *stats : local;
    std::vector<ScenePiece> pieces;
    const auto& index = tracks.frame_index();

    for (const auto& ego : egos) {
        ++st.egos;
        if (ego.divergence_window_clipped) st.clipped_divergence.push_back(ego.vehicle_id);
        const VehicleTrack* track = tracks.find(ego.vehicle_id);
        if (!track) throw contract_error("extract_pieces: unknown ego " + std::to_string(ego.vehicle_id));
        const FrameId c = ego.event.change_frame;

        for (FrameId t = c - kWindowBefore; t <= c + kWindowAfter; ++t) {
            ++st.candidates;
            if (!track->contains(t + kFutureFrames)) {
                ++st.rejected_future;
                continue;
            }
            if (!track->contains(t - kHistoryFrames)) {
                ++st.rejected_history;
                continue;
            }
            const auto grid = assign_neighbors(index, ego.vehicle_id, t);
            if (!grid) {
                ++st.rejected_grid;
                continue;
            }
            std::array<const VehicleTrack*, kGridSlots> members{};
            bool complete = true;
            for (std::size_t s = 1; s <= kGridSlots; ++s) {
                members[s - 1] = tracks.find(grid->slot(s));
                complete = complete && members[s - 1]->contains(t - kHistoryFrames);
            }
            if (!complete) {
                ++st.rejected_history;
                continue;
            }

            std::array<History, kGridSlots> world;
            for (std::size_t s = 0; s < kGridSlots; ++s) world[s] = sample_history(*members[s], t);
            ScenePiece piece = center_piece(world, sample_future(*track, t));
            piece.ego_id = ego.vehicle_id;
            piece.t_frame = t;
            piece.change_frame = c;
            piece.grid = *grid;
            piece.label = t < c ? PieceLabel::LaneChanging : PieceLabel::LaneKeeping;
            (piece.label == PieceLabel::LaneChanging ? st.lane_changing : st.lane_keeping) += 1;
            pieces.push_back(piece);
        }
    }
    st.pieces += pieces.size();
    return pieces;
}

std::vector<ScenePiece> subsample_pieces(std::vector<ScenePiece> pieces, double fraction, std::uint64_t seed)
{
    if (!(fraction > 0.0 && fraction <= 1.0)) throw config_error("subsample fraction must lie in (0, 1]");
    const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pieces.size())));
    std::vector<std::size_t> order(pieces.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 0x5AB5));
    rng.shuffle(std::span<std::size_t>(order));
    order.resize(keep);
    std::sort(order.begin(), order.end());
    std::vector<ScenePiece> out;
    out.reserve(keep);
    for (auto i : order) out.push_back(std::move(pieces[i]));
    return out;
}

DatasetSplit split_dataset(std::size_t piece_count, std::uint64_t seed)
{
    if (piece_count == 0) throw contract_error("split_dataset: no pieces to split");
    std::vector<std::size_t> order(piece_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 0x5911));
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t n_train = piece_count * 7 / 10;
    DatasetSplit split;
    split.seed = seed;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return split;
}

// ---- serialization -------------------------------------------------------------

std::vector<ScenePiece> PieceFile::train_pieces() const
{
    std::vector<ScenePiece> out;
    out.reserve(split.train.size());
    for (auto i : split.train) out.push_back(pieces.at(i));
    return out;
}

std::vector<ScenePiece> PieceFile::test_pieces() const
{
    std::vector<ScenePiece> out;
    out.reserve(split.test.size());
    for (auto i : split.test) out.push_back(pieces.at(i));
    return out;
}

std::string make_dataset_id(std::uint64_t source_checksum, std::uint64_t seed, double subsample)
{
    Fnv1a h;
    h.update(kPiecesMagic.data(), kPiecesMagic.size());
    h.update(&source_checksum, sizeof source_checksum);
    h.update(&seed, sizeof seed);
    h.update(&subsample, sizeof subsample);
    return hex64(h.digest());
}

namespace {

nlohmann::json stats_json(const ExtractionStats& s)
{
    return {{"egos", s.egos},
            {"candidates", s.candidates},
            {"pieces", s.pieces},
            {"lane_changing", s.lane_changing},
            {"lane_keeping", s.lane_keeping},
            {"rejected_grid", s.rejected_grid},
            {"rejected_future", s.rejected_future},
            {"rejected_history", s.rejected_history},
            {"clipped_divergence", s.clipped_divergence}};
}

ExtractionStats stats_from_json(const nlohmann::json& j)
{
    ExtractionStats s;
    s.egos = j.at("egos");
    s.candidates = j.at("candidates");
    s.pieces = j.at("pieces");
    s.lane_changing = j.at("lane_changing");
    s.lane_keeping = j.at("lane_keeping");
    s.rejected_grid = j.at("rejected_grid");
    s.rejected_future = j.at("rejected_future");
    s.rejected_history = j.at("rejected_history");
    s.clipped_divergence = j.at("clipped_divergence").get<std::vector<VehicleId>>();
    return s;
}

constexpr std::size_t kPieceInts = 4 + kGridSlots;
constexpr std::size_t kPieceReals = 2 + 2 * kGridSlots * kHistoryPoints + 2 * kFuturePoints;

}  // namespace

void save_pieces(const std::filesystem::path& path, const PieceFile& file)
{
    const auto& h = file.header;
    nlohmann::json header = {
        {"schema", kPiecesMagic},
        {"seed", h.seed},
        {"source_checksum", hex64(h.source_checksum)},
        {"subsample", h.subsample},
        {"dataset_id", h.dataset_id},
        {"pieces", file.pieces.size()},
        {"train", file.split.train.size()},
        {"test", file.split.test.size()},
        {"stats", stats_json(h.stats)},
    };
    auto out = binio::open_out(path);
    binio::write_header(out, kPiecesMagic, header);
    std::vector<std::int64_t> ints(kPieceInts);
    std::vector<double> reals;
    reals.reserve(kPieceReals);
    for (const auto& p : file.pieces) {
        ints[0] = p.ego_id;
        ints[1] = p.t_frame;
        ints[2] = p.change_frame;
        ints[3] = static_cast<std::int64_t>(p.label);
        std::copy(p.grid.ids.begin(), p.grid.ids.end(), ints.begin() + 4);
        reals.clear();
        reals.push_back(p.origin.x);
        reals.push_back(p.origin.y);
        for (const auto& hist : p.histories)
            for (const auto& q : hist) reals.insert(reals.end(), {q.x, q.y});
        for (const auto& q : p.future) reals.insert(reals.end(), {q.x, q.y});
        binio::write_i64(out, ints);
        binio::write_doubles(out, reals);
    }
    std::vector<std::int64_t> idx(file.split.train.begin(), file.split.train.end());
    binio::write_i64(out, idx);
    idx.assign(file.split.test.begin(), file.split.test.end());
    binio::write_i64(out, idx);
    if (!out) throw data_error(path.string() + ": write failed");
}

PieceFile load_pieces(const std::filesystem::path& path)
{
    auto in = binio::open_in(path);
    const auto header = binio::read_header(in, kPiecesMagic, path);
    PieceFile file;
    std::size_t n = 0, n_train = 0, n_test = 0;
    try {
        file.header.seed = header.at("seed");
        file.header.source_checksum = std::stoull(header.at("source_checksum").get<std::string>(), nullptr, 16);
        file.header.subsample = header.at("subsample");
        file.header.dataset_id = header.at("dataset_id");
        file.header.stats = stats_from_json(header.at("stats"));
        n = header.at("pieces");
        n_train = header.at("train");
        n_test = header.at("test");
    } catch (const std::exception& e) {
        throw data_error(path.string() + ": corrupt pieces header: " + e.what());
    }
    if (n_train + n_test != n) throw data_error(path.string() + ": split sizes do not add up");

    std::vector<std::int64_t> ints(kPieceInts);
    std::vector<double> reals(kPieceReals);
    file.pieces.resize(n);
    for (auto& p : file.pieces) {
        binio::read_i64(in, ints, path);
        binio::read_doubles(in, reals, path);
        p.ego_id = ints[0];
        p.t_frame = ints[1];
        p.change_frame = ints[2];
        p.label = static_cast<PieceLabel>(ints[3]);
        std::copy(ints.begin() + 4, ints.end(), p.grid.ids.begin());
        std::size_t r = 0;
        p.origin = {reals[r], reals[r + 1]};
        r += 2;
        for (auto& hist : p.histories)
            for (auto& q : hist) {
                q = {reals[r], reals[r + 1]};
                r += 2;
            }
        for (auto& q : p.future) {
            q = {reals[r], reals[r + 1]};
            r += 2;
        }
    }
    std::vector<std::int64_t> idx(n_train);
    binio::read_i64(in, idx, path);
    file.split.train.assign(idx.begin(), idx.end());
    idx.resize(n_test);
    binio::read_i64(in, idx, path);
    file.split.test.assign(idx.begin(), idx.end());
    file.split.seed = file.header.seed;
    binio::expect_eof(in, path);
    for (auto i : file.split.train)
        if (i >= n) throw data_error(path.string() + ": split index out of range");
    for (auto i : file.split.test)
        if (i >= n) throw data_error(path.string() + ": split index out of range");
    return file;
}

std::string format_stats(const PieceFile& file)
{
    const auto& s = file.header.stats;
    std::ostringstream os;
    const double total = static_cast<double>(std::max<std::size_t>(1, s.pieces));
    os << "egos found            " << s.egos << '\n'
       << "candidate frames      " << s.candidates << '\n'
       << "pieces                " << s.pieces << '\n'
       << "  lane-changing       " << s.lane_changing << " (" << std::round(1000.0 * s.lane_changing / total) / 10.0
       << "%)\n"
       << "  lane-keeping        " << s.lane_keeping << " (" << std::round(1000.0 * s.lane_keeping / total) / 10.0
       << "%)\n"
       << "rejected: grid        " << s.rejected_grid << '\n'
       << "rejected: future      " << s.rejected_future << '\n'
       << "rejected: history     " << s.rejected_history << '\n'
       << "clipped +-6 s windows " << s.clipped_divergence.size() << '\n'
       << "split train/test      " << file.split.train.size() << " / " << file.split.test.size() << '\n'
       << "subsample fraction    " << file.header.subsample << '\n'
       << "seed                  " << file.header.seed << '\n'
       << "source checksum       " << hex64(file.header.source_checksum) << '\n'
       << "dataset id            " << file.header.dataset_id << '\n';
    return os.str();
}

}  // namespace tplab
