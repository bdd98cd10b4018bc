// tplab: ingest -> extract -> train -> eval -> plot.
//
// Exit codes: 0 success, 1 usage/configuration, 2 data, 3 internal invariant,
// 4 warning (empty result or interrupted run).

#include <atomic>
#include <cctype>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "tplab/binio.hpp"
#include "tplab/evaluation.hpp"
#include "tplab/model.hpp"
#include "tplab/ngsim.hpp"
#include "tplab/scene.hpp"
#include "tplab/traffic_sim.hpp"
#include "tplab/training.hpp"

namespace fs = std::filesystem;
using namespace tplab;

namespace {

constexpr int kExitWarning = 4;

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

/// Advisory lock held on `<target>.lock` for the lifetime of the object.
class FileLock {
public:
    explicit FileLock(const fs::path& target)
    {
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        path_ = target.string() + ".lock";
        fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT, 0644);
        if (fd_ < 0) throw data_error(path_ + ": cannot create lock file");
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            std::cerr << "waiting for lock " << path_ << '\n';
            if (::flock(fd_, LOCK_EX) != 0) throw data_error(path_ + ": cannot acquire lock");
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;
    ~FileLock()
    {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }

private:
    std::string path_;
    int fd_ = -1;
};

void refuse_overwrite(const fs::path& p, bool force)
{
    if (fs::exists(p) && !force) throw config_error(p.string() + " exists; pass --force to overwrite");
}

std::string hash_text(const std::string& s)
{
    Fnv1a h;
    h.update(s.data(), s.size());
    return hex64(h.digest());
}

void write_text(const fs::path& p, const std::string& text)
{
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw data_error(p.string() + ": cannot open for writing");
    out << text;
    if (!out) throw data_error(p.string() + ": write failed");
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw data_error(p.string() + ": cannot open for reading");
    std::string line;
    std::getline(in, line);
    return line;
}

struct LoadedModel {
    std::string label;
    std::optional<Model> model;  // empty for the oracle
    nlohmann::json provenance;
    fs::path source;
};

LoadedModel load_model_file(const std::string& arg)
{
    LoadedModel lm;
    if (arg == "oracle") {
        lm.label = "oracle";
        return lm;
    }
    lm.source = arg;
    const std::string magic = first_line(arg);
    if (magic == "TPLAB-CKPT-v1") {
        auto ck = load_checkpoint(arg);
        lm.provenance = ck.header.value("provenance", nlohmann::json::object());
        lm.model = std::move(ck.state.model);
    } else {
        lm.model = load_params(arg, &lm.provenance);
    }
    lm.label = std::string(variant_name(lm.model->variant()));
    return lm;
}

void disambiguate_labels(std::vector<LoadedModel>& models)
{
    std::map<std::string, int> seen;
    for (const auto& m : models) ++seen[m.label];
    for (auto& m : models)
        if (seen[m.label] > 1) m.label += " (" + m.source.filename().string() + ")";
}

Future predict_with(const LoadedModel& m, const ScenePiece& piece)
{
    return m.model ? m.model->predict_points(piece) : piece.future;
}

void check_provenance(const std::vector<LoadedModel>& models, const PieceFile& pieces, bool allow_mixed)
{
    for (const auto& m : models) {
        if (!m.model) continue;
        const std::string id = m.provenance.value("dataset_id", std::string{});
        if (id != pieces.header.dataset_id) {
            const std::string msg = m.source.string() + " was trained on dataset '" + id + "', pieces are '" +
                                    pieces.header.dataset_id + "'";
            if (!allow_mixed) throw config_error(msg + "; pass --allow-mixed to evaluate anyway");
            std::cerr << "warning: " << msg << '\n';
        }
    }
}

struct Options {
    // common
    std::uint64_t seed = 0;
    bool force = false;
    std::size_t limit = 0;
    int epochs = 20;
    std::string variant = "CNN-LSTM";

    // ingest
    std::string raw;
    std::string cache = "cache/tracks.bin";
    std::string layout = "csv";

    // extract
    std::string pieces = "cache/pieces.bin";
    double subsample = 1.0;

    // train
    std::size_t batch_size = 8;
    double lr = 0.001;
    std::string checkpoints;
    std::string params_out;
    bool resume = false;
    bool ego_fc = false;

    // eval / plot
    std::vector<std::string> models;
    std::string out_dir = "reports";
    bool allow_mixed = false;
    bool no_cited = false;
    std::string select = "before-lc";
    std::size_t count = 1;

    // simulate
    std::string sim_out = "synthetic.csv";
    double duration = 600.0;
};

int cmd_simulate(const Options& o)
{
    refuse_overwrite(o.sim_out, o.force);
    TrafficConfig cfg;
    cfg.seed = o.seed;
    cfg.duration_s = o.duration;
    const auto records = simulate_traffic(cfg);
    write_trajectory_csv(o.sim_out, records);
    std::cout << "wrote " << records.size() << " rows to " << o.sim_out << '\n';
    return 0;
}

int cmd_ingest(const Options& o, const std::string& config_hash)
{
    if (!fs::exists(o.raw)) throw data_error(o.raw + ": no such file");
    FileLock lock(o.cache);
    refuse_overwrite(o.cache, o.force);
    ColumnMap columns;
    if (o.layout == "ngsim-text") columns = ColumnMap::ngsim_text();
    else if (o.layout != "csv") throw config_error("unknown layout '" + o.layout + "' (csv, ngsim-text)");

    auto parsed = parse_trajectory_file(o.raw, columns);
    save_tracks(o.cache, parsed.tracks, parsed.report, binio::file_checksum(o.raw));

    std::size_t gaps = 0, dups = 0;
    for (const auto& r : parsed.report.rejected) (r.reason == "gap" ? gaps : dups) += 1;
    std::cout << "rows            " << parsed.report.rows << '\n'
              << "accepted rows   " << parsed.report.accepted_rows << '\n'
              << "tracks          " << parsed.tracks.size() << '\n'
              << "gaps            " << gaps << '\n'
              << "duplicates      " << dups << '\n'
              << "frames          " << parsed.tracks.frame_index().size() << '\n'
              << "config hash     " << config_hash << '\n';
    for (const auto& r : parsed.report.rejected) {
        std::cout << "rejected vehicle " << r.vehicle_id << " (" << r.reason << " at frame";
        for (auto f : r.frames) std::cout << ' ' << f;
        std::cout << ")\n";
    }
    return parsed.tracks.empty() ? kExitWarning : 0;
}

int cmd_extract(const Options& o)
{
    const auto snapshot = [&] {
        FileLock lock(o.cache);
        return load_tracks(o.cache);
    }();
    FileLock lock(o.pieces);
    refuse_overwrite(o.pieces, o.force);

    PieceFile file;
    const auto egos = select_ego_vehicles(snapshot.tracks);
    file.pieces = extract_pieces(snapshot.tracks, egos, &file.header.stats);
    if (o.subsample < 1.0) {
        file.pieces = subsample_pieces(std::move(file.pieces), o.subsample, o.seed);
        auto& st = file.header.stats;
        st.pieces = file.pieces.size();
        st.lane_changing = st.lane_keeping = 0;
        for (const auto& p : file.pieces)
            (p.label == PieceLabel::LaneChanging ? st.lane_changing : st.lane_keeping) += 1;
    }
    if (!file.pieces.empty()) file.split = split_dataset(file.pieces.size(), o.seed);
    file.header.seed = o.seed;
    file.header.source_checksum = snapshot.source_checksum;
    file.header.subsample = o.subsample;
    file.header.dataset_id = make_dataset_id(snapshot.source_checksum, o.seed, o.subsample);

    const std::string stats = format_stats(file);
    write_text(o.pieces + ".stats.txt", stats);
    std::cout << stats;
    if (file.pieces.empty()) {
        std::cerr << "warning: no scene pieces extracted; " << o.pieces << " not written\n";
        return kExitWarning;
    }
    save_pieces(o.pieces, file);
    return 0;
}

PieceFile load_piece_file(const std::string& path)
{
    FileLock lock(path);
    return load_pieces(path);
}

int cmd_train(const Options& o, const std::string& config_hash)
{
    const PieceFile file = load_piece_file(o.pieces);
    auto train_set = file.train_pieces();
    if (o.limit > 0 && o.limit < train_set.size()) train_set.resize(o.limit);
    if (train_set.empty()) throw data_error(o.pieces + ": training split is empty");

    TrainConfig cfg;
    cfg.variant = parse_variant(o.variant);
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.lr = o.lr;
    cfg.seed = o.seed;
    if (o.ego_fc) cfg.model_options.ego_slot = EgoSlotSource::EgoFeature;
    cfg.checkpoint_dir = o.checkpoints.empty() ? fs::path("checkpoints") / std::string(variant_name(cfg.variant))
                                               : fs::path(o.checkpoints);
    cfg.provenance = {
        {"dataset_id", file.header.dataset_id},
        {"extract_seed", file.header.seed},
        {"train_seed", o.seed},
        {"config_hash", config_hash},
        {"limit", o.limit},
    };
    if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.lr > 0.0))
        throw config_error("epochs, batch size and learning rate must be positive");

    fs::create_directories(cfg.checkpoint_dir);
    FileLock lock(cfg.checkpoint_dir / "train");
    const fs::path latest = latest_checkpoint(cfg.checkpoint_dir);
    if (!o.resume && !latest.empty() && !o.force)
        throw config_error(cfg.checkpoint_dir.string() + " already holds checkpoints; pass --resume or --force");
    if (o.force && !o.resume) {
        for (const auto& e : fs::directory_iterator(cfg.checkpoint_dir)) {
            const auto ext = e.path().extension();
            if (ext == ".ckpt" || e.path().filename() == "train_log.jsonl") fs::remove(e.path());
        }
    }

    std::signal(SIGINT, on_sigint);
    TrainHooks hooks;
    hooks.stop = &g_stop;
    hooks.on_epoch = [](const EpochRecord& e) {
        std::printf("epoch %3d  mean loss %.6f  (%.1f s)\n", e.epoch + 1, e.mean_loss, e.seconds);
        std::fflush(stdout);
    };

    TrainState state = (o.resume && !latest.empty()) ? resume(latest, train_set, cfg, hooks)
                                                     : train(train_set, cfg, hooks);
    if (g_stop.load()) {
        std::cerr << "interrupted after " << state.epochs_done << " completed epochs; rerun with --resume\n";
        return kExitWarning;
    }

    const fs::path out = o.params_out.empty() ? cfg.checkpoint_dir / "final.params" : fs::path(o.params_out);
    save_params(out, state.model, cfg.provenance);
    const double final_loss = batch_loss(state.model, train_set);
    std::printf("final train loss %.6g\n", final_loss);
    std::cout << "params " << out.string() << '\n';
    return 0;
}

int cmd_eval(const Options& o)
{
    if (o.models.empty()) throw config_error("eval needs at least one checkpoint, params file or 'oracle'");
    const PieceFile file = load_piece_file(o.pieces);
    std::vector<LoadedModel> models;
    for (const auto& m : o.models) models.push_back(load_model_file(m));
    check_provenance(models, file, o.allow_mixed);
    disambiguate_labels(models);

    auto test = file.test_pieces();
    if (o.limit > 0 && o.limit < test.size()) test.resize(o.limit);
    if (test.empty()) {
        std::cerr << "warning: test split is empty\n";
        return kExitWarning;
    }

    std::vector<Future> truths;
    for (const auto& p : test) truths.push_back(p.future);
    std::vector<LabelledReport> reports;
    for (const auto& m : models) {
        std::vector<Future> preds;
        for (const auto& p : test) preds.push_back(predict_with(m, p));
        reports.emplace_back(m.label, rmse_report(preds, truths));
    }

    fs::create_directories(o.out_dir);
    for (const auto& [label, report] : reports) {
        std::string stem;
        for (char c : label) stem += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
        write_text(fs::path(o.out_dir) / ("rmse_" + stem + ".csv"), report_csv(report));
    }
    const auto table = compare(reports, !o.no_cited);
    write_text(fs::path(o.out_dir) / "comparison.csv", table.to_csv());
    write_text(fs::path(o.out_dir) / "comparison.txt", table.to_text());
    std::cout << table.to_text() << "\ntest pieces " << test.size() << "  dataset " << file.header.dataset_id
              << '\n';

    std::vector<ComparisonRow> published = published_variant_results();
    ComparisonTable reference{published, {}};
    std::cout << "\npublished values for the implemented variants (not asserted):\n" << reference.to_text();
    return 0;
}

std::vector<std::size_t> select_pieces(const std::vector<ScenePiece>& pieces, const std::string& selector,
                                       std::size_t count)
{
    std::vector<std::size_t> out;
    if (selector.rfind("index:", 0) == 0) {
        std::size_t idx = 0;
        try {
            idx = std::stoul(selector.substr(6));
        } catch (const std::exception&) {
            throw config_error("bad piece selector '" + selector + "'");
        }
        if (idx < pieces.size()) out.push_back(idx);
        return out;
    }
    std::function<bool(const ScenePiece&)> pred;
    // "during" covers pieces whose prediction starts within 1 s of the lane crossing.
    if (selector == "before-lc") pred = [](const ScenePiece& p) { return p.t_frame < p.change_frame; };
    else if (selector == "after-lc") pred = [](const ScenePiece& p) { return p.t_frame >= p.change_frame; };
    else if (selector == "during-lc")
        pred = [](const ScenePiece& p) { return std::abs(p.t_frame - p.change_frame) <= kFrameRateHz; };
    else throw config_error("unknown piece selector '" + selector + "' (before-lc, during-lc, after-lc, index:N)");
    for (std::size_t i = 0; i < pieces.size() && out.size() < count; ++i)
        if (pred(pieces[i])) out.push_back(i);
    return out;
}

int cmd_plot(const Options& o)
{
    const PieceFile file = load_piece_file(o.pieces);
    std::vector<LoadedModel> models;
    for (const auto& m : o.models) models.push_back(load_model_file(m));
    check_provenance(models, file, o.allow_mixed);
    disambiguate_labels(models);

    const auto test = file.test_pieces();
    const auto chosen = select_pieces(test, o.select, o.count);
    if (chosen.empty()) {
        std::cerr << "warning: selector '" << o.select << "' matched no test pieces\n";
        return kExitWarning;
    }
    fs::create_directories(o.out_dir);
    for (std::size_t idx : chosen) {
        const ScenePiece& p = test[idx];
        std::vector<LabelledPrediction> preds;
        for (const auto& m : models) preds.emplace_back(m.label, predict_with(m, p));
        char title[128];
        std::snprintf(title, sizeof title, "vehicle %lld, frame %lld (lane change at %lld)",
                      static_cast<long long>(p.ego_id), static_cast<long long>(p.t_frame),
                      static_cast<long long>(p.change_frame));
        const fs::path out = fs::path(o.out_dir) / ("scene_" + std::to_string(idx) + ".svg");
        write_text(out, render_scenario(p, preds, title));
        std::cout << out.string() << '\n';
    }
    return 0;
}

int exit_code(ErrorKind k)
{
    switch (k) {
    case ErrorKind::Config: return 1;
    case ErrorKind::Data: return 2;
    case ErrorKind::Contract: return 3;
    }
    return 3;
}

}  // namespace

int main(int argc, char** argv)
{
    Options o;
    CLI::App app{"Interaction-aware lane-change trajectory prediction"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI run configuration; flags override its values");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Seed for splitting, initialization and shuffling")->capture_default_str();
        sub->add_flag("--force", o.force, "Overwrite existing outputs");
    };

    auto* sim = app.add_subcommand("simulate", "Write synthetic multi-lane traffic as an NGSIM-style CSV");
    add_common(sim);
    sim->add_option("--out", o.sim_out)->capture_default_str();
    sim->add_option("--duration", o.duration, "Simulated seconds")->capture_default_str();

    auto* ingest = app.add_subcommand("ingest", "Parse a trajectory file into a track cache");
    add_common(ingest);
    ingest->add_option("raw", o.raw, "Trajectory file (CSV with header or NGSIM text)")->required();
    ingest->add_option("--cache", o.cache)->capture_default_str();
    ingest->add_option("--layout", o.layout, "csv or ngsim-text")->capture_default_str();

    auto* extract = app.add_subcommand("extract", "Select ego vehicles and cut scene pieces");
    add_common(extract);
    extract->add_option("--cache", o.cache)->capture_default_str();
    extract->add_option("--out", o.pieces)->capture_default_str();
    extract->add_option("--subsample", o.subsample, "Fraction of pieces kept")->capture_default_str();

    auto* trn = app.add_subcommand("train", "Train one model variant");
    add_common(trn);
    trn->add_option("--pieces", o.pieces)->capture_default_str();
    trn->add_option("--variant", o.variant, "CNN-LSTM, V-LSTM, FC-LSTM or Interaction-only")->capture_default_str();
    trn->add_option("--epochs", o.epochs)->capture_default_str();
    trn->add_option("--batch-size", o.batch_size)->capture_default_str();
    trn->add_option("--lr", o.lr)->capture_default_str();
    trn->add_option("--limit", o.limit, "Use only the first N training pieces (0 = all)")->capture_default_str();
    trn->add_option("--checkpoints", o.checkpoints, "Checkpoint directory (default checkpoints/<variant>)");
    trn->add_option("--out", o.params_out, "Final params file (default <checkpoints>/final.params)");
    trn->add_flag("--resume", o.resume, "Continue from the latest checkpoint");
    trn->add_flag("--ego-slot-fc", o.ego_fc, "Fill the grid centre with FC_e output instead of the LSTM state");

    auto* ev = app.add_subcommand("eval", "Per-horizon RMSE on the test split");
    add_common(ev);
    ev->add_option("--pieces", o.pieces)->capture_default_str();
    ev->add_option("models", o.models, "Checkpoints, params files, or 'oracle'")->required();
    ev->add_option("--out-dir", o.out_dir)->capture_default_str();
    ev->add_option("--limit", o.limit, "Evaluate only the first N test pieces (0 = all)")->capture_default_str();
    ev->add_flag("--allow-mixed", o.allow_mixed, "Accept models trained on a different dataset");
    ev->add_flag("--no-cited", o.no_cited, "Omit literature baseline rows");

    auto* plot = app.add_subcommand("plot", "Render test scenes with predictions as SVG");
    add_common(plot);
    plot->add_option("--pieces", o.pieces)->capture_default_str();
    plot->add_option("models", o.models, "Checkpoints, params files, or 'oracle'");
    plot->add_option("--select", o.select, "before-lc, during-lc, after-lc or index:N")->capture_default_str();
    plot->add_option("--count", o.count)->capture_default_str();
    plot->add_option("--out-dir", o.out_dir)->capture_default_str();
    plot->add_flag("--allow-mixed", o.allow_mixed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const std::string config_hash = hash_text(app.config_to_str(true, false));
    try {
        if (*sim) return cmd_simulate(o);
        if (*ingest) return cmd_ingest(o, config_hash);
        if (*extract) return cmd_extract(o);
        if (*trn) return cmd_train(o, config_hash);
        if (*ev) return cmd_eval(o);
        if (*plot) return cmd_plot(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 3;
}
