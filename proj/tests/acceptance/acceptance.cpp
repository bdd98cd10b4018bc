// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion.
//
//   acceptance [--only 1,2,3,4,5a,5b,6,7,8]
//
// Exit status: 0 when every selected criterion passed, 1 on any failure,
// 77 when nothing failed but something was skipped.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <CLI11.hpp>

#include "support/extraction_oracle.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/pieces.hpp"
#include "tplab/autodiff.hpp"
#include "tplab/evaluation.hpp"
#include "tplab/model.hpp"
#include "tplab/ngsim.hpp"
#include "tplab/scene.hpp"
#include "tplab/traffic_sim.hpp"
#include "tplab/training.hpp"

using namespace tplab;
namespace fs = std::filesystem;

namespace {

const fs::path kData = TPLAB_TEST_DATA;
const std::string kCli = TPLAB_CLI;
constexpr const char* kRealDataEnv = "TPLAB_NGSIM_US101";

enum class Outcome { Pass, Fail, Skip };

struct Result {
    Outcome outcome = Outcome::Fail;
    std::string detail;
};

Result verdict(bool ok, std::string detail) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(detail)}; }

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<double> to_vec(const ad::Tensor& t) { return {t.values().begin(), t.values().end()}; }

// ---- 1 ---------------------------------------------------------------------

Result gradient_correctness()
{
    using namespace tplab::ad;
    using testing::check_gradients;
    using testing::project;
    using testing::random_parameter;
    Rng rng(101);
    std::map<std::string, double> worst;

    {
        auto x = random_parameter(rng, {5});
        auto W = random_parameter(rng, {4, 5});
        auto b = random_parameter(rng, {4});
        worst["affine"] = check_gradients([&] { return project(affine(x, W, b)); }, {x, W, b}).max_rel_error;
    }
    {
        auto x = Tensor::parameter({6}, {0.9, -0.4, 1.3, -2.2, 0.05, -0.08});
        worst["leaky_relu"] = check_gradients([&] { return project(leaky_relu(x)); }, {x}).max_rel_error;
    }
    {
        auto x = random_parameter(rng, {3});
        auto h = random_parameter(rng, {4});
        auto c = random_parameter(rng, {4});
        LstmCellParams p{random_parameter(rng, {16, 3}), random_parameter(rng, {16, 4}), random_parameter(rng, {16})};
        worst["lstm_cell"] = check_gradients(
                                 [&] {
                                     const auto s = lstm_cell(x, {h, c}, p);
                                     return add(project(s.h, 1), project(s.c, 2));
                                 },
                                 {x, h, c, p.w_input, p.w_hidden, p.bias})
                                 .max_rel_error;
    }
    {
        auto x = random_parameter(rng, {2, 3, 3});
        auto k = random_parameter(rng, {3, 2, 2, 2});
        auto b = random_parameter(rng, {3});
        worst["conv2d_valid"] = check_gradients([&] { return project(conv2d_valid(x, k, b)); }, {x, k, b}).max_rel_error;
    }
    {
        auto a = random_parameter(rng, {2, 3});
        auto b = random_parameter(rng, {1, 3});
        worst["concat/reshape/transpose/slice/add/scale/mean"] =
            check_gradients(
                [&] {
                    auto t = transpose(reshape(concat({a, b}), {3, 3}));
                    auto s = slice(t, 2, 5);
                    std::vector<Tensor> parts{scale(s, 1.5), add(s, s)};
                    return project(mean(parts));
                },
                {a, b})
                .max_rel_error;
    }
    {
        auto p = random_parameter(rng, {10, 2});
        auto t = random_parameter(rng, {10, 2});
        worst["weighted_mse"] = check_gradients([&] { return weighted_mse(p, t); }, {p}).max_rel_error;
    }
    {
        // full model on one piece; the target is kept near the untrained
        // output so the loss is of order one, and biases are moved off zero so
        // no leaky-ReLU input sits on its kink
        auto piece = testing::random_piece(rng);
        for (auto& q : piece.future) q = {0.02 * q.x, 0.02 * q.y};
        const auto m = Model::initialize(Variant::CnnLstm, 7);
        testing::jitter_biases(m, rng);
        const auto r = check_gradients([&] { return piece_loss(m, piece); }, m.parameter_tensors(), 25);
        worst["CNN-LSTM (" + std::to_string(r.checked) + " sampled entries)"] = r.max_rel_error;
    }

    double overall = 0.0;
    std::string detail;
    for (const auto& [name, e] : worst) {
        overall = std::max(overall, e);
        detail += "\n      " + name + ": " + fmt("%.2e", e);
    }
    return verdict(overall < 1e-4, "max relative error " + fmt("%.2e", overall) + " (< 1e-4)" + detail);
}

// ---- 2 ---------------------------------------------------------------------

Result shape_chain()
{
    Rng rng(102);
    const auto m = Model::initialize(Variant::CnnLstm, 1);
    ShapeTrace trace;
    const auto out = m.predict(testing::random_piece(rng), &trace);
    const std::vector<std::pair<std::string, ad::Shape>> expect{
        {"histories", {9, 16, 2}}, {"encodings", {9, 32}}, {"grid", {32, 3, 3}},   {"conv1", {64, 2, 2}},
        {"conv2", {128, 1, 1}},    {"flatten", {128}},     {"interaction", {64}}, {"context", {96}},
    };
    std::string chain;
    bool ok = trace.stages.size() >= expect.size();
    std::size_t k = 0;
    for (const auto& [name, shape] : trace.stages) {
        chain += (chain.empty() ? "" : " -> ") + ad::shape_string(shape);
        if (k < expect.size()) ok = ok && name == expect[k].first && shape == expect[k].second;
        ++k;
    }
    ok = ok && out.shape() == ad::Shape{10, 2};
    return verdict(ok, chain);
}

// ---- 3 ---------------------------------------------------------------------

struct FitResult {
    double initial_loss = 0.0, loss = 0.0, max_error = 0.0;
};

FitResult fit_one(Variant v, const ScenePiece& piece)
{
    const std::vector<ScenePiece> one{piece};
    TrainConfig cfg;
    cfg.variant = v;
    cfg.epochs = 200;
    cfg.batch_size = 1;
    FitResult r;
    r.initial_loss = batch_loss(Model::initialize(v, cfg.seed), one);
    const auto st = train(one, cfg);
    r.loss = batch_loss(st.model, one);
    const auto pred = st.model.predict_points(piece);
    for (std::size_t k = 0; k < kFuturePoints; ++k)
        r.max_error = std::max(r.max_error, std::hypot(pred[k].x - piece.future[k].x, pred[k].y - piece.future[k].y));
    return r;
}

Result overfit()
{
    // The stationary queue is already fitted at initialisation by V-LSTM
    // (zero input, zero biases), so a slowly creeping queue whose initial
    // loss exceeds the threshold for every variant is asserted as well.
    const std::vector<std::pair<std::string, ScenePiece>> asserted{
        {"stationary queue", testing::stationary_piece()},
        {"queue creeping at 0.05 m/s", testing::creeping_piece(0.05)},
    };
    bool ok = true;
    std::string detail = "200 epochs, batch 1, lr 0.001";
    for (const auto& [name, piece] : asserted) {
        detail += "\n      " + name + ":";
        for (auto v : kAllVariants) {
            const auto r = fit_one(v, piece);
            ok = ok && r.loss < 1e-2 && r.max_error < 1e-2;
            detail += "\n        " + std::string(variant_name(v)) + ": loss " + fmt("%.2e", r.initial_loss) + " -> " +
                      fmt("%.2e", r.loss) + ", max point error " + fmt("%.2e", r.max_error) + " m";
        }
    }

    // Not part of the verdict. With the default step size, 200 Adam steps
    // move each weight by at most about 0.2, which bounds how far the output
    // can travel from its initial value.
    detail += "\n      info, not asserted:";
    for (double speed : {0.1, 0.2}) {
        const auto r = fit_one(Variant::VLstm, testing::creeping_piece(speed));
        detail += "\n        V-LSTM, queue at " + fmt("%.1f", speed) + " m/s: loss " + fmt("%.2e", r.loss) +
                  ", max point error " + fmt("%.2e", r.max_error) + " m";
    }
    Rng rng(103);
    const auto moving = fit_one(Variant::CnnLstm, testing::random_piece(rng));
    detail += "\n        CNN-LSTM, piece at highway speed: loss " + fmt("%.3g", moving.initial_loss) + " -> " +
              fmt("%.3g", moving.loss);
    return verdict(ok, detail);
}

// ---- 4 ---------------------------------------------------------------------

Result oracle_equivalence()
{
    using testing::random_parameter;
    Rng rng(104);
    std::map<std::string, double> worst;
    auto note = [&](const std::string& name, double d) { worst[name] = std::max(worst[name], d); };

    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t cin = 1 + rng.below(3), cout = 1 + rng.below(4), r = 2 + rng.below(3), s = 2 + rng.below(3);
        auto x = random_parameter(rng, {cin, r, s});
        auto k = random_parameter(rng, {cout, cin, 2, 2});
        auto b = random_parameter(rng, {cout});
        const auto expect = testing::naive_conv(to_vec(x), cin, r, s, to_vec(k), cout, 2, 2, to_vec(b));
        const auto got = ad::conv2d_valid(x, k, b);
        for (std::size_t i = 0; i < expect.size(); ++i) note("conv2d_valid", std::abs(got[i] - expect[i]));

        const std::size_t d = 1 + rng.below(8), o = 1 + rng.below(8);
        auto xv = random_parameter(rng, {d});
        auto W = random_parameter(rng, {o, d});
        auto bb = random_parameter(rng, {o});
        const auto ea = testing::naive_affine(to_vec(xv), to_vec(W), to_vec(bb));
        const auto ga = ad::affine(xv, W, bb);
        for (std::size_t i = 0; i < o; ++i) note("affine", std::abs(ga[i] - ea[i]));

        const std::size_t hd = 1 + rng.below(5), id = 1 + rng.below(4);
        auto xi = random_parameter(rng, {id});
        auto h = random_parameter(rng, {hd});
        auto c = random_parameter(rng, {hd});
        ad::LstmCellParams p{random_parameter(rng, {4 * hd, id}), random_parameter(rng, {4 * hd, hd}),
                             random_parameter(rng, {4 * hd})};
        const auto [h2, c2] = testing::naive_lstm(to_vec(xi), to_vec(h), to_vec(c), to_vec(p.w_input),
                                                  to_vec(p.w_hidden), to_vec(p.bias));
        const auto st = ad::lstm_cell(xi, {h, c}, p);
        for (std::size_t j = 0; j < hd; ++j) {
            note("lstm_cell", std::abs(st.h[j] - h2[j]));
            note("lstm_cell", std::abs(st.c[j] - c2[j]));
        }

        const std::size_t n = 1 + rng.below(30);
        std::vector<Future> pf, tf;
        std::vector<std::vector<std::pair<double, double>>> pv, tv;
        for (std::size_t i = 0; i < n; ++i) {
            Future a{}, t{};
            pv.emplace_back();
            tv.emplace_back();
            for (std::size_t k2 = 0; k2 < kFuturePoints; ++k2) {
                a[k2] = {rng.uniform(-5, 5), rng.uniform(-50, 50)};
                t[k2] = {rng.uniform(-5, 5), rng.uniform(-50, 50)};
                pv.back().emplace_back(a[k2].x, a[k2].y);
                tv.back().emplace_back(t[k2].x, t[k2].y);
            }
            pf.push_back(a);
            tf.push_back(t);
        }
        const auto er = testing::naive_rmse(pv, tv);
        const auto gr = rmse_report(pf, tf);
        for (std::size_t k2 = 0; k2 < kFuturePoints; ++k2) note("rmse", std::abs(gr.rmse_m[k2] - er[k2]));

        auto pt = random_parameter(rng, {10, 2}, 5.0);
        auto tt = random_parameter(rng, {10, 2}, 5.0);
        std::vector<std::pair<double, double>> pl, tl;
        for (std::size_t i = 0; i < 10; ++i) {
            pl.emplace_back(pt[2 * i], pt[2 * i + 1]);
            tl.emplace_back(tt[2 * i], tt[2 * i + 1]);
        }
        note("weighted loss", std::abs(ad::weighted_mse(pt, tt).item() - testing::naive_weighted_loss(pl, tl)));
    }

    double overall = 0.0;
    std::string detail;
    for (const auto& [name, e] : worst) {
        overall = std::max(overall, e);
        detail += "\n      " + name + ": " + fmt("%.2e", e);
    }
    return verdict(overall <= 1e-12, "25 random instances each, max abs difference " + fmt("%.2e", overall) + detail);
}

// ---- 5a --------------------------------------------------------------------

// Library extraction against the brute-force oracle on one CSV file.
bool matches_oracle(const fs::path& csv, std::string& detail)
{
    const testing::ExtractionOracle oracle(testing::read_csv_rows(csv));
    const auto ts = parse_trajectory_file(csv).tracks;
    const auto egos = select_ego_vehicles(ts);
    const auto pieces = extract_pieces(ts, egos);
    const auto want_egos = oracle.egos();
    const auto want = oracle.pieces();
    bool ok = egos.size() == want_egos.size() && pieces.size() == want.size();
    for (std::size_t k = 0; ok && k < egos.size(); ++k)
        ok = egos[k].vehicle_id == want_egos[k].id && egos[k].event.change_frame == want_egos[k].change_frame;
    for (std::size_t k = 0; ok && k < pieces.size(); ++k)
    {
        ok = pieces[k].ego_id == want[k].ego && pieces[k].t_frame == want[k].t;
        for (std::size_t s = 0; s < kGridSlots; ++s) ok = ok && pieces[k].grid.ids[s] == want[k].grid[s];
    }
    detail += "\n      " + csv.filename().string() + ": egos " + std::to_string(egos.size()) + "/" +
              std::to_string(want_egos.size()) + ", pieces " + std::to_string(pieces.size()) + "/" +
              std::to_string(want.size()) + (ok ? "" : " MISMATCH");
    return ok;
}

Result fixture_counts()
{
    std::string detail;
    bool ok = matches_oracle(kData / "convoy.csv", detail);
    ok = matches_oracle(kData / "five_vehicles.csv", detail) && ok;

    // a short simulated recording, written out and read back like any input
    TrafficConfig cfg;
    cfg.seed = 5;
    cfg.duration_s = 240.0;
    const fs::path csv = fs::temp_directory_path() / "tplab_acceptance_sim.csv";
    write_trajectory_csv(csv, simulate_traffic(cfg));
    ok = matches_oracle(csv, detail) && ok;
    fs::remove(csv);
    return verdict(ok, "library vs brute-force oracle (egos, frames and all nine grid ids)" + detail);
}

// ---- 5b --------------------------------------------------------------------

ParseResult parse_any_layout(const fs::path& path)
{
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::transform(line.begin(), line.end(), line.begin(), [](unsigned char c) { return std::tolower(c); });
    const bool header = line.find("vehicle_id") != std::string::npos;
    return parse_trajectory_file(path, header ? ColumnMap{} : ColumnMap::ngsim_text());
}

Result real_counts()
{
    const char* env = std::getenv(kRealDataEnv);
    if (!env || !*env) return {Outcome::Skip, std::string(kRealDataEnv) + " is not set to the US-101 07:50-08:35 file"};
    if (!fs::exists(env)) return {Outcome::Fail, std::string(env) + ": no such file"};
    const auto parsed = parse_any_layout(env);
    const auto egos = select_ego_vehicles(parsed.tracks);
    const auto pieces = extract_pieces(parsed.tracks, egos);
    const double ego_dev = std::abs(double(egos.size()) - 298.0) / 298.0;
    const double piece_dev = std::abs(double(pieces.size()) - 48150.0) / 48150.0;
    return verdict(ego_dev <= 0.15 && piece_dev <= 0.15,
                   "egos " + std::to_string(egos.size()) + " (298 +-15%), pieces " + std::to_string(pieces.size()) +
                       " (48150 +-15%)");
}

// ---- 6 ---------------------------------------------------------------------

Result ablation_ordering()
{
    const auto start = std::chrono::steady_clock::now();
    const char* env = std::getenv(kRealDataEnv);
    std::string source;
    TrackSet tracks;
    if (env && *env && fs::exists(env)) {
        tracks = parse_any_layout(env).tracks;
        source = env;
    } else {
        TrafficConfig cfg;
        cfg.seed = 1;
        tracks = build_tracks(simulate_traffic(cfg)).tracks;
        source = "synthetic traffic (seed 1, 600 s); set " + std::string(kRealDataEnv) + " for the recording";
    }
    const auto egos = select_ego_vehicles(tracks);
    const auto all = extract_pieces(tracks, egos);
    const auto pieces = subsample_pieces(all, 0.1, 1);
    if (pieces.size() < 10) return {Outcome::Fail, "only " + std::to_string(pieces.size()) + " pieces after subsampling"};
    const auto split = split_dataset(pieces.size(), 1);
    std::vector<ScenePiece> train_set, test_set;
    for (auto i : split.train) train_set.push_back(pieces[i]);
    for (auto i : split.test) test_set.push_back(pieces[i]);

    std::map<Variant, HorizonReport> reports;
    std::vector<LabelledReport> labelled;
    for (auto v : {Variant::VLstm, Variant::FcLstm, Variant::InteractionOnly, Variant::CnnLstm}) {
        TrainConfig cfg;
        cfg.variant = v;
        cfg.seed = 1;
        const auto st = train(train_set, cfg);
        reports[v] = evaluate(st.model, test_set);
        labelled.emplace_back(std::string(variant_name(v)), reports[v]);
        std::cout << "      trained " << variant_name(v) << '\n' << std::flush;
    }
    auto at5 = [&](Variant v) { return reports[v].horizons()[4]; };
    const double cnn = at5(Variant::CnnLstm), io = at5(Variant::InteractionOnly), fc = at5(Variant::FcLstm),
                 vl = at5(Variant::VLstm);
    const bool order = cnn <= io && io <= fc && fc < vl;
    const bool gap = vl >= 1.5 * cnn;

    std::ostringstream d;
    d << "source: " << source << "\n      " << all.size() << " pieces, 10% subsample " << pieces.size() << " ("
      << train_set.size() << " train / " << test_set.size() << " test), 20 epochs, seed 1\n";
    d << "      5 s RMSE: CNN-LSTM " << fmt("%.4f", cnn) << " <= Interaction-only " << fmt("%.4f", io)
      << " <= FC-LSTM " << fmt("%.4f", fc) << " < V-LSTM " << fmt("%.4f", vl) << (order ? "  holds" : "  violated")
      << "\n      V-LSTM / CNN-LSTM at 5 s " << fmt("%.3f", vl / cnn) << " (>= 1.5)" << (gap ? "  holds" : "  violated");
    std::istringstream table(compare(labelled, false).to_text());
    for (std::string line; std::getline(table, line);) d << "\n      " << line;
    d << "\n      published values (printed for comparison, not asserted):";
    std::istringstream pub(ComparisonTable{published_variant_results(), {}}.to_text());
    for (std::string line; std::getline(pub, line);) d << "\n      " << line;
    const auto mins = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
    d << "\n      runtime " << fmt("%.1f", mins) << " min";
    return verdict(order && gap, d.str());
}

// ---- 7 ---------------------------------------------------------------------

int cli(const fs::path& dir, const std::string& args)
{
    const std::string cmd = "cd '" + dir.string() + "' && '" + kCli + "' " + args + " >> run.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result determinism()
{
    const fs::path root = fs::temp_directory_path() / "tplab_acceptance_determinism";
    fs::remove_all(root);
    const std::vector<std::string> steps{
        "simulate --seed 2 --duration 300 --out sim.csv",
        "ingest sim.csv",
        "extract --seed 4 --subsample 0.05",
        "train --variant CNN-LSTM --seed 6 --epochs 2 --limit 40",
        "train --variant V-LSTM --seed 6 --epochs 2 --limit 40",
        "eval checkpoints/CNN-LSTM/final.params checkpoints/V-LSTM/final.params oracle",
    };
    for (const char* run : {"a", "b"}) {
        const fs::path dir = root / run;
        fs::create_directories(dir);
        for (const auto& s : steps)
            if (const int rc = cli(dir, s); rc != 0)
                return {Outcome::Fail, "run " + std::string(run) + ": '" + s + "' exited " + std::to_string(rc)};
    }
    std::vector<fs::path> compared;
    for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root / "a");
        const auto ext = rel.extension();
        // the training log carries wall-clock timestamps by design
        if (ext == ".lock" || rel == "run.log" || rel.filename() == "train_log.jsonl") continue;
        compared.push_back(rel);
    }
    std::sort(compared.begin(), compared.end());
    std::size_t reports = 0;
    for (const auto& rel : compared) {
        if (!fs::exists(root / "b" / rel) || slurp(root / "a" / rel) != slurp(root / "b" / rel))
            return {Outcome::Fail, rel.string() + " differs between runs"};
        reports += rel.parent_path() == "reports";
    }
    const bool ok = reports >= 4;
    fs::remove_all(root);
    return verdict(ok, "simulate+ingest+extract+train+eval twice: " + std::to_string(compared.size()) +
                           " files bitwise identical, " + std::to_string(reports) + " of them reports");
}

// ---- 8 ---------------------------------------------------------------------

Result translation_invariance()
{
    Rng rng(108);
    // shifts and coordinates on a 1/128 m lattice with magnitudes well under
    // 2^40, so every difference taken during centring is exact
    auto lattice = [](double v) { return std::round(v * 128.0) / 128.0; };
    std::size_t compared = 0;
    bool ok = true;
    double drift = 0.0;
    for (auto v : kAllVariants) {
        const auto m = Model::initialize(v, 8);
        for (int trial = 0; trial < 10; ++trial) {
            std::array<History, kGridSlots> world{};
            Future fut{};
            const double bx = lattice(rng.uniform(0, 25)), by = lattice(rng.uniform(50, 650));
            for (std::size_t s = 0; s < kGridSlots; ++s) {
                const double vy = rng.uniform(3, 20);
                for (std::size_t k = 0; k < kHistoryPoints; ++k)
                    world[s][k] = {lattice(bx + 3.7 * (double(s / 3) - 1) + rng.uniform(-0.3, 0.3)),
                                   lattice(by + 12.0 * (double(s % 3) - 1) + vy * 0.2 * double(k))};
            }
            for (std::size_t k = 0; k < kFuturePoints; ++k)
                fut[k] = {world[kEgoSlot - 1].back().x, lattice(world[kEgoSlot - 1].back().y + 5.0 * double(k + 1))};
            const auto base = m.predict_points(center_piece(world, fut));

            for (int shift = 0; shift < 3; ++shift) {
                const double dx = lattice(rng.uniform(-500, 500)), dy = lattice(rng.uniform(-5000, 5000));
                auto w2 = world;
                auto f2 = fut;
                for (auto& h : w2)
                    for (auto& p : h) p = {p.x + dx, p.y + dy};
                for (auto& p : f2) p = {p.x + dx, p.y + dy};
                ok = ok && m.predict_points(center_piece(w2, f2)) == base;
                ++compared;

                // informational: a shift off the lattice
                const double ux = rng.uniform(-500, 500), uy = rng.uniform(-5000, 5000);
                auto w3 = world;
                for (auto& h : w3)
                    for (auto& p : h) p = {p.x + ux, p.y + uy};
                const auto off = m.predict_points(center_piece(w3, fut));
                for (std::size_t k = 0; k < kFuturePoints; ++k)
                    drift = std::max({drift, std::abs(off[k].x - base[k].x), std::abs(off[k].y - base[k].y)});
            }
        }
    }
    return verdict(ok, std::to_string(compared) + " shifted pieces across all variants bitwise equal" +
                           "\n      info, arbitrary real shifts: max deviation " + fmt("%.1e", drift) +
                           " m (rounding of the raw coordinates, not asserted)");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance checks"};
    std::string only = "1,2,3,4,5a,5b,6,7,8";
    app.add_option("--only", only, "Comma-separated criteria to run")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::pair<std::string, Result (*)()>>> all{
        {"1", {"gradient correctness", gradient_correctness}},
        {"2", {"shape chain", shape_chain}},
        {"3", {"overfit one piece", overfit}},
        {"4", {"oracle equivalence", oracle_equivalence}},
        {"5a", {"extraction counts, fixtures", fixture_counts}},
        {"5b", {"extraction counts, US-101 recording", real_counts}},
        {"6", {"ablation ordering", ablation_ordering}},
        {"7", {"determinism", determinism}},
        {"8", {"translation invariance", translation_invariance}},
    };
    std::set<std::string> wanted;
    std::stringstream ss(only);
    for (std::string id; std::getline(ss, id, ',');) wanted.insert(id);
    for (const auto& id : wanted)
        if (std::none_of(all.begin(), all.end(), [&](const auto& c) { return c.first == id; })) {
            std::cerr << "unknown criterion '" << id << "'\n";
            return 1;
        }

    int failed = 0, skipped = 0;
    for (const auto& [id, entry] : all) {
        if (!wanted.count(id)) continue;
        const auto& [name, fn] = entry;
        Result r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r = {Outcome::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = r.outcome == Outcome::Pass ? "PASS" : r.outcome == Outcome::Fail ? "FAIL" : "SKIP";
        failed += r.outcome == Outcome::Fail;
        skipped += r.outcome == Outcome::Skip;
        std::cout << tag << "  [" << id << "] " << name << ": " << r.detail << '\n' << std::flush;
    }
    if (failed) return 1;
    return skipped ? 77 : 0;
}
