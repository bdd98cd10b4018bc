#include "tplab/training.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numeric>
#include <regex>

#include "tplab/binio.hpp"
#include "tplab/common.hpp"
#include "tplab/rng.hpp"

namespace tplab {

namespace {

constexpr std::string_view kCheckpointMagic = "TPLAB-CKPT-v1";

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void validate(const TrainConfig& cfg, std::size_t n)
{
    if (cfg.epochs < 1) throw config_error("epochs must be >= 1");
    if (cfg.batch_size < 1) throw config_error("batch size must be >= 1");
    if (!(cfg.lr > 0.0)) throw config_error("learning rate must be positive");
    if (n == 0) throw contract_error("train: empty training set");
}

void run_epochs(TrainState& st, std::span<const ScenePiece> pieces, const TrainConfig& cfg, const TrainHooks& hooks)
{
    std::ofstream log_file;
    if (!cfg.checkpoint_dir.empty()) {
        std::filesystem::create_directories(cfg.checkpoint_dir);
        log_file.open(cfg.checkpoint_dir / "train_log.jsonl", std::ios::app);
        if (!log_file) throw data_error((cfg.checkpoint_dir / "train_log.jsonl").string() + ": cannot open");
    }

    auto params = st.model.parameter_tensors();
    for (int epoch = st.epochs_done; epoch < cfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        const auto order = epoch_order(pieces.size(), cfg.seed, epoch);
        double epoch_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            if (hooks.stop && hooks.stop->load()) return;
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            std::vector<ad::Tensor> losses;
            losses.reserve(end - begin);
            for (std::size_t i = begin; i < end; ++i) losses.push_back(piece_loss(st.model, pieces[order[i]]));
            const ad::Tensor loss = ad::mean(losses);

            for (auto& p : params) p.zero_grad();
            ad::backward(loss);
            ad::adam_step(params, st.adam);

            const StepRecord rec{st.adam.step, epoch, loss.item()};
            st.log.steps.push_back(rec);
            epoch_sum += rec.loss * static_cast<double>(end - begin);
            if (log_file) {
                log_file << nlohmann::json{{"step", rec.step}, {"epoch", rec.epoch}, {"loss", rec.loss},
                                           {"time", utc_timestamp()}}
                                .dump()
                         << '\n';
            }
            if (hooks.on_step) hooks.on_step(rec);
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        const EpochRecord er{epoch, epoch_sum / static_cast<double>(pieces.size()), seconds};
        st.log.epochs.push_back(er);
        st.epochs_done = epoch + 1;
        if (!cfg.checkpoint_dir.empty()) save_checkpoint(checkpoint_path(cfg.checkpoint_dir, st.epochs_done), st, cfg);
        if (hooks.on_epoch) hooks.on_epoch(er);
    }
}

}  // namespace

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, int epoch)
{
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(seed + static_cast<std::uint64_t>(epoch), 0xE90C));
    rng.shuffle(std::span<std::size_t>(order));
    return order;
}

TrainState train(std::span<const ScenePiece> pieces, const TrainConfig& cfg, const TrainHooks& hooks)
{
    validate(cfg, pieces.size());
    Model model = Model::initialize(cfg.variant, cfg.seed, cfg.model_options);
    const auto params = model.parameter_tensors();
    TrainState st{std::move(model), ad::AdamState::for_params(params, {.lr = cfg.lr}), {}, 0};
    run_epochs(st, pieces, cfg, hooks);
    return st;
}

TrainState resume(const std::filesystem::path& checkpoint, std::span<const ScenePiece> pieces,
                  const TrainConfig& cfg, const TrainHooks& hooks)
{
    validate(cfg, pieces.size());
    Checkpoint ck = load_checkpoint(checkpoint);
    const auto& c = ck.header.at("config");
    if (ck.state.model.variant() != cfg.variant) {
        throw config_error(checkpoint.string() + ": checkpoint holds " +
                           std::string(variant_name(ck.state.model.variant())) + ", requested " +
                           std::string(variant_name(cfg.variant)));
    }
    if (c.at("seed").get<std::uint64_t>() != cfg.seed || c.at("batch_size").get<std::size_t>() != cfg.batch_size) {
        throw config_error(checkpoint.string() + ": seed or batch size differ from the checkpointed run");
    }
    if (ck.state.adam.options.lr != cfg.lr) {
        throw config_error(checkpoint.string() + ": learning rate differs from the checkpointed run");
    }
    run_epochs(ck.state, pieces, cfg, hooks);
    return std::move(ck.state);
}

double batch_loss(const Model& model, std::span<const ScenePiece> batch)
{
    double acc = 0.0;
    for (const auto& p : batch) acc += piece_loss(model, p).item();
    return acc / static_cast<double>(batch.size());
}

// ---- checkpoints ---------------------------------------------------------------

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch)
{
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%03d.ckpt", epoch);
    return dir / name;
}

std::filesystem::path latest_checkpoint(const std::filesystem::path& dir)
{
    std::filesystem::path best;
    int best_epoch = -1;
    if (!std::filesystem::is_directory(dir)) return best;
    const std::regex pattern(R"(epoch_(\d+)\.ckpt)");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) {
            const int e = std::stoi(m[1]);
            if (e > best_epoch) {
                best_epoch = e;
                best = entry.path();
            }
        }
    }
    return best;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& st, const TrainConfig& cfg)
{
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : st.log.steps) steps.push_back({s.step, s.epoch, s.loss});
    nlohmann::json epochs = nlohmann::json::array();
    // wall-clock time stays out so that equal runs give equal files
    for (const auto& e : st.log.epochs) epochs.push_back({e.epoch, e.mean_loss});
    const auto& o = st.adam.options;
    nlohmann::json header = {
        {"model", describe_model(st.model)},
        {"epoch", st.epochs_done},
        {"adam", {{"step", st.adam.step}, {"lr", o.lr}, {"beta1", o.beta1}, {"beta2", o.beta2}, {"eps", o.eps}}},
        {"config", {{"epochs", cfg.epochs}, {"batch_size", cfg.batch_size}, {"seed", cfg.seed}, {"lr", cfg.lr}}},
        {"provenance", cfg.provenance},
        {"log", {{"steps", steps}, {"epochs", epochs}}},
    };
    // Write to a sibling and rename so an interrupted save never leaves a
    // truncated checkpoint under the final name.
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        auto out = binio::open_out(tmp);
        binio::write_header(out, kCheckpointMagic, header);
        binio::write_doubles(out, flatten_params(st.model));
        for (const auto& m : st.adam.first_moment) binio::write_doubles(out, m);
        for (const auto& v : st.adam.second_moment) binio::write_doubles(out, v);
        if (!out) throw data_error(tmp.string() + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    auto in = binio::open_in(path);
    auto header = binio::read_header(in, kCheckpointMagic, path);
    try {
        if (!header.contains("adam")) throw data_error(path.string() + ": checkpoint carries no optimizer state");
        const auto& mdesc = header.at("model");
        const Variant v = parse_variant(mdesc.at("variant").get<std::string>());
        ModelOptions opts;
        opts.ego_slot = mdesc.at("ego_slot").get<std::string>() == "fc_e" ? EgoSlotSource::EgoFeature
                                                                           : EgoSlotSource::LstmHidden;
        const Model shape_only = Model::zeros(v, opts);
        check_description(mdesc, shape_only, path.string());

        std::vector<double> payload(shape_only.parameter_count());
        binio::read_doubles(in, payload, path);
        Model model = model_from_payload(v, opts, payload);

        const auto& a = header.at("adam");
        ad::AdamState adam;
        adam.options = {a.at("lr"), a.at("beta1"), a.at("beta2"), a.at("eps")};
        adam.step = a.at("step");
        for (const auto& p : model.parameters()) adam.first_moment.emplace_back(p.tensor.size());
        for (const auto& p : model.parameters()) adam.second_moment.emplace_back(p.tensor.size());
        for (auto& m : adam.first_moment) binio::read_doubles(in, m, path);
        for (auto& m : adam.second_moment) binio::read_doubles(in, m, path);
        binio::expect_eof(in, path);

        TrainLog log;
        for (const auto& s : header.at("log").at("steps")) log.steps.push_back({s.at(0), s.at(1), s.at(2)});
        for (const auto& e : header.at("log").at("epochs")) log.epochs.push_back({e.at(0), e.at(1), 0.0});
        const int epoch = header.at("epoch");
        return {TrainState{std::move(model), std::move(adam), std::move(log), epoch}, std::move(header)};
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path.string() + ": corrupt checkpoint header: " + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw data_error(path.string() + ": " + e.what());
        throw;
    }
}

}  // namespace tplab
