#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "tplab/autodiff.hpp"
#include "tplab/model.hpp"

namespace tplab {

struct TrainConfig {
    Variant variant = Variant::CnnLstm;
    int epochs = 20;
    std::size_t batch_size = 8;
    double lr = 0.001;
    std::uint64_t seed = 0;
    ModelOptions model_options;
    /// When set, a checkpoint is written after every epoch and step records
    /// are appended to train_log.jsonl in this directory.
    std::filesystem::path checkpoint_dir;
    /// Embedded into every checkpoint header.
    nlohmann::json provenance = nlohmann::json::object();
};

struct StepRecord {
    std::int64_t step = 0;
    int epoch = 0;
    double loss = 0.0;

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double seconds = 0.0;  // wall clock; not saved in checkpoints
};

struct TrainLog {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
};

struct TrainState {
    Model model;
    ad::AdamState adam;
    TrainLog log;
    int epochs_done = 0;
};

struct TrainHooks {
    std::function<void(const StepRecord&)> on_step;
    std::function<void(const EpochRecord&)> on_epoch;
    /// Polled between batches; when set the run stops without checkpointing
    /// the partial epoch.
    const std::atomic<bool>* stop = nullptr;
};

/// Order in which pieces are visited during `epoch` (0-based).
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, int epoch);

TrainState train(std::span<const ScenePiece> pieces, const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Continues from a checkpoint up to cfg.epochs. The checkpoint's variant,
/// seed and batch size must match cfg.
TrainState resume(const std::filesystem::path& checkpoint, std::span<const ScenePiece> pieces,
                  const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Mean weighted loss over a batch, without touching gradients.
double batch_loss(const Model& model, std::span<const ScenePiece> batch);

// ---- checkpoints -------------------------------------------------------------

struct Checkpoint {
    TrainState state;
    nlohmann::json header;
};

/// Magic "TPLAB-CKPT-v1": params (as in TPLAB-PARAMS-v1), Adam moments, step
/// counter, epoch counter and the step log so far.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const TrainConfig& cfg);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch);
/// Highest-numbered checkpoint in dir, or empty path if none.
std::filesystem::path latest_checkpoint(const std::filesystem::path& dir);

}  // namespace tplab
