#pragma once

// Interaction-aware trajectory predictors.
//
//   ego history --Emb--LSTM_enc--FC_e------------------------------+
//                                                                  concat --LSTM_dec x10--head--> 10 x (x, y)
//   9 histories --Emb--LSTM_enc--3x3 grid--conv--conv--FC_N --------+
//
// Emb and LSTM_enc are a single parameter set applied to all nine vehicles.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tplab/autodiff.hpp"
#include "tplab/scene.hpp"

namespace tplab {

enum class Variant {
    CnnLstm,          // full model
    VLstm,            // ego history only
    FcLstm,           // dense layer in place of the convolutional extractor
    InteractionOnly,  // no separate ego channel
};

std::string_view variant_name(Variant v);
/// Accepts the canonical names ("CNN-LSTM", "V-LSTM", "FC-LSTM",
/// "Interaction-only") case-insensitively, with '-' or '_'.
Variant parse_variant(std::string_view name);
inline constexpr Variant kAllVariants[] = {Variant::VLstm, Variant::FcLstm, Variant::InteractionOnly,
                                           Variant::CnnLstm};

struct ModelDims {
    static constexpr std::size_t coord = 2;
    static constexpr std::size_t embed = 16;
    static constexpr std::size_t enc_hidden = 32;
    static constexpr std::size_t ego_feature = 32;
    static constexpr std::size_t conv1_channels = 64;
    static constexpr std::size_t conv2_channels = 128;
    static constexpr std::size_t interaction = 64;
    static constexpr std::size_t dec_hidden = 64;
    static constexpr std::size_t kernel = 2;
    static constexpr double leaky_slope = 0.1;
};

/// Which encoding fills the ego's centre cell of the grid.
enum class EgoSlotSource {
    LstmHidden,  // shared-encoder output, before FC_e
    EgoFeature,  // FC_e output
};

struct ModelOptions {
    EgoSlotSource ego_slot = EgoSlotSource::LstmHidden;
};

struct NamedTensor {
    std::string name;
    ad::Tensor tensor;
};

/// Intermediate shapes of one forward pass, recorded for inspection.
struct ShapeTrace {
    std::vector<std::pair<std::string, ad::Shape>> stages;

    void record(std::string stage, const ad::Shape& s) { stages.emplace_back(std::move(stage), s); }
};

class Model {
public:
    /// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
    static Model initialize(Variant variant, std::uint64_t seed, ModelOptions options = {});
    /// Every parameter set to zero.
    static Model zeros(Variant variant, ModelOptions options = {});

    Variant variant() const { return variant_; }
    const ModelOptions& options() const { return options_; }

    std::span<const NamedTensor> parameters() const { return params_; }
    std::vector<ad::Tensor> parameter_tensors() const;
    const ad::Tensor& parameter(std::string_view name) const;
    std::size_t parameter_count() const;
    /// Deep copy with independent parameter storage.
    Model clone() const;

    std::size_t decoder_input_width() const;

    // ---- stages --------------------------------------------------------------
    /// Final LSTM_enc hidden state over a 16-point history (oldest first).
    ad::Tensor encode_sequence(std::span<const Point2> history) const;
    /// FC_e applied to a sequence encoding.
    ad::Tensor ego_feature(const ad::Tensor& sequence_encoding) const;
    /// encode_sequence followed by FC_e.
    ad::Tensor encode_history(std::span<const Point2> history) const;
    /// Places slot k's encoding at (row, col) = ((k-1)/3, (k-1)%3): [C x 3 x 3].
    static ad::Tensor build_grid(std::span<const ad::Tensor> encodings);
    /// conv -> lrelu -> conv -> lrelu -> flatten -> FC_N -> lrelu (CNN-LSTM and
    /// Interaction-only), or flatten -> dense -> lrelu (FC-LSTM).
    ad::Tensor extract_interaction(const ad::Tensor& grid, ShapeTrace* trace = nullptr) const;
    /// Runs LSTM_dec for 10 steps with the context as input each step: [10 x 2].
    ad::Tensor decode_future(const ad::Tensor& context) const;

    ad::Tensor predict(const ScenePiece& piece, ShapeTrace* trace = nullptr) const;
    /// Forward pass with values only, as a 10 x 2 array.
    Future predict_points(const ScenePiece& piece) const;

private:
    Model(Variant v, ModelOptions o) : variant_(v), options_(o) { }
    void build(std::uint64_t seed, bool random);
    ad::Tensor& add_param(std::string name, ad::Shape shape);
    ad::LstmCellParams lstm(std::string_view prefix) const;

    Variant variant_;
    ModelOptions options_;
    std::vector<NamedTensor> params_;

    friend Model model_from_payload(Variant, ModelOptions, std::span<const double>);
};

/// Target trajectory of a piece as a [10 x 2] constant tensor.
ad::Tensor future_tensor(const ScenePiece& piece);

/// Weighted trajectory loss of one piece.
ad::Tensor piece_loss(const Model& model, const ScenePiece& piece);

// ---- parameter files ----------------------------------------------------------

/// Magic "TPLAB-PARAMS-v1". The header records the variant, options and every
/// tensor name and shape; `provenance` is embedded verbatim.
void save_params(const std::filesystem::path& path, const Model& model, const nlohmann::json& provenance = {});
/// Reconstructs the variant from the header alone; validates names and shapes.
Model load_params(const std::filesystem::path& path, nlohmann::json* provenance = nullptr);

nlohmann::json describe_model(const Model& model);
/// Concatenated parameter values in declaration order.
std::vector<double> flatten_params(const Model& model);
/// Builds a model of the given variant and fills it from a flat payload.
Model model_from_payload(Variant variant, ModelOptions options, std::span<const double> payload);
/// Validates a header description against what the variant requires.
void check_description(const nlohmann::json& description, const Model& expected, const std::string& origin);

}  // namespace tplab
