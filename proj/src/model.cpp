#include "tplab/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "tplab/binio.hpp"
#include "tplab/common.hpp"
#include "tplab/rng.hpp"

namespace tplab {

using ad::Shape;
using ad::Tensor;
using D = ModelDims;

namespace {

constexpr std::string_view kParamsMagic = "TPLAB-PARAMS-v1";

bool has_ego_channel(Variant v) { return v != Variant::InteractionOnly; }
bool has_grid(Variant v) { return v != Variant::VLstm; }

void expect_shape(const Tensor& t, const Shape& want, const char* stage)
{
    if (t.shape() != want) {
        throw contract_error(std::string("shape chain violated at ") + stage + ": expected " + ad::shape_string(want) +
                             ", got " + ad::shape_string(t.shape()));
    }
}

std::string_view slot_source_name(EgoSlotSource s)
{
    return s == EgoSlotSource::LstmHidden ? "lstm" : "fc_e";
}

EgoSlotSource parse_slot_source(const std::string& s)
{
    if (s == "lstm") return EgoSlotSource::LstmHidden;
    if (s == "fc_e") return EgoSlotSource::EgoFeature;
    throw data_error("unknown ego slot source '" + s + "'");
}

}  // namespace

std::string_view variant_name(Variant v)
{
    switch (v) {
    case Variant::CnnLstm: return "CNN-LSTM";
    case Variant::VLstm: return "V-LSTM";
    case Variant::FcLstm: return "FC-LSTM";
    case Variant::InteractionOnly: return "Interaction-only";
    }
    return "?";
}

Variant parse_variant(std::string_view name)
{
    std::string key;
    for (char c : name) {
        if (c == '_') c = '-';
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    for (Variant v : kAllVariants) {
        std::string canon;
        for (char c : variant_name(v)) canon += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (key == canon) return v;
    }
    throw config_error("unknown model variant '" + std::string(name) +
                       "' (expected CNN-LSTM, V-LSTM, FC-LSTM or Interaction-only)");
}

// ---- construction ----------------------------------------------------------------

Model Model::initialize(Variant variant, std::uint64_t seed, ModelOptions options)
{
    Model m(variant, options);
    m.build(seed, true);
    return m;
}

Model Model::zeros(Variant variant, ModelOptions options)
{
    Model m(variant, options);
    m.build(0, false);
    return m;
}

Tensor& Model::add_param(std::string name, Shape shape)
{
    const auto n = ad::numel(shape);
    params_.push_back({std::move(name), Tensor::parameter(std::move(shape), std::vector<double>(n, 0.0))});
    return params_.back().tensor;
}

void Model::build(std::uint64_t seed, bool random)
{
    if (options_.ego_slot == EgoSlotSource::EgoFeature && !(has_ego_channel(variant_) && has_grid(variant_))) {
        throw contract_error(std::string(variant_name(variant_)) + " has no FC_e output to place in the grid");
    }
    const std::size_t dec_in = decoder_input_width();
    struct Spec {
        std::string name;
        Shape shape;
        std::size_t fan_in;  // 0 for biases
    };
    std::vector<Spec> specs = {
        {"emb.weight", {D::embed, D::coord}, D::coord},
        {"emb.bias", {D::embed}, 0},
        {"enc.w_input", {4 * D::enc_hidden, D::embed}, D::embed},
        {"enc.w_hidden", {4 * D::enc_hidden, D::enc_hidden}, D::enc_hidden},
        {"enc.bias", {4 * D::enc_hidden}, 0},
    };
    if (has_ego_channel(variant_)) {
        specs.push_back({"fc_e.weight", {D::ego_feature, D::enc_hidden}, D::enc_hidden});
        specs.push_back({"fc_e.bias", {D::ego_feature}, 0});
    }
    if (variant_ == Variant::CnnLstm || variant_ == Variant::InteractionOnly) {
        const std::size_t k2 = D::kernel * D::kernel;
        specs.push_back({"conv1.kernel", {D::conv1_channels, D::enc_hidden, D::kernel, D::kernel}, D::enc_hidden * k2});
        specs.push_back({"conv1.bias", {D::conv1_channels}, 0});
        specs.push_back(
            {"conv2.kernel", {D::conv2_channels, D::conv1_channels, D::kernel, D::kernel}, D::conv1_channels * k2});
        specs.push_back({"conv2.bias", {D::conv2_channels}, 0});
        specs.push_back({"fc_n.weight", {D::interaction, D::conv2_channels}, D::conv2_channels});
        specs.push_back({"fc_n.bias", {D::interaction}, 0});
    } else if (variant_ == Variant::FcLstm) {
        const std::size_t flat = kGridSlots * D::enc_hidden;
        specs.push_back({"fc_inter.weight", {D::interaction, flat}, flat});
        specs.push_back({"fc_inter.bias", {D::interaction}, 0});
    }
    specs.push_back({"dec.w_input", {4 * D::dec_hidden, dec_in}, dec_in});
    specs.push_back({"dec.w_hidden", {4 * D::dec_hidden, D::dec_hidden}, D::dec_hidden});
    specs.push_back({"dec.bias", {4 * D::dec_hidden}, 0});
    specs.push_back({"head.weight", {D::coord, D::dec_hidden}, D::dec_hidden});
    specs.push_back({"head.bias", {D::coord}, 0});

    Rng rng(mix_seed(seed, 0x1417));
    for (auto& s : specs) {
        Tensor& t = add_param(s.name, s.shape);
        if (random && s.fan_in > 0) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
            for (auto& v : t.mutable_values()) v = rng.uniform(-bound, bound);
        }
    }
}

std::vector<Tensor> Model::parameter_tensors() const
{
    std::vector<Tensor> out;
    for (const auto& p : params_) out.push_back(p.tensor);
    return out;
}

const Tensor& Model::parameter(std::string_view name) const
{
    for (const auto& p : params_)
        if (p.name == name) return p.tensor;
    throw contract_error(std::string(variant_name(variant_)) + " has no parameter '" + std::string(name) + "'");
}

std::size_t Model::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
}

Model Model::clone() const
{
    Model m(variant_, options_);
    for (const auto& p : params_) {
        m.params_.push_back({p.name, Tensor::parameter(p.tensor.shape(),
                                                       std::vector<double>(p.tensor.values().begin(),
                                                                           p.tensor.values().end()))});
    }
    return m;
}

std::size_t Model::decoder_input_width() const
{
    switch (variant_) {
    case Variant::CnnLstm:
    case Variant::FcLstm: return D::interaction + D::ego_feature;
    case Variant::VLstm: return D::ego_feature;
    case Variant::InteractionOnly: return D::interaction;
    }
    return 0;
}

ad::LstmCellParams Model::lstm(std::string_view prefix) const
{
    const std::string p(prefix);
    return {parameter(p + ".w_input"), parameter(p + ".w_hidden"), parameter(p + ".bias")};
}

// ---- stages ---------------------------------------------------------------------

Tensor Model::encode_sequence(std::span<const Point2> history) const
{
    if (history.size() != kHistoryPoints) {
        throw contract_error("encode_sequence: expected " + std::to_string(kHistoryPoints) + " points, got " +
                             std::to_string(history.size()));
    }
    const Tensor& emb_w = parameter("emb.weight");
    const Tensor& emb_b = parameter("emb.bias");
    const auto cell = lstm("enc");
    ad::LstmState state{Tensor::zeros({D::enc_hidden}), Tensor::zeros({D::enc_hidden})};
    for (const auto& p : history) {
        Tensor x = Tensor::constant({2}, {p.x, p.y});
        Tensor e = ad::leaky_relu(ad::affine(x, emb_w, emb_b), D::leaky_slope);
        state = ad::lstm_cell(e, state, cell);
    }
    return state.h;
}

Tensor Model::ego_feature(const Tensor& sequence_encoding) const
{
    return ad::leaky_relu(ad::affine(sequence_encoding, parameter("fc_e.weight"), parameter("fc_e.bias")),
                          D::leaky_slope);
}

Tensor Model::encode_history(std::span<const Point2> history) const
{
    return ego_feature(encode_sequence(history));
}

Tensor Model::build_grid(std::span<const Tensor> encodings)
{
    if (encodings.size() != kGridSlots) {
        throw contract_error("build_grid: expected 9 encodings, got " + std::to_string(encodings.size()));
    }
    const std::size_t channels = encodings[0].size();
    Tensor stacked = ad::reshape(ad::concat(encodings), {kGridSlots, channels});
    return ad::reshape(ad::transpose(stacked), {channels, 3, 3});
}

Tensor Model::extract_interaction(const Tensor& grid, ShapeTrace* trace) const
{
    expect_shape(grid, {D::enc_hidden, 3, 3}, "grid");
    if (variant_ == Variant::FcLstm) {
        Tensor flat = ad::reshape(grid, {ad::numel(grid.shape())});
        if (trace) trace->record("flatten", flat.shape());
        Tensor n = ad::leaky_relu(ad::affine(flat, parameter("fc_inter.weight"), parameter("fc_inter.bias")),
                                  D::leaky_slope);
        expect_shape(n, {D::interaction}, "interaction");
        if (trace) trace->record("interaction", n.shape());
        return n;
    }
    Tensor c1 = ad::leaky_relu(ad::conv2d_valid(grid, parameter("conv1.kernel"), parameter("conv1.bias")),
                               D::leaky_slope);
    expect_shape(c1, {D::conv1_channels, 2, 2}, "conv1");
    if (trace) trace->record("conv1", c1.shape());
    Tensor c2 = ad::leaky_relu(ad::conv2d_valid(c1, parameter("conv2.kernel"), parameter("conv2.bias")),
                               D::leaky_slope);
    expect_shape(c2, {D::conv2_channels, 1, 1}, "conv2");
    if (trace) trace->record("conv2", c2.shape());
    Tensor flat = ad::reshape(c2, {D::conv2_channels});
    if (trace) trace->record("flatten", flat.shape());
    Tensor n = ad::leaky_relu(ad::affine(flat, parameter("fc_n.weight"), parameter("fc_n.bias")), D::leaky_slope);
    expect_shape(n, {D::interaction}, "interaction");
    if (trace) trace->record("interaction", n.shape());
    return n;
}

Tensor Model::decode_future(const Tensor& context) const
{
    if (context.shape() != Shape{decoder_input_width()}) {
        throw contract_error("decode_future: " + std::string(variant_name(variant_)) + " expects a context of width " +
                             std::to_string(decoder_input_width()) + ", got " + ad::shape_string(context.shape()));
    }
    const auto cell = lstm("dec");
    const Tensor& head_w = parameter("head.weight");
    const Tensor& head_b = parameter("head.bias");
    ad::LstmState state{Tensor::zeros({D::dec_hidden}), Tensor::zeros({D::dec_hidden})};
    std::vector<Tensor> steps;
    steps.reserve(kFuturePoints);
    for (std::size_t k = 0; k < kFuturePoints; ++k) {
        state = ad::lstm_cell(context, state, cell);
        steps.push_back(ad::affine(state.h, head_w, head_b));
    }
    return ad::reshape(ad::concat(steps), {kFuturePoints, D::coord});
}

Tensor Model::predict(const ScenePiece& piece, ShapeTrace* trace) const
{
    if (trace) trace->record("histories", {kGridSlots, kHistoryPoints, D::coord});

    const Tensor ego_seq = encode_sequence(piece.ego_history());
    Tensor ego;
    if (has_ego_channel(variant_)) ego = ego_feature(ego_seq);

    Tensor interaction;
    if (has_grid(variant_)) {
        std::vector<Tensor> enc(kGridSlots);
        for (std::size_t s = 0; s < kGridSlots; ++s) {
            enc[s] = (s == kEgoSlot - 1) ? ego_seq : encode_sequence(piece.histories[s]);
        }
        if (trace) trace->record("encodings", {kGridSlots, enc[0].size()});
        for (const auto& e : enc) expect_shape(e, {D::enc_hidden}, "encoding");
        if (options_.ego_slot == EgoSlotSource::EgoFeature) enc[kEgoSlot - 1] = ego;
        Tensor grid = build_grid(enc);
        if (trace) trace->record("grid", grid.shape());
        interaction = extract_interaction(grid, trace);
    } else if (trace) {
        trace->record("encodings", {1, ego_seq.size()});
    }

    Tensor context;
    switch (variant_) {
    case Variant::CnnLstm:
    case Variant::FcLstm: context = ad::concat({interaction, ego}); break;
    case Variant::VLstm: context = ego; break;
    case Variant::InteractionOnly: context = interaction; break;
    }
    expect_shape(context, {decoder_input_width()}, "context");
    if (trace) trace->record("context", context.shape());

    Tensor out = decode_future(context);
    expect_shape(out, {kFuturePoints, D::coord}, "output");
    if (trace) trace->record("output", out.shape());
    return out;
}

Future Model::predict_points(const ScenePiece& piece) const
{
    const Tensor out = predict(piece);
    Future f;
    for (std::size_t k = 0; k < kFuturePoints; ++k) f[k] = {out[2 * k], out[2 * k + 1]};
    return f;
}

Tensor future_tensor(const ScenePiece& piece)
{
    std::vector<double> v;
    v.reserve(2 * kFuturePoints);
    for (const auto& p : piece.future) {
        v.push_back(p.x);
        v.push_back(p.y);
    }
    return Tensor::constant({kFuturePoints, 2}, std::move(v));
}

Tensor piece_loss(const Model& model, const ScenePiece& piece)
{
    return ad::weighted_mse(model.predict(piece), future_tensor(piece));
}

// ---- parameter files -----------------------------------------------------------------

nlohmann::json describe_model(const Model& model)
{
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& p : model.parameters()) tensors.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
    return {{"variant", variant_name(model.variant())},
            {"ego_slot", slot_source_name(model.options().ego_slot)},
            {"tensors", tensors}};
}

std::vector<double> flatten_params(const Model& model)
{
    std::vector<double> out;
    out.reserve(model.parameter_count());
    for (const auto& p : model.parameters()) out.insert(out.end(), p.tensor.values().begin(), p.tensor.values().end());
    return out;
}

Model model_from_payload(Variant variant, ModelOptions options, std::span<const double> payload)
{
    Model m = Model::zeros(variant, options);
    if (payload.size() != m.parameter_count()) {
        throw data_error("parameter payload holds " + std::to_string(payload.size()) + " values, " +
                         std::string(variant_name(variant)) + " needs " + std::to_string(m.parameter_count()));
    }
    std::size_t off = 0;
    for (auto& p : m.params_) {
        auto dst = p.tensor.mutable_values();
        std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(off), dst.size(), dst.begin());
        off += dst.size();
    }
    return m;
}

void check_description(const nlohmann::json& description, const Model& expected, const std::string& origin)
{
    const auto want = describe_model(expected);
    if (description.at("tensors") != want.at("tensors")) {
        throw data_error(origin + ": parameter names or shapes do not match " +
                         std::string(variant_name(expected.variant())));
    }
}

void save_params(const std::filesystem::path& path, const Model& model, const nlohmann::json& provenance)
{
    auto header = describe_model(model);
    header["provenance"] = provenance;
    auto out = binio::open_out(path);
    binio::write_header(out, kParamsMagic, header);
    binio::write_doubles(out, flatten_params(model));
    if (!out) throw data_error(path.string() + ": write failed");
}

Model load_params(const std::filesystem::path& path, nlohmann::json* provenance)
{
    auto in = binio::open_in(path);
    const auto header = binio::read_header(in, kParamsMagic, path);
    try {
        const Variant v = parse_variant(header.at("variant").get<std::string>());
        ModelOptions opts{parse_slot_source(header.at("ego_slot").get<std::string>())};
        Model shape_only = Model::zeros(v, opts);
        check_description(header, shape_only, path.string());
        std::vector<double> payload(shape_only.parameter_count());
        binio::read_doubles(in, payload, path);
        binio::expect_eof(in, path);
        if (provenance) *provenance = header.value("provenance", nlohmann::json::object());
        return model_from_payload(v, opts, payload);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path.string() + ": corrupt params header: " + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw data_error(path.string() + ": " + e.what());
        throw;
    }
}

}  // namespace tplab
