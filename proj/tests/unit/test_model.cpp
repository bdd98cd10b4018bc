#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "support/gradcheck.hpp"
#include "support/pieces.hpp"
#include "tplab/common.hpp"
#include "tplab/model.hpp"

using namespace tplab;
namespace fs = std::filesystem;

namespace {

ad::Shape stage(const ShapeTrace& trace, const std::string& name)
{
    for (const auto& [n, s] : trace.stages)
        if (n == name) return s;
    return {};
}

fs::path temp_path(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "tplab_test_model";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("variants: names round trip", "[model]")
{
    for (auto v : kAllVariants) CHECK(parse_variant(variant_name(v)) == v);
    CHECK(parse_variant("cnn_lstm") == Variant::CnnLstm);
    CHECK(parse_variant("interaction-only") == Variant::InteractionOnly);
    CHECK_THROWS_AS(parse_variant("GRU"), Error);
}

TEST_CASE("CNN-LSTM: forward shape chain", "[model][shapes]")
{
    Rng rng(1);
    const auto m = Model::initialize(Variant::CnnLstm, 1);
    ShapeTrace trace;
    const auto out = m.predict(testing::random_piece(rng), &trace);
    CHECK(stage(trace, "histories") == ad::Shape{9, 16, 2});
    CHECK(stage(trace, "encodings") == ad::Shape{9, 32});
    CHECK(stage(trace, "grid") == ad::Shape{32, 3, 3});
    CHECK(stage(trace, "conv1") == ad::Shape{64, 2, 2});
    CHECK(stage(trace, "conv2") == ad::Shape{128, 1, 1});
    CHECK(stage(trace, "flatten") == ad::Shape{128});
    CHECK(stage(trace, "interaction") == ad::Shape{64});
    CHECK(stage(trace, "context") == ad::Shape{96});
    CHECK(out.shape() == ad::Shape{10, 2});
}

TEST_CASE("variants: decoder widths and parameter counts", "[model]")
{
    // counted layer by layer: emb 48, enc 6272, fc_e 1056, conv1 8256, conv2 32896,
    // fc_n 8256, decoder 4*64*(D+64)+256, head 130
    auto dec = [](std::size_t d) { return 4 * 64 * (d + 64) + 256; };
    const std::size_t shared = 48 + 6272 + 130;

    const auto cnn = Model::initialize(Variant::CnnLstm, 0);
    CHECK(cnn.decoder_input_width() == 96);
    CHECK(cnn.parameter_count() == shared + 1056 + 8256 + 32896 + 8256 + dec(96));
    CHECK(cnn.parameter_count() == 98130);

    const auto v = Model::initialize(Variant::VLstm, 0);
    CHECK(v.decoder_input_width() == 32);
    CHECK(v.parameter_count() == shared + 1056 + dec(32));

    const auto fc = Model::initialize(Variant::FcLstm, 0);
    CHECK(fc.decoder_input_width() == 96);
    CHECK(fc.parameter_count() == shared + 1056 + (288 * 64 + 64) + dec(96));

    const auto io = Model::initialize(Variant::InteractionOnly, 0);
    CHECK(io.decoder_input_width() == 64);
    CHECK(io.parameter_count() == shared + 8256 + 32896 + 8256 + dec(64));
}

TEST_CASE("variants: every variant predicts ten points", "[model]")
{
    Rng rng(2);
    const auto piece = testing::random_piece(rng);
    for (auto v : kAllVariants) {
        const auto m = Model::initialize(v, 3);
        const auto out = m.predict(piece);
        CHECK(out.shape() == ad::Shape{10, 2});
        for (double x : out.values()) CHECK(std::isfinite(x));
    }
}

TEST_CASE("initialization: deterministic, bounded, biases zero", "[model][init]")
{
    const auto a = Model::initialize(Variant::CnnLstm, 42);
    const auto b = Model::initialize(Variant::CnnLstm, 42);
    const auto c = Model::initialize(Variant::CnnLstm, 43);
    CHECK(flatten_params(a) == flatten_params(b));
    CHECK(flatten_params(a) != flatten_params(c));
    for (const auto& p : a.parameters()) {
        const auto& shape = p.tensor.shape();
        if (p.name.ends_with("bias")) {
            for (double x : p.tensor.values()) CHECK(x == 0.0);
            continue;
        }
        std::size_t fan_in = 1;
        for (std::size_t k = 1; k < shape.size(); ++k) fan_in *= shape[k];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double x : p.tensor.values()) CHECK(std::abs(x) <= bound);
    }
}

TEST_CASE("zero model predicts the origin", "[model]")
{
    Rng rng(3);
    for (auto v : kAllVariants) {
        const auto f = Model::zeros(v).predict_points(testing::random_piece(rng));
        for (const auto& p : f) CHECK(p == Point2{0.0, 0.0});
    }
}

TEST_CASE("grid placement: slot k lands at ((k-1)/3, (k-1)%3)", "[model][grid]")
{
    std::vector<ad::Tensor> enc;
    for (std::size_t s = 0; s < 9; ++s) enc.push_back(ad::Tensor::constant({2}, {double(s + 1), -double(s + 1)}));
    const auto g = Model::build_grid(enc);
    REQUIRE(g.shape() == ad::Shape{2, 3, 3});
    for (std::size_t k = 1; k <= 9; ++k) {
        const std::size_t r = NeighborGrid::row_of(k), c = NeighborGrid::col_of(k);
        CHECK(g[(0 * 3 + r) * 3 + c] == double(k));
        CHECK(g[(1 * 3 + r) * 3 + c] == -double(k));
    }
}

TEST_CASE("ego slot option changes the grid centre only", "[model][grid]")
{
    Rng rng(4);
    const auto piece = testing::random_piece(rng);
    ModelOptions fc;
    fc.ego_slot = EgoSlotSource::EgoFeature;
    const auto a = Model::initialize(Variant::CnnLstm, 5);
    const auto b = Model::initialize(Variant::CnnLstm, 5, fc);
    CHECK(flatten_params(a) == flatten_params(b));
    CHECK(a.predict_points(piece) != b.predict_points(piece));
}

TEST_CASE("full model: gradients agree with central differences", "[model][grad]")
{
    Rng rng(6);
    // Difference noise grows with the loss value; a target within about a
    // metre of the untrained output keeps the loss of order one.
    auto piece = testing::random_piece(rng);
    for (auto& p : piece.future) p = {0.02 * p.x, 0.02 * p.y};
    for (auto v : kAllVariants) {
        const auto m = Model::initialize(v, 7);
        auto leaves = m.parameter_tensors();
        // Zero biases put the embedding of the origin point exactly on the
        // leaky-ReLU kink, where differences are meaningless; move off it.
        testing::jitter_biases(m, rng);
        const auto r = testing::check_gradients([&] { return piece_loss(m, piece); }, leaves, 6);
        INFO(variant_name(v) << " worst " << r.worst << " rel " << r.max_rel_error);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("translation invariance: exact world shifts give identical predictions", "[model][invariance]")
{
    std::array<History, kGridSlots> world{};
    Future fut{};
    Rng rng(8);
    auto grid = [](double v) { return std::round(v * 128.0) / 128.0; };
    for (std::size_t s = 0; s < 9; ++s)
        for (std::size_t k = 0; k < 16; ++k)
            world[s][k] = {grid(3.7 * double(s / 3) + rng.uniform(-0.2, 0.2)),
                           grid(200.0 + 10.0 * double(s % 3) + 2.0 * double(k))};
    for (std::size_t k = 0; k < 10; ++k) fut[k] = {world[4][15].x, grid(world[4][15].y + 5.0 * double(k + 1))};

    const auto m = Model::initialize(Variant::CnnLstm, 9);
    const auto base = m.predict_points(center_piece(world, fut));
    for (const auto& [dx, dy] : {std::pair{16.0, 512.0}, std::pair{-8.0, 2048.0}, std::pair{0.5, -128.0}}) {
        auto w2 = world;
        auto f2 = fut;
        for (auto& h : w2)
            for (auto& p : h) p = {p.x + dx, p.y + dy};
        for (auto& p : f2) p = {p.x + dx, p.y + dy};
        CHECK(m.predict_points(center_piece(w2, f2)) == base);
    }
}

TEST_CASE("params file: round trip reconstructs the variant", "[model][io]")
{
    Rng rng(10);
    const auto piece = testing::random_piece(rng);
    for (auto v : kAllVariants) {
        const auto m = Model::initialize(v, 11);
        const auto p = temp_path(std::string(variant_name(v)) + ".params");
        save_params(p, m, {{"dataset_id", "abc"}});
        nlohmann::json prov;
        const auto back = load_params(p, &prov);
        CHECK(back.variant() == v);
        CHECK(flatten_params(back) == flatten_params(m));
        CHECK(back.predict_points(piece) == m.predict_points(piece));
        CHECK(prov.at("dataset_id") == "abc");
    }
}

TEST_CASE("params file: corrupted inputs are data errors", "[model][io]")
{
    const auto m = Model::initialize(Variant::VLstm, 1);
    const auto p = temp_path("trunc.params");
    save_params(p, m);
    fs::resize_file(p, fs::file_size(p) - 8);
    try {
        load_params(p);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Data);
    }

    const auto q = temp_path("garbage.params");
    std::ofstream(q) << "not a params file\n";
    CHECK_THROWS_AS(load_params(q), Error);
}

TEST_CASE("clone: independent storage", "[model]")
{
    auto a = Model::initialize(Variant::VLstm, 1);
    auto b = a.clone();
    CHECK(flatten_params(a) == flatten_params(b));
    auto t = b.parameter_tensors();
    t[0].mutable_values()[0] += 1.0;
    CHECK(flatten_params(a) != flatten_params(b));
}
