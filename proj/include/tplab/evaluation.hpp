#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tplab/model.hpp"
#include "tplab/scene.hpp"

namespace tplab {

/// Root-mean-square Euclidean error per predicted step, in meters.
struct HorizonReport {
    std::array<double, kFuturePoints> rmse_m{};
    std::size_t n = 0;

    /// Single-step RMSE at 1, 2, 3, 4, 5 s (steps 2, 4, 6, 8, 10).
    std::array<double, 5> horizons() const;

    friend bool operator==(const HorizonReport&, const HorizonReport&) = default;
};

HorizonReport rmse_report(std::span<const Future> predictions, std::span<const Future> truths);

HorizonReport evaluate(const Model& model, std::span<const ScenePiece> test);

/// One row per labelled report; `cited` rows are literature values that were
/// not reproduced here.
struct ComparisonRow {
    std::string name;
    std::array<std::optional<double>, 5> values;
    bool cited = false;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    /// Per column, indices of non-cited rows attaining the minimum.
    std::array<std::vector<std::size_t>, 5> minima;

    std::string to_text() const;
    std::string to_csv() const;
};

using LabelledReport = std::pair<std::string, HorizonReport>;

/// Rows in input order. Minima are flagged among the reproduced rows only.
ComparisonTable compare(std::span<const LabelledReport> reports, bool include_cited = true);

/// Literature baselines, 1-5 s RMSE in meters (SCALE-Net reports no 5 s value).
std::vector<ComparisonRow> cited_baselines();
/// Published values for the four implemented variants, for side-by-side printing.
std::vector<ComparisonRow> published_variant_results();

/// step, time_s, rmse_m for all 10 steps.
std::string report_csv(const HorizonReport& report);

using LabelledPrediction = std::pair<std::string, Future>;

/// Standalone SVG: lateral position horizontal, longitudinal vertical, meters,
/// all trajectories in the ego-centred frame.
std::string render_scenario(const ScenePiece& piece, std::span<const LabelledPrediction> predictions,
                            const std::string& title = {});

/// Layout of a rendered scenario, exposed for coordinate checks.
struct PlotFrame {
    double x_min, x_max, y_min, y_max;  // meters
    double left, top, width, height;    // pixels

    double px(double x_m) const { return left + (x_m - x_min) / (x_max - x_min) * width; }
    double py(double y_m) const { return top + (y_max - y_m) / (y_max - y_min) * height; }
};

PlotFrame plot_frame(const ScenePiece& piece, std::span<const LabelledPrediction> predictions);

}  // namespace tplab
