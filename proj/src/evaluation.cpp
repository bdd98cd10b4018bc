#include "tplab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tplab/common.hpp"

namespace tplab {

namespace {

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

std::array<double, 5> HorizonReport::horizons() const
{
    return {rmse_m[1], rmse_m[3], rmse_m[5], rmse_m[7], rmse_m[9]};
}

HorizonReport rmse_report(std::span<const Future> predictions, std::span<const Future> truths)
{
    if (predictions.size() != truths.size()) throw contract_error("rmse_report: prediction/truth count mismatch");
    if (predictions.empty()) throw contract_error("rmse_report: empty test set");
    HorizonReport r;
    r.n = predictions.size();
    std::array<double, kFuturePoints> sse{};
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        for (std::size_t k = 0; k < kFuturePoints; ++k) {
            const double dx = predictions[i][k].x - truths[i][k].x;
            const double dy = predictions[i][k].y - truths[i][k].y;
            sse[k] += dx * dx + dy * dy;
        }
    }
    for (std::size_t k = 0; k < kFuturePoints; ++k) r.rmse_m[k] = std::sqrt(sse[k] / static_cast<double>(r.n));
    return r;
}

HorizonReport evaluate(const Model& model, std::span<const ScenePiece> test)
{
    if (test.empty()) throw contract_error("evaluate: empty test set");
    std::vector<Future> pred, truth;
    pred.reserve(test.size());
    truth.reserve(test.size());
    for (const auto& p : test) {
        pred.push_back(model.predict_points(p));
        truth.push_back(p.future);
    }
    return rmse_report(pred, truth);
}

// ---- comparison -----------------------------------------------------------------

std::vector<ComparisonRow> cited_baselines()
{
    return {
        {"CS-LSTM", {0.61, 1.27, 2.09, 3.10, 4.37}, true},
        {"SCALE-Net", {0.459, 1.156, 1.973, 2.911, std::nullopt}, true},
        {"MATF GAN", {0.66, 1.34, 2.08, 2.97, 4.13}, true},
    };
}

std::vector<ComparisonRow> published_variant_results()
{
    return {
        {"V-LSTM", {0.7393, 1.7887, 3.1321, 4.8683, 6.9017}, true},
        {"FC-LSTM", {0.657, 1.0567, 1.4399, 1.9374, 2.6296}, true},
        {"Interaction-only", {0.726, 1.0193, 1.3183, 1.7247, 2.4101}, true},
        {"CNN-LSTM", {0.6214, 0.976, 1.2751, 1.6237, 2.272}, true},
    };
}

ComparisonTable compare(std::span<const LabelledReport> reports, bool include_cited)
{
    ComparisonTable table;
    if (include_cited) table.rows = cited_baselines();
    for (const auto& [name, report] : reports) {
        ComparisonRow row{name, {}, false};
        const auto h = report.horizons();
        for (std::size_t c = 0; c < 5; ++c) row.values[c] = h[c];
        table.rows.push_back(std::move(row));
    }
    for (std::size_t c = 0; c < 5; ++c) {
        std::optional<double> best;
        for (const auto& row : table.rows) {
            if (row.cited || !row.values[c]) continue;
            if (!best || *row.values[c] < *best) best = row.values[c];
        }
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            if (!row.cited && row.values[c] && best && *row.values[c] == *best) table.minima[c].push_back(r);
        }
    }
    return table;
}

std::string ComparisonTable::to_text() const
{
    std::ostringstream os;
    std::size_t width = 6;
    for (const auto& r : rows) width = std::max(width, r.name.size() + (r.cited ? 8 : 0));
    os << std::string(width, ' ');
    for (int h = 1; h <= 5; ++h) os << "      " << h << " s  ";
    os << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        std::string label = row.name + (row.cited ? " (cited)" : "");
        os << label << std::string(width - label.size(), ' ');
        for (std::size_t c = 0; c < 5; ++c) {
            const bool is_min = std::find(minima[c].begin(), minima[c].end(), r) != minima[c].end();
            std::string cell = row.values[c] ? fmt("%.4f", *row.values[c]) : std::string("-");
            cell += is_min ? "*" : " ";
            os << std::string(cell.size() < 11 ? 11 - cell.size() : 0, ' ') << cell;
        }
        os << '\n';
    }
    os << "RMSE in meters. * lowest among reproduced rows; (cited) rows are literature values, not reproduced.\n";
    return os.str();
}

std::string ComparisonTable::to_csv() const
{
    std::ostringstream os;
    os << "method,source,rmse_1s,rmse_2s,rmse_3s,rmse_4s,rmse_5s,min_columns\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        os << row.name << ',' << (row.cited ? "cited" : "reproduced");
        for (const auto& v : row.values) os << ',' << (v ? fmt("%.17g", *v) : std::string());
        os << ',';
        bool first = true;
        for (std::size_t c = 0; c < 5; ++c) {
            if (std::find(minima[c].begin(), minima[c].end(), r) != minima[c].end()) {
                os << (first ? "" : ";") << (c + 1) << "s";
                first = false;
            }
        }
        os << '\n';
    }
    return os.str();
}

std::string report_csv(const HorizonReport& report)
{
    std::ostringstream os;
    os << "step,time_s,rmse_m,n\n";
    for (std::size_t k = 0; k < kFuturePoints; ++k) {
        os << (k + 1) << ',' << fmt("%.1f", 0.5 * static_cast<double>(k + 1)) << ',' << fmt("%.17g", report.rmse_m[k])
           << ',' << report.n << '\n';
    }
    return os.str();
}

// ---- scenario plots ---------------------------------------------------------------

namespace {

constexpr double kCanvasW = 560, kCanvasH = 760;
constexpr double kLeft = 70, kTop = 50, kPlotW = 300, kPlotH = 640;

const char* const kPredictionColors[] = {"#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

double nice_step(double range)
{
    const double raw = range / 8.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10.0 * mag;
}

std::string num(double v) { return fmt("%.2f", v); }

std::string xml_escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string triangle(double cx, double cy, double r, const char* fill)
{
    return "<polygon points=\"" + num(cx) + "," + num(cy - r) + " " + num(cx - r) + "," + num(cy + r) + " " +
           num(cx + r) + "," + num(cy + r) + "\" fill=\"" + fill + "\"/>";
}

}  // namespace

PlotFrame plot_frame(const ScenePiece& piece, std::span<const LabelledPrediction> predictions)
{
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    auto take = [&](const Point2& p) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    };
    for (const auto& h : piece.histories)
        for (const auto& p : h) take(p);
    for (const auto& p : piece.future) take(p);
    for (const auto& [name, f] : predictions)
        for (const auto& p : f) take(p);
    const double padx = std::max(1.0, 0.08 * (xmax - xmin));
    const double pady = std::max(2.0, 0.05 * (ymax - ymin));
    return {xmin - padx, xmax + padx, ymin - pady, ymax + pady, kLeft, kTop, kPlotW, kPlotH};
}

std::string render_scenario(const ScenePiece& piece, std::span<const LabelledPrediction> predictions,
                            const std::string& title)
{
    const PlotFrame f = plot_frame(piece, predictions);
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvasW << "\" height=\"" << kCanvasH
       << "\" viewBox=\"0 0 " << kCanvasW << " " << kCanvasH << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty()) os << "<text x=\"" << num(kLeft) << "\" y=\"24\" font-size=\"13\">" << xml_escape(title) << "</text>\n";

    // Axes and ticks.
    os << "<g id=\"axes\" stroke=\"#444\" stroke-width=\"1\">\n"
       << "<rect x=\"" << num(f.left) << "\" y=\"" << num(f.top) << "\" width=\"" << num(f.width) << "\" height=\""
       << num(f.height) << "\" fill=\"none\"/>\n";
    const double xs = nice_step(f.x_max - f.x_min), ys = nice_step(f.y_max - f.y_min);
    for (double x = std::ceil(f.x_min / xs) * xs; x <= f.x_max; x += xs) {
        os << "<line x1=\"" << num(f.px(x)) << "\" y1=\"" << num(f.top + f.height) << "\" x2=\"" << num(f.px(x))
           << "\" y2=\"" << num(f.top + f.height + 5) << "\"/>"
           << "<text stroke=\"none\" text-anchor=\"middle\" x=\"" << num(f.px(x)) << "\" y=\""
           << num(f.top + f.height + 18) << "\">" << fmt("%g", std::abs(x) < 1e-9 ? 0.0 : x) << "</text>\n";
    }
    for (double y = std::ceil(f.y_min / ys) * ys; y <= f.y_max; y += ys) {
        os << "<line x1=\"" << num(f.left - 5) << "\" y1=\"" << num(f.py(y)) << "\" x2=\"" << num(f.left)
           << "\" y2=\"" << num(f.py(y)) << "\"/>"
           << "<text stroke=\"none\" text-anchor=\"end\" x=\"" << num(f.left - 8) << "\" y=\"" << num(f.py(y) + 4)
           << "\">" << fmt("%g", std::abs(y) < 1e-9 ? 0.0 : y) << "</text>\n";
    }
    os << "</g>\n"
       << "<text x=\"" << num(f.left + f.width / 2) << "\" y=\"" << num(f.top + f.height + 36)
       << "\" text-anchor=\"middle\">lateral position (m)</text>\n"
       << "<text transform=\"translate(20," << num(f.top + f.height / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">longitudinal position (m)</text>\n";

    // Histories: one marker per sampled point so spacing reflects speed.
    os << "<g id=\"nbrs-hist\">\n";
    for (std::size_t s = 0; s < kGridSlots; ++s) {
        if (s == kEgoSlot - 1) continue;
        for (const auto& p : piece.histories[s]) os << triangle(f.px(p.x), f.py(p.y), 3.0, "#8c8c8c") << '\n';
    }
    os << "</g>\n<g id=\"ego-hist\">\n";
    for (const auto& p : piece.ego_history()) os << triangle(f.px(p.x), f.py(p.y), 3.5, "#d62728") << '\n';
    os << "</g>\n";

    auto polyline = [&](const Future& fut, const char* color, const char* id, bool include_origin) {
        os << "<g id=\"" << id << "\"><polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        if (include_origin) os << num(f.px(0.0)) << "," << num(f.py(0.0)) << " ";
        for (const auto& p : fut) os << num(f.px(p.x)) << "," << num(f.py(p.y)) << " ";
        os << "\"/>";
        for (const auto& p : fut)
            os << "<circle cx=\"" << num(f.px(p.x)) << "\" cy=\"" << num(f.py(p.y)) << "\" r=\"2.5\" fill=\"" << color
               << "\"/>";
        os << "</g>\n";
    };
    polyline(piece.future, "#2ca02c", "gt-fut", true);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const std::string id = "pred-" + std::to_string(i);
        polyline(predictions[i].second, kPredictionColors[i % std::size(kPredictionColors)], id.c_str(), true);
    }

    os << "<g id=\"origin\"><line x1=\"" << num(f.px(0) - 6) << "\" y1=\"" << num(f.py(0)) << "\" x2=\""
       << num(f.px(0) + 6) << "\" y2=\"" << num(f.py(0)) << "\" stroke=\"black\"/><line x1=\"" << num(f.px(0))
       << "\" y1=\"" << num(f.py(0) - 6) << "\" x2=\"" << num(f.px(0)) << "\" y2=\"" << num(f.py(0) + 6)
       << "\" stroke=\"black\"/></g>\n";

    // Legend.
    const double lx = f.left + f.width + 20;
    double ly = f.top + 10;
    os << "<g id=\"legend\">\n";
    auto entry = [&](const std::string& label, const char* color, bool marker) {
        if (marker) {
            os << triangle(lx + 8, ly - 4, 4.0, color);
        } else {
            os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 16) << "\" y2=\""
               << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
        }
        os << "<text x=\"" << num(lx + 22) << "\" y=\"" << num(ly) << "\">" << xml_escape(label) << "</text>\n";
        ly += 18;
    };
    entry("Ego hist", "#d62728", true);
    entry("Nbrs hist", "#8c8c8c", true);
    entry("GT fut", "#2ca02c", false);
    for (std::size_t i = 0; i < predictions.size(); ++i)
        entry(predictions[i].first, kPredictionColors[i % std::size(kPredictionColors)], false);
    os << "</g>\n</svg>\n";
    return os.str();
}

}  // namespace tplab
