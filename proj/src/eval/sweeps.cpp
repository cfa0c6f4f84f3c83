/*
 * Copyright 2026 The fsmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "fsmt/eval/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace fsmt {

const char* sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::SupportSize: return "support_size";
        case SweepAxis::QuerySize: return "query_size";
    }
    return "unknown";
}

std::vector<SweepPointSummary> summarize_sweep_rows(const std::vector<SweepRow>& rows) {
    std::map<std::pair<long, std::string>, std::vector<double>> groups;
    for (const auto& r : rows) groups[{r.size, r.strategy}].push_back(r.bleu);
    std::vector<SweepPointSummary> points;
    points.reserve(groups.size());
    for (const auto& [key, values] : groups) {
        const Stats s = mean_std(values);
        points.push_back({key.first, key.second, s.mean, s.stddev,
                          static_cast<long>(s.n)});
    }
    return points;
}

std::string sweep_to_csv_string(const SweepResult& result) {
    std::string out = "axis,size,strategy,seed,bleu\n";
    char buf[192];
    for (const auto& r : result.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%ld,%s,%llu,%.4f\n",
                      sweep_axis_name(result.axis), r.size, r.strategy.c_str(),
                      static_cast<unsigned long long>(r.seed), r.bleu);
        out += buf;
    }
    return out;
}

void save_sweep_csv(const std::string& path, const SweepResult& result) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write sweep csv: " + path);
    out << sweep_to_csv_string(result);
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

void append(std::string& out, const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    out += buf;
}

}  // namespace

std::string sweep_to_svg_string(const SweepResult& result, const std::string& title) {
    const double W = 720.0, H = 480.0;
    const double ML = 64.0, MR = 24.0, MT = 48.0, MB = 60.0;

    // Axis ranges from the summarized points, padded so marks stay inside.
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    if (!result.points.empty()) {
        xmin = xmax = static_cast<double>(result.points.front().size);
        ymin = ymax = result.points.front().mean_bleu;
        for (const auto& p : result.points) {
            xmin = std::min(xmin, static_cast<double>(p.size));
            xmax = std::max(xmax, static_cast<double>(p.size));
            ymin = std::min(ymin, p.mean_bleu - p.std_bleu);
            ymax = std::max(ymax, p.mean_bleu + p.std_bleu);
        }
    }
    if (xmax == xmin) { xmin -= 1.0; xmax += 1.0; }
    double pad = 0.08 * (ymax - ymin);
    if (pad <= 0.0) pad = 1.0;
    const double ylo = std::max(0.0, ymin - pad);
    const double yhi = ymax + pad;
    const auto px = [&](double size) {
        return ML + (size - xmin) / (xmax - xmin) * (W - ML - MR);
    };
    const auto py = [&](double bleu) {
        return H - MB - (bleu - ylo) / (yhi - ylo) * (H - MT - MB);
    };

    std::string svg;
    append(svg,
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
           "viewBox=\"0 0 %.0f %.0f\">\n",
           W, H, W, H);
    append(svg, "<rect x=\"0\" y=\"0\" width=\"%.0f\" height=\"%.0f\" fill=\"#ffffff\"/>\n",
           W, H);
    append(svg,
           "<text x=\"%.1f\" y=\"26\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">%s</text>\n",
           W / 2.0, title.c_str());

    // Horizontal gridlines with BLEU labels.
    for (int i = 0; i <= 4; ++i) {
        const double v = ylo + (yhi - ylo) * i / 4.0;
        const double y = py(v);
        append(svg,
               "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#dddddd\"/>\n",
               ML, y, W - MR, y);
        append(svg,
               "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-family=\"sans-serif\" "
               "font-size=\"11\">%.1f</text>\n",
               ML - 6.0, y + 4.0, v);
    }

    // One tick per swept size.
    std::set<long> sizes;
    for (const auto& p : result.points) sizes.insert(p.size);
    for (const long s : sizes) {
        const double x = px(static_cast<double>(s));
        append(svg,
               "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#999999\"/>\n",
               x, H - MB, x, H - MB + 5.0);
        append(svg,
               "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">%ld</text>\n",
               x, H - MB + 18.0, s);
    }

    append(svg,
           "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#333333\"/>\n",
           ML, H - MB, W - MR, H - MB);
    append(svg, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#333333\"/>\n",
           ML, MT, ML, H - MB);
    append(svg,
           "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">%s (words)</text>\n",
           (ML + W - MR) / 2.0, H - 16.0, sweep_axis_name(result.axis));
    append(svg,
           "<text x=\"18\" y=\"%.1f\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" transform=\"rotate(-90 18 %.1f)\">BLEU</text>\n",
           (MT + H - MB) / 2.0, (MT + H - MB) / 2.0);

    // Deterministic strategy order for colors and legend.
    std::set<std::string> strategy_set;
    for (const auto& p : result.points) strategy_set.insert(p.strategy);
    std::vector<std::string> strategies(strategy_set.begin(), strategy_set.end());

    for (std::size_t si = 0; si < strategies.size(); ++si) {
        const char* color = kPalette[si % kPaletteSize];
        std::vector<const SweepPointSummary*> line;
        for (const auto& p : result.points)
            if (p.strategy == strategies[si]) line.push_back(&p);
        std::sort(line.begin(), line.end(),
                  [](const SweepPointSummary* a, const SweepPointSummary* b) {
                      return a->size < b->size;
                  });

        std::string pts;
        for (const auto* p : line) {
            char coord[64];
            std::snprintf(coord, sizeof(coord), "%.1f,%.1f ",
                          px(static_cast<double>(p->size)), py(p->mean_bleu));
            pts += coord;
        }
        append(svg,
               "<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"2\"/>\n",
               pts.c_str(), color);
        for (const auto* p : line) {
            const double x = px(static_cast<double>(p->size));
            if (p->std_bleu > 0.0)
                append(svg,
                       "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                       "stroke=\"%s\" stroke-width=\"1\"/>\n",
                       x, py(p->mean_bleu - p->std_bleu), x, py(p->mean_bleu + p->std_bleu),
                       color);
            append(svg, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n", x,
                   py(p->mean_bleu), color);
        }

        const double lx = W - MR - 150.0;
        const double ly = MT + 16.0 + 18.0 * static_cast<double>(si);
        append(svg,
               "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
               "stroke-width=\"2\"/>\n",
               lx, ly - 4.0, lx + 22.0, ly - 4.0, color);
        append(svg,
               "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\">"
               "%s</text>\n",
               lx + 28.0, ly, strategies[si].c_str());
    }

    svg += "</svg>\n";
    return svg;
}

}  // namespace fsmt
