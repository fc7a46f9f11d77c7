// Static SVG rendering of per-frame probability timelines: one panel per
// checkpoint, the decision threshold as a dashed line, the accident frame
// as a vertical marker, and a dot at the first threshold crossing.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "foresight/serialize.hpp"

namespace foresight {

struct PlotSeries {
    std::string title;
    std::vector<double> probs;
};

namespace detail {

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace detail

// Panels share the axes: x spans [0, frames/fps] seconds, y spans [0, 1].
inline void write_probability_svg(const std::vector<PlotSeries>& panels, double fps,
                                  std::size_t accident_frame, double threshold,
                                  const std::string& path) {
    if (panels.empty()) throw domain_error("plot: no series given");
    const double panel_w = 360.0, panel_h = 240.0;
    const double margin_l = 48.0, margin_r = 16.0, margin_t = 28.0, margin_b = 40.0;
    const double plot_w = panel_w - margin_l - margin_r;
    const double plot_h = panel_h - margin_t - margin_b;
    const std::size_t frames = panels.front().probs.size();
    const double duration = static_cast<double>(frames) / fps;

    std::ofstream out = open_output(path);
    const double total_w = panel_w * static_cast<double>(panels.size());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w
        << "\" height=\"" << panel_h << "\" viewBox=\"0 0 " << total_w << ' '
        << panel_h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const PlotSeries& s = panels[pi];
        const double ox = static_cast<double>(pi) * panel_w + margin_l;
        const double oy = margin_t;
        auto x_of = [&](double seconds) {
            return ox + seconds / duration * plot_w;
        };
        auto y_of = [&](double p) { return oy + (1.0 - p) * plot_h; };

        out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
        out << "<text x=\"" << detail::svg_num(ox + plot_w / 2) << "\" y=\"16\" "
            << "text-anchor=\"middle\" font-size=\"13\">" << s.title << "</text>\n";
        // frame
        out << "<rect x=\"" << detail::svg_num(ox) << "\" y=\"" << detail::svg_num(oy)
            << "\" width=\"" << detail::svg_num(plot_w) << "\" height=\""
            << detail::svg_num(plot_h)
            << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
        // axis labels and ticks
        out << "<text x=\"" << detail::svg_num(ox + plot_w / 2) << "\" y=\""
            << detail::svg_num(oy + plot_h + 30)
            << "\" text-anchor=\"middle\">time (s)</text>\n";
        out << "<text x=\"" << detail::svg_num(ox - 34) << "\" y=\""
            << detail::svg_num(oy + plot_h / 2) << "\" transform=\"rotate(-90 "
            << detail::svg_num(ox - 34) << ' ' << detail::svg_num(oy + plot_h / 2)
            << ")\" text-anchor=\"middle\">p_t</text>\n";
        for (double tick : {0.0, 0.5, 1.0}) {
            out << "<text x=\"" << detail::svg_num(ox - 6) << "\" y=\""
                << detail::svg_num(y_of(tick) + 4)
                << "\" text-anchor=\"end\">" << detail::svg_num(tick) << "</text>\n";
        }
        out << "<text x=\"" << detail::svg_num(ox) << "\" y=\""
            << detail::svg_num(oy + plot_h + 14) << "\" text-anchor=\"middle\">0</text>\n";
        out << "<text x=\"" << detail::svg_num(ox + plot_w) << "\" y=\""
            << detail::svg_num(oy + plot_h + 14) << "\" text-anchor=\"middle\">"
            << detail::svg_num(duration) << "</text>\n";

        // threshold line
        out << "<line x1=\"" << detail::svg_num(ox) << "\" y1=\""
            << detail::svg_num(y_of(threshold)) << "\" x2=\""
            << detail::svg_num(ox + plot_w) << "\" y2=\""
            << detail::svg_num(y_of(threshold))
            << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";

        // accident frame marker (1-based frame index)
        if (accident_frame >= 1) {
            const double ax = x_of(static_cast<double>(accident_frame - 1) / fps);
            out << "<line x1=\"" << detail::svg_num(ax) << "\" y1=\""
                << detail::svg_num(oy) << "\" x2=\"" << detail::svg_num(ax)
                << "\" y2=\"" << detail::svg_num(oy + plot_h)
                << "\" stroke=\"red\" stroke-width=\"1.5\"/>\n";
        }

        // probability polyline
        out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
        for (std::size_t t = 0; t < s.probs.size(); ++t) {
            if (t) out << ' ';
            out << detail::svg_num(x_of(static_cast<double>(t) / fps)) << ','
                << detail::svg_num(y_of(s.probs[t]));
        }
        out << "\"/>\n";

        // first-crossing alarm marker
        for (std::size_t t = 0; t < s.probs.size(); ++t) {
            if (s.probs[t] >= threshold) {
                out << "<circle cx=\""
                    << detail::svg_num(x_of(static_cast<double>(t) / fps)) << "\" cy=\""
                    << detail::svg_num(y_of(s.probs[t]))
                    << "\" r=\"4\" fill=\"#d62728\"/>\n";
                break;
            }
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
    if (!out) throw io_error("write failed: " + path);
}

} // namespace foresight
