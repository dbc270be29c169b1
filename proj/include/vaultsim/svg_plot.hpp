// Minimal deterministic SVG chart emitter for report --plots: bar charts for
// slider gradients and a timeline for cascade events. No styling knobs; the
// output is a static artifact meant for quick inspection and diffing.
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "vaultsim/analytics.hpp"

namespace vaultsim::svg {

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string header(int w, int h, const std::string& title) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
                    "\" height=\"" + std::to_string(h) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"16\" y=\"24\" font-family=\"monospace\" font-size=\"16\">" + title +
         "</text>\n";
    return s;
}

} // namespace detail

inline std::string bar_chart(const std::string& title,
                             const std::vector<std::pair<std::string, double>>& bars,
                             const std::string& unit = "") {
    const int W = 640, H = 400, left = 60, bottom = 40, top = 48;
    double maxv = 1e-12;
    for (const auto& [label, v] : bars) maxv = std::max(maxv, v);
    std::string s = detail::header(W, H, title);
    double plot_h = H - top - bottom;
    double bw = double(W - left - 20) / double(std::max<std::size_t>(bars.size(), 1));
    for (std::size_t i = 0; i < bars.size(); ++i) {
        double h = plot_h * bars[i].second / maxv;
        double x = left + double(i) * bw + bw * 0.15;
        double y = top + plot_h - h;
        s += "<rect x=\"" + detail::num(x) + "\" y=\"" + detail::num(y) + "\" width=\"" +
             detail::num(bw * 0.7) + "\" height=\"" + detail::num(h) +
             "\" fill=\"#4878a8\"/>\n";
        s += "<text x=\"" + detail::num(x + bw * 0.35) + "\" y=\"" + detail::num(H - 20) +
             "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">" +
             bars[i].first + "</text>\n";
        s += "<text x=\"" + detail::num(x + bw * 0.35) + "\" y=\"" + detail::num(y - 4) +
             "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">" +
             detail::num(bars[i].second * 100.0) + (unit.empty() ? "" : unit) + "</text>\n";
    }
    s += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + detail::num(top + plot_h) +
         "\" x2=\"" + std::to_string(W - 20) + "\" y2=\"" + detail::num(top + plot_h) +
         "\" stroke=\"black\"/>\n";
    s += "</svg>\n";
    return s;
}

inline std::string cascade_timeline(const std::string& title,
                                    const std::vector<CascadeEvent>& events) {
    const int W = 800, H = 360, left = 60, bottom = 48, top = 48;
    std::string s = detail::header(W, H, title);
    if (!events.empty()) {
        i64 t0 = events.front().start_ms, t1 = events.front().end_ms;
        u64 vmax = 1;
        for (const auto& e : events) {
            t0 = std::min(t0, e.start_ms);
            t1 = std::max(t1, e.end_ms);
            vmax = std::max(vmax, e.vault_count);
        }
        double span = double(std::max<i64>(t1 - t0, 1));
        double plot_w = W - left - 30, plot_h = H - top - bottom;
        for (const auto& e : events) {
            double x = left + plot_w * double(e.start_ms - t0) / span;
            double w = std::max(2.0, plot_w * double(e.end_ms - e.start_ms) / span);
            double h = plot_h * double(e.vault_count) / double(vmax);
            s += "<rect x=\"" + detail::num(x) + "\" y=\"" + detail::num(top + plot_h - h) +
                 "\" width=\"" + detail::num(w) + "\" height=\"" + detail::num(h) +
                 "\" fill=\"#a85048\" fill-opacity=\"0.7\"/>\n";
        }
        s += "<text x=\"16\" y=\"" + detail::num(top + 12) +
             "\" font-family=\"monospace\" font-size=\"11\">vaults (max " +
             std::to_string(vmax) + ")</text>\n";
    } else {
        s += "<text x=\"16\" y=\"60\" font-family=\"monospace\" font-size=\"13\">no cascade "
             "events</text>\n";
    }
    s += "</svg>\n";
    return s;
}

} // namespace vaultsim::svg
