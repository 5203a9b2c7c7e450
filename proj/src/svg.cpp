#include "sfcast/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace sfcast {

namespace {

constexpr double kWidth = 900;
constexpr double kPanelHeight = 260;
constexpr double kLeft = 60;
constexpr double kRight = 20;
constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
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

struct Panel {
    double top;
    long first;  // month ordinal at the left edge
    long last;
    double lo;
    double hi;

    [[nodiscard]] double x(long ordinal) const {
        const double span = std::max<long>(last - first, 1);
        return kLeft + (kWidth - kLeft - kRight) * static_cast<double>(ordinal - first) / span;
    }
    [[nodiscard]] double y(double v) const {
        const double inner = kPanelHeight - 60;
        return top + 30 + inner * (1.0 - (v - lo) / (hi - lo));
    }
};

void polyline(std::ostringstream& out, const Panel& p, YearMonth start, const VectorXd& values, const char* colour,
              bool dashed) {
    std::string points;
    auto flush = [&]() {
        if (points.empty()) return;
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\""
            << (dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << points << "\"/>\n";
        points.clear();
    };
    for (Index k = 0; k < values.size(); ++k) {
        const long ord = start.ordinal() + k;
        if (std::isnan(values[k]) || ord < p.first || ord > p.last) {
            flush();
            continue;
        }
        if (!points.empty()) points += ' ';
        points += num(p.x(ord)) + "," + num(p.y(values[k]));
    }
    flush();
}

void axes(std::ostringstream& out, const Panel& p, const std::string& label, int label_every) {
    const double bottom = p.y(p.lo);
    out << "<text x=\"" << num(kLeft) << "\" y=\"" << num(p.top + 18) << "\" font-size=\"13\">" << escape(label)
        << "</text>\n";
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
        << num(bottom) << "\" stroke=\"#444\"/>\n";
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(p.y(p.hi)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
        << num(bottom) << "\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = p.lo + (p.hi - p.lo) * i / 4.0;
        out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(p.y(v) + 4)
            << "\" font-size=\"10\" text-anchor=\"end\">" << num(v) << "</text>\n";
    }
    for (long ord = p.first; ord <= p.last; ++ord) {
        const YearMonth ym = YearMonth::from_ordinal(ord);
        if ((ord - p.first) % label_every != 0) continue;
        out << "<text x=\"" << num(p.x(ord)) << "\" y=\"" << num(bottom + 16)
            << "\" font-size=\"10\" text-anchor=\"middle\">" << ym.to_string() << "</text>\n";
    }
}

}  // namespace

std::string forecast_svg(const ForecastPlot& plot) {
    const TimeSeries& h = plot.history;
    Index horizon = 0;
    for (const auto& [label, values] : plot.predictions) horizon = std::max(horizon, values.size());
    const YearMonth test_end = plot.test_start.plus(std::max<Index>(horizon, 1) - 1);

    double lo = 0.0;
    double hi = 1.0;
    bool any = false;
    auto widen = [&](const VectorXd& v) {
        for (Index k = 0; k < v.size(); ++k) {
            if (std::isnan(v[k])) continue;
            lo = any ? std::min(lo, v[k]) : v[k];
            hi = any ? std::max(hi, v[k]) : v[k];
            any = true;
        }
    };
    widen(h.values());
    for (const auto& [label, values] : plot.predictions) widen(values);
    lo = std::min(lo, 0.0);
    if (hi <= lo) hi = lo + 1.0;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
        << num(2 * kPanelHeight + 40) << "\" font-family=\"sans-serif\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const Panel whole{0.0, h.start().ordinal(), std::max(h.end().ordinal(), test_end.ordinal()), lo, hi};
    axes(out, whole, plot.title + ": observed series", kMonthsPerYear);
    polyline(out, whole, h.start(), h.values(), "#000000", false);

    const Panel zoom{kPanelHeight, plot.test_start.ordinal(), test_end.ordinal(), lo, hi};
    axes(out, zoom, "test window: observed (solid) vs predicted (dashed)", 1);
    polyline(out, zoom, h.start(), h.values(), "#000000", false);

    double legend_x = kLeft + 330;
    std::size_t colour = 0;
    for (const auto& [label, values] : plot.predictions) {
        const char* c = kPalette[colour++ % std::size(kPalette)];
        polyline(out, whole, plot.test_start, values, c, true);
        polyline(out, zoom, plot.test_start, values, c, true);
        out << "<line x1=\"" << num(legend_x) << "\" y1=\"" << num(kPanelHeight + 14) << "\" x2=\"" << num(legend_x + 24)
            << "\" y2=\"" << num(kPanelHeight + 14) << "\" stroke=\"" << c << "\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
        out << "<text x=\"" << num(legend_x + 28) << "\" y=\"" << num(kPanelHeight + 18) << "\" font-size=\"11\">"
            << escape(label) << "</text>\n";
        legend_x += 110;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace sfcast
