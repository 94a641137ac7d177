#include "svg.hpp"

#include "qpk/errors.hpp"
#include "qpk/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qpk::svg {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 24.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                          "#bcbd22", "#e377c2", "#aec7e8", "#98df8a"};

std::string esc(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range data_range(const std::vector<Series>& series, bool horizontal) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double v = horizontal ? s.x[i] : s.y[i];
            const double e = (!horizontal && i < s.yerr.size()) ? s.yerr[i] : 0.0;
            lo = std::min(lo, v - e);
            hi = std::max(hi, v + e);
        }
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

std::vector<double> nice_ticks(double lo, double hi, int target) {
    const double span = hi - lo;
    const double raw = span / std::max(target, 2);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (const double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> ticks;
    const double first = std::ceil(lo / step) * step;
    for (double t = first; t <= hi + 1e-12 * span; t += step) {
        ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    }
    return ticks;
}

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

} // namespace

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series) {
    if (series.empty()) {
        throw ParameterError("chart needs at least one series");
    }
    const Range xr = data_range(series, true);
    const Range yr = data_range(series, false);
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    auto sy = [&](double v) { return kTop + plot_h - (v - yr.lo) / (yr.hi - yr.lo) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << esc(title) << "</text>\n";

    for (const double t : nice_ticks(xr.lo, xr.hi, 7)) {
        const double x = sx(t);
        out << "<line x1=\"" << num(x) << "\" y1=\"" << kTop << "\" x2=\"" << num(x) << "\" y2=\""
            << kTop + plot_h << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << num(x) << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(t)
            << "</text>\n";
    }
    for (const double t : nice_ticks(yr.lo, yr.hi, 6)) {
        const double y = sy(t);
        out << "<line x1=\"" << kLeft << "\" y1=\"" << num(y) << "\" x2=\"" << kLeft + plot_w
            << "\" y2=\"" << num(y) << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(t)
            << "</text>\n";
    }
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
        << plot_h << "\" fill=\"none\" stroke=\"#404040\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 14
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << esc(x_label)
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << kTop + plot_h / 2 << ")\">" << esc(y_label)
        << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        for (std::size_t i = 0; i < s.yerr.size() && i < s.x.size(); ++i) {
            if (s.yerr[i] <= 0.0) continue;
            const double x = sx(s.x[i]);
            out << "<line x1=\"" << num(x) << "\" y1=\"" << num(sy(s.y[i] - s.yerr[i]))
                << "\" x2=\"" << num(x) << "\" y2=\"" << num(sy(s.y[i] + s.yerr[i]))
                << "\" stroke=\"" << color << "\" stroke-width=\"1.2\"/>\n";
        }
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            out << num(sx(s.x[i])) << "," << num(sy(s.y[i])) << " ";
        }
        out << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            out << "<circle cx=\"" << num(sx(s.x[i])) << "\" cy=\"" << num(sy(s.y[i]))
                << "\" r=\"2.4\" fill=\"" << color << "\"/>\n";
        }
        const double ly = kTop + 14 + 16 * static_cast<double>(si);
        out << "<line x1=\"" << kLeft + plot_w - 150 << "\" y1=\"" << num(ly - 4) << "\" x2=\""
            << kLeft + plot_w - 128 << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kLeft + plot_w - 122 << "\" y=\"" << num(ly)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(s.name) << "</text>\n";
    }
    out << "</svg>\n";
    io::write_file(path, out.str());
}

} // namespace qpk::svg
