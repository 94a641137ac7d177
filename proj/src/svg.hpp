#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace qpk::svg {

/// One polyline with optional symmetric error bars (yerr may be empty).
struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> yerr;
};

/// Minimal self-contained line chart with axes, ticks, legend and error
/// bars. Static output, no external assets.
void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

} // namespace qpk::svg
