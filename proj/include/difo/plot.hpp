#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "difo/analysis.hpp"

namespace difo {

// Minimal RGB raster with a 24-bit BMP writer; (0, 0) is the top-left pixel.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, rows top to bottom

    Image(int w, int h, std::uint8_t r = 255, std::uint8_t g = 255, std::uint8_t b = 255);
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    void save_bmp(const std::string& path) const;
};

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Reads (x_col, y_col) by header name; empty x_col means the first column and
// empty y_col means every other column (one series each). Throws on a missing
// column, a non-numeric cell, or a CSV with no data rows.
std::vector<Series> read_series(const std::string& csv_path, const std::string& x_col,
                                const std::string& y_col);

// kind "line": one polyline per series; when every series shares identical x
// values and there are at least two, a mean curve with a +-1 std band is drawn
// over faint per-series lines (the seed-overlay view).
// kind "scatter": one dot marker per point.
// kind "heatmap": exactly one reward-grid CSV rendered as resolution^2 cells.
void render_plot(const std::string& kind, const std::vector<std::string>& csv_paths,
                 const std::string& x_col, const std::string& y_col, const std::string& out_path,
                 int width = 900, int height = 600);

void plot_heatmap(const RewardGrid& grid, const std::string& out_path, int cell_px = 6);

}  // namespace difo
