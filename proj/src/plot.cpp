#include "difo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace difo {

namespace {

// 5x7 glyphs for axis labels, one byte per row, bit 4 = leftmost pixel.
struct Glyph {
    char ch;
    std::uint8_t rows[7];
};

const Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {'-', {0x00, 0x00, 0x00, 0x0E, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'e', {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E}},
};

struct Rgb {
    std::uint8_t r, g, b;
};

const Rgb kPalette[] = {
    {31, 119, 180}, {255, 127, 14}, {44, 160, 44},   {214, 39, 40},
    {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127},
};

Rgb palette(std::size_t i) { return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))]; }

Rgb toward_white(Rgb c, double t) {
    auto mix = [&](std::uint8_t v) {
        return static_cast<std::uint8_t>(std::lround(v + (255.0 - v) * t));
    };
    return {mix(c.r), mix(c.g), mix(c.b)};
}

// Piecewise-linear approximation of a perceptually ordered dark-to-bright map.
Rgb colormap(double t) {
    static const Rgb anchors[] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    int k = std::min(3, static_cast<int>(t));
    double f = t - k;
    auto mix = [&](std::uint8_t a, std::uint8_t b) {
        return static_cast<std::uint8_t>(std::lround(a + (b - a) * f));
    };
    return {mix(anchors[k].r, anchors[k + 1].r), mix(anchors[k].g, anchors[k + 1].g),
            mix(anchors[k].b, anchors[k + 1].b)};
}

void draw_text(Image& img, int x, int y, const std::string& text, Rgb c) {
    for (char ch : text) {
        for (const Glyph& gl : kFont) {
            if (gl.ch != ch) continue;
            for (int row = 0; row < 7; ++row)
                for (int col = 0; col < 5; ++col)
                    if (gl.rows[row] & (1 << (4 - col))) img.set(x + col, y + row, c.r, c.g, c.b);
            break;
        }
        x += 6;
    }
}

int text_width(const std::string& text) { return static_cast<int>(text.size()) * 6 - 1; }

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
    int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        img.set(x0, y0, c.r, c.g, c.b);
        if (x0 == x1 && y0 == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void draw_dot(Image& img, int x, int y, Rgb c) {
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) img.set(x + dx, y + dy, c.r, c.g, c.b);
}

struct Frame {
    int x0, y0, x1, y1;  // plot area in pixels, y0 is the top edge
    double xmin, xmax, ymin, ymax;

    int px(double x) const {
        return x0 + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (x1 - x0)));
    }
    int py(double y) const {
        return y1 - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (y1 - y0)));
    }
};

void pad_range(double& lo, double& hi, double frac) {
    if (lo == hi) {
        double d = lo == 0.0 ? 0.5 : std::fabs(lo) * 0.1;
        lo -= d;
        hi += d;
    } else {
        double d = (hi - lo) * frac;
        lo -= d;
        hi += d;
    }
}

Frame make_frame(Image& img, double xmin, double xmax, double ymin, double ymax) {
    Frame fr{56, 12, img.width - 13, img.height - 29, xmin, xmax, ymin, ymax};
    Rgb black{0, 0, 0};
    draw_line(img, fr.x0, fr.y0, fr.x0, fr.y1, black);
    draw_line(img, fr.x0, fr.y1, fr.x1, fr.y1, black);
    for (int k = 0; k <= 4; ++k) {
        double tx = xmin + (xmax - xmin) * k / 4.0;
        double ty = ymin + (ymax - ymin) * k / 4.0;
        int px = fr.px(tx), py = fr.py(ty);
        draw_line(img, px, fr.y1, px, fr.y1 + 3, black);
        draw_line(img, fr.x0 - 3, py, fr.x0, py, black);
        std::string xs = fmt_tick(tx), ys = fmt_tick(ty);
        draw_text(img, px - text_width(xs) / 2, fr.y1 + 6, xs, black);
        draw_text(img, fr.x0 - 6 - text_width(ys), py - 3, ys, black);
    }
    return fr;
}

void check_finite(const Series& s) {
    for (double v : s.x)
        if (!std::isfinite(v))
            throw std::runtime_error("plot: non-finite x value in series " + s.label);
    for (double v : s.y)
        if (!std::isfinite(v))
            throw std::runtime_error("plot: non-finite y value in series " + s.label);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_cell(const std::string& cell, const std::string& path, int lineno) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-numeric cell '" +
                                 cell + "'");
    return v;
}

std::string basename_of(const std::string& path) {
    std::size_t slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace

Image::Image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
    if (w < 1 || h < 1) throw std::invalid_argument("image: dimensions must be positive");
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    }
}

void Image::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || x >= width || y < 0 || y >= height) return;  // clip silently
    std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
}

void Image::save_bmp(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    int row_bytes = width * 3;
    int pad = (4 - row_bytes % 4) % 4;
    std::uint32_t data_size = static_cast<std::uint32_t>((row_bytes + pad) * height);
    std::uint32_t file_size = 54 + data_size;

    std::uint8_t head[54] = {0};
    head[0] = 'B';
    head[1] = 'M';
    auto put32 = [&](int off, std::uint32_t v) {
        head[off] = v & 0xFF;
        head[off + 1] = (v >> 8) & 0xFF;
        head[off + 2] = (v >> 16) & 0xFF;
        head[off + 3] = (v >> 24) & 0xFF;
    };
    put32(2, file_size);
    head[10] = 54;  // pixel data offset
    head[14] = 40;  // BITMAPINFOHEADER
    put32(18, static_cast<std::uint32_t>(width));
    put32(22, static_cast<std::uint32_t>(height));
    head[26] = 1;   // planes
    head[28] = 24;  // bits per pixel
    put32(34, data_size);
    f.write(reinterpret_cast<const char*>(head), 54);

    std::vector<char> row(row_bytes + pad, 0);
    for (int y = height - 1; y >= 0; --y) {
        for (int x = 0; x < width; ++x) {
            std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
            row[x * 3] = static_cast<char>(rgb[i + 2]);      // BGR order
            row[x * 3 + 1] = static_cast<char>(rgb[i + 1]);
            row[x * 3 + 2] = static_cast<char>(rgb[i]);
        }
        f.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<Series> read_series(const std::string& csv_path, const std::string& x_col,
                                const std::string& y_col) {
    std::ifstream f(csv_path);
    if (!f) throw std::runtime_error("cannot open: " + csv_path);
    std::string line;
    if (!std::getline(f, line) || line.empty())
        throw std::runtime_error(csv_path + ": empty CSV (no header)");
    std::vector<std::string> cols = split_csv_line(line);

    auto find_col = [&](const std::string& name) {
        auto it = std::find(cols.begin(), cols.end(), name);
        if (it == cols.end()) {
            std::string have;
            for (const std::string& c : cols) have += (have.empty() ? "" : ", ") + c;
            throw std::runtime_error(csv_path + ": no column '" + name + "' (have: " + have + ")");
        }
        return static_cast<int>(it - cols.begin());
    };

    int xi = x_col.empty() ? 0 : find_col(x_col);
    std::vector<int> yis;
    if (y_col.empty()) {
        for (int c = 0; c < static_cast<int>(cols.size()); ++c)
            if (c != xi) yis.push_back(c);
        if (yis.empty()) throw std::runtime_error(csv_path + ": no y columns besides the x column");
    } else {
        yis.push_back(find_col(y_col));
    }

    std::vector<Series> out(yis.size());
    for (std::size_t k = 0; k < yis.size(); ++k) {
        out[k].label = basename_of(csv_path);
        if (yis.size() > 1) out[k].label += ":" + cols[yis[k]];
    }

    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != cols.size())
            throw std::runtime_error(csv_path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(cols.size()) + " cells, got " +
                                     std::to_string(cells.size()));
        double x = parse_cell(cells[xi], csv_path, lineno);
        for (std::size_t k = 0; k < yis.size(); ++k) {
            out[k].x.push_back(x);
            out[k].y.push_back(parse_cell(cells[yis[k]], csv_path, lineno));
        }
    }
    if (out[0].x.empty()) throw std::runtime_error(csv_path + ": no data rows");
    return out;
}

void plot_heatmap(const RewardGrid& grid, const std::string& out_path, int cell_px) {
    if (cell_px < 1) throw std::invalid_argument("heatmap: cell_px must be >= 1");
    if (static_cast<int>(grid.rewards.size()) != grid.n_cells())
        throw std::invalid_argument("heatmap: incomplete grid");
    double lo = *std::min_element(grid.rewards.begin(), grid.rewards.end());
    double hi = *std::max_element(grid.rewards.begin(), grid.rewards.end());
    double span = hi > lo ? hi - lo : 1.0;

    int side = grid.resolution * cell_px;
    int bar_w = 16;
    Image img(side + bar_w, side);
    for (int i = 0; i < grid.resolution; ++i) {
        for (int j = 0; j < grid.resolution; ++j) {
            Rgb c = colormap((grid.at(i, j) - lo) / span);
            int bx = i * cell_px;
            int by = (grid.resolution - 1 - j) * cell_px;  // s' increases upward
            for (int dy = 0; dy < cell_px; ++dy)
                for (int dx = 0; dx < cell_px; ++dx) img.set(bx + dx, by + dy, c.r, c.g, c.b);
        }
    }
    for (int y = 0; y < side; ++y) {
        Rgb c = colormap(1.0 - static_cast<double>(y) / (side - 1));
        for (int x = side + 4; x < side + bar_w; ++x) img.set(x, y, c.r, c.g, c.b);
    }
    img.save_bmp(out_path);
}

void render_plot(const std::string& kind, const std::vector<std::string>& csv_paths,
                 const std::string& x_col, const std::string& y_col, const std::string& out_path,
                 int width, int height) {
    if (csv_paths.empty()) throw std::invalid_argument("plot: no input CSVs");

    if (kind == "heatmap") {
        if (csv_paths.size() != 1)
            throw std::invalid_argument("plot: heatmap takes exactly one CSV");
        plot_heatmap(read_reward_grid_csv(csv_paths[0]), out_path);
        return;
    }
    if (kind != "line" && kind != "scatter")
        throw std::invalid_argument("plot: unknown kind '" + kind +
                                    "' (valid: line, scatter, heatmap)");

    std::vector<Series> series;
    for (const std::string& path : csv_paths) {
        std::vector<Series> ss = read_series(path, x_col, y_col);
        if (csv_paths.size() > 1 && ss.size() != 1)
            throw std::invalid_argument(
                "plot: pass a y column to pick one series per CSV when overlaying several CSVs");
        for (Series& s : ss) series.push_back(std::move(s));
    }
    for (const Series& s : series) check_finite(s);

    double xmin = series[0].x[0], xmax = xmin, ymin = series[0].y[0], ymax = ymin;
    for (const Series& s : series) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }

    // Seed overlay: identical x vectors across at least two series get a mean
    // curve and +-1 std band instead of just the spaghetti.
    bool banded = series.size() >= 2 && kind == "line";
    for (std::size_t k = 1; banded && k < series.size(); ++k)
        banded = series[k].x == series[0].x;
    std::vector<double> mean, sdev;
    if (banded) {
        std::size_t n = series[0].x.size();
        mean.assign(n, 0.0);
        sdev.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (const Series& s : series) mean[i] += s.y[i];
            mean[i] /= static_cast<double>(series.size());
            double acc = 0;
            for (const Series& s : series) acc += (s.y[i] - mean[i]) * (s.y[i] - mean[i]);
            sdev[i] = std::sqrt(acc / static_cast<double>(series.size() - 1));
            ymin = std::min(ymin, mean[i] - sdev[i]);
            ymax = std::max(ymax, mean[i] + sdev[i]);
        }
    }

    pad_range(xmin, xmax, 0.02);
    pad_range(ymin, ymax, 0.05);
    Image img(width, height);
    Frame fr = make_frame(img, xmin, xmax, ymin, ymax);

    if (banded) {
        Rgb band = toward_white(palette(0), 0.8);
        for (std::size_t i = 0; i + 1 < mean.size(); ++i) {
            int pa = fr.px(series[0].x[i]), pb = fr.px(series[0].x[i + 1]);
            for (int px = std::min(pa, pb); px <= std::max(pa, pb); ++px) {
                double t = pa == pb ? 0.0 : static_cast<double>(px - pa) / (pb - pa);
                double m = mean[i] + (mean[i + 1] - mean[i]) * t;
                double d = sdev[i] + (sdev[i + 1] - sdev[i]) * t;
                int ylo = fr.py(m - d), yhi = fr.py(m + d);
                for (int py = std::min(ylo, yhi); py <= std::max(ylo, yhi); ++py) {
                    if (px >= fr.x0 && px <= fr.x1 && py >= fr.y0 && py <= fr.y1)
                        img.set(px, py, band.r, band.g, band.b);
                }
            }
        }
    }

    for (std::size_t k = 0; k < series.size(); ++k) {
        Rgb c = banded ? toward_white(palette(0), 0.55) : palette(k);
        const Series& s = series[k];
        if (kind == "scatter") {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                draw_dot(img, fr.px(s.x[i]), fr.py(s.y[i]), palette(k));
        } else {
            for (std::size_t i = 0; i + 1 < s.x.size(); ++i)
                draw_line(img, fr.px(s.x[i]), fr.py(s.y[i]), fr.px(s.x[i + 1]),
                          fr.py(s.y[i + 1]), c);
            if (s.x.size() == 1) draw_dot(img, fr.px(s.x[0]), fr.py(s.y[0]), c);
        }
    }
    if (banded) {
        Rgb c = palette(0);
        for (std::size_t i = 0; i + 1 < mean.size(); ++i) {
            draw_line(img, fr.px(series[0].x[i]), fr.py(mean[i]), fr.px(series[0].x[i + 1]),
                      fr.py(mean[i + 1]), c);
            draw_line(img, fr.px(series[0].x[i]), fr.py(mean[i]) + 1, fr.px(series[0].x[i + 1]),
                      fr.py(mean[i + 1]) + 1, c);
        }
    }
    img.save_bmp(out_path);
}

}  // namespace difo
