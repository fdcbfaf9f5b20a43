#include "magtrap/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "magtrap/error.hpp"
#include "magtrap/expr.hpp"

namespace magtrap {

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) body_ += ',';
        body_ += header[i];
    }
    body_ += '\n';
}

CsvTable& CsvTable::add(double v) { return add(format_number(v)); }

CsvTable& CsvTable::add(const std::string& v) {
    if (filled_ == columns_) throw Error(Errc::invalid_argument, "csv row has too many fields");
    if (filled_) body_ += ',';
    body_ += v;
    ++filled_;
    return *this;
}

void CsvTable::end_row() {
    if (filled_ != columns_) throw Error(Errc::invalid_argument, "csv row has too few fields");
    body_ += '\n';
    filled_ = 0;
    ++rows_;
}

std::string CsvTable::str() const { return body_; }

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, body_); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::invalid_argument, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(Errc::invalid_argument, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label, bool log_log)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)), log_log_(log_log) {}

void SvgPlot::polyline(const std::vector<Point2>& points, const std::string& color) {
    series_.push_back({points, color, false});
}

void SvgPlot::scatter(const std::vector<Point2>& points, const std::string& color) {
    series_.push_back({points, color, true});
}

namespace {

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string tick(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
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

}  // namespace

std::string SvgPlot::str() const {
    constexpr double width = 640, height = 480, left = 70, right = 20, top = 40, bottom = 50;
    auto map_x = [&](double v) { return log_log_ ? std::log10(v) : v; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series_) {
        for (const auto& p : s.points) {
            if (log_log_ && (!(p.x > 0) || !(p.y > 0))) continue;
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
            x0 = std::min(x0, map_x(p.x));
            x1 = std::max(x1, map_x(p.x));
            y0 = std::min(y0, map_x(p.y));
            y1 = std::max(y1, map_x(p.y));
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 <= 0) y0 -= 0.5, y1 += 0.5;
    const double pad_x = 0.05 * (x1 - x0), pad_y = 0.05 * (y1 - y0);
    x0 -= pad_x, x1 += pad_x, y0 -= pad_y, y1 += pad_y;
    double plot_w = width - left - right, plot_h = height - top - bottom;
    if (equal_aspect_) {
        const double scale = std::min(plot_w / (x1 - x0), plot_h / (y1 - y0));
        plot_w = scale * (x1 - x0);
        plot_h = scale * (y1 - y0);
    }
    auto px = [&](double v) { return left + (map_x(v) - x0) / (x1 - x0) * plot_w; };
    auto py = [&](double v) { return top + plot_h - (map_x(v) - y0) / (y1 - y0) * plot_h; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
           fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fixed(width / 2, 0) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
           escape(title_) + "</text>\n";
    out += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(plot_w) + "\" height=\"" +
           fixed(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        const double vx = log_log_ ? std::pow(10.0, fx) : fx, vy = log_log_ ? std::pow(10.0, fy) : fy;
        const double sx = left + plot_w * i / 4.0, sy = top + plot_h - plot_h * i / 4.0;
        out += "<text x=\"" + fixed(sx) + "\" y=\"" + fixed(top + plot_h + 16) +
               "\" text-anchor=\"middle\" font-size=\"11\">" + tick(vx) + "</text>\n";
        out += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(sy + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + tick(vy) + "</text>\n";
    }
    out += "<text x=\"" + fixed(left + plot_w / 2) + "\" y=\"" + fixed(top + plot_h + 38) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + escape(x_label_) + "</text>\n";
    out += "<text x=\"16\" y=\"" + fixed(top + plot_h / 2) + "\" text-anchor=\"middle\" font-size=\"13\" " +
           "transform=\"rotate(-90 16 " + fixed(top + plot_h / 2) + ")\">" + escape(y_label_) + "</text>\n";
    for (const auto& s : series_) {
        if (s.markers) {
            for (const auto& p : s.points) {
                if (log_log_ && (!(p.x > 0) || !(p.y > 0))) continue;
                out += "<circle cx=\"" + fixed(px(p.x)) + "\" cy=\"" + fixed(py(p.y)) + "\" r=\"3.5\" fill=\"" +
                       s.color + "\"/>\n";
            }
        } else {
            out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1\" points=\"";
            bool first = true;
            for (const auto& p : s.points) {
                if (log_log_ && (!(p.x > 0) || !(p.y > 0))) continue;
                if (!first) out += ' ';
                out += fixed(px(p.x)) + "," + fixed(py(p.y));
                first = false;
            }
            out += "\"/>\n";
        }
    }
    out += "</svg>\n";
    return out;
}

void SvgPlot::write(const std::filesystem::path& path) const { write_text(path, str()); }

}  // namespace magtrap
