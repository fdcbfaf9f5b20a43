#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "magtrap/geometry.hpp"

namespace magtrap {

// Comma separated table; numbers use the shortest round-trip form.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    CsvTable& add(double v);
    CsvTable& add(const std::string& v);
    void end_row();

    std::string str() const;
    void write(const std::filesystem::path& path) const;
    std::size_t rows() const { return rows_; }

private:
    std::size_t columns_;
    std::size_t filled_ = 0;
    std::size_t rows_ = 0;
    std::string body_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

// Minimal SVG chart: polylines and markers on linear or log-log axes.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string x_label, std::string y_label, bool log_log = false);

    void polyline(const std::vector<Point2>& points, const std::string& color = "#1f77b4");
    void scatter(const std::vector<Point2>& points, const std::string& color = "#d62728");
    // Keep a square aspect ratio (orbit plots).
    void equal_aspect(bool on = true) { equal_aspect_ = on; }

    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    struct Series {
        std::vector<Point2> points;
        std::string color;
        bool markers;
    };
    std::string title_, x_label_, y_label_;
    bool log_log_;
    bool equal_aspect_ = false;
    std::vector<Series> series_;
};

}  // namespace magtrap
