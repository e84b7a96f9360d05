#pragma once

#include "fiberplan/geometry.hpp"

#include <fstream>
#include <string>

namespace fiberplan {

// Minimal SVG writer: millimeter coordinates, y flipped so +y is up.
class SvgWriter {
public:
    SvgWriter(const std::string& path, Point2 lo, Point2 hi, double margin = 2.0, double scale = 10.0);
    ~SvgWriter();

    void polyline(const std::vector<Point2>& pts, const std::string& stroke, double width,
                  bool closed = false, const std::string& dash = "");
    void line(Point2 a, Point2 b, const std::string& stroke, double width,
              const std::string& dash = "");
    void circle(Point2 c, double r, const std::string& fill);
    void text(Point2 at, const std::string& content, double size_mm = 2.0);
    void close();

private:
    double x(double v) const { return (v - lo_.x + margin_) * scale_; }
    double y(double v) const { return (hi_.y - v + margin_) * scale_; }

    std::ofstream out_;
    Point2 lo_, hi_;
    double margin_;
    double scale_;
    bool closed_{false};
};

} // namespace fiberplan
