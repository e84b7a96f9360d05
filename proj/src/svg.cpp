#include "fiberplan/svg.hpp"

#include <cstdio>

namespace fiberplan {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

SvgWriter::SvgWriter(const std::string& path, Point2 lo, Point2 hi, double margin, double scale)
    : out_(path), lo_(lo), hi_(hi), margin_(margin), scale_(scale) {
    if (!out_) throw Error("cannot open SVG file '" + path + "'");
    const double w = (hi.x - lo.x + 2 * margin) * scale;
    const double h = (hi.y - lo.y + 2 * margin) * scale;
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\""
         << fmt(h) << "\" viewBox=\"0 0 " << fmt(w) << " " << fmt(h) << "\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

SvgWriter::~SvgWriter() {
    if (!closed_) close();
}

void SvgWriter::polyline(const std::vector<Point2>& pts, const std::string& stroke, double width,
                         bool closed, const std::string& dash) {
    out_ << (closed ? "<polygon points=\"" : "<polyline points=\"");
    for (const Point2& p : pts) out_ << fmt(x(p.x)) << "," << fmt(y(p.y)) << " ";
    out_ << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width * scale_)
         << "\" stroke-linejoin=\"round\" stroke-linecap=\"round\"";
    if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << "\"";
    out_ << "/>\n";
}

void SvgWriter::line(Point2 a, Point2 b, const std::string& stroke, double width,
                     const std::string& dash) {
    out_ << "<line x1=\"" << fmt(x(a.x)) << "\" y1=\"" << fmt(y(a.y)) << "\" x2=\"" << fmt(x(b.x))
         << "\" y2=\"" << fmt(y(b.y)) << "\" stroke=\"" << stroke << "\" stroke-width=\""
         << fmt(width * scale_) << "\"";
    if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << "\"";
    out_ << "/>\n";
}

void SvgWriter::circle(Point2 c, double r, const std::string& fill) {
    out_ << "<circle cx=\"" << fmt(x(c.x)) << "\" cy=\"" << fmt(y(c.y)) << "\" r=\""
         << fmt(r * scale_) << "\" fill=\"" << fill << "\"/>\n";
}

void SvgWriter::text(Point2 at, const std::string& content, double size_mm) {
    out_ << "<text x=\"" << fmt(x(at.x)) << "\" y=\"" << fmt(y(at.y)) << "\" font-size=\""
         << fmt(size_mm * scale_) << "\" font-family=\"sans-serif\">" << content << "</text>\n";
}

void SvgWriter::close() {
    out_ << "</svg>\n";
    out_.close();
    closed_ = true;
}

} // namespace fiberplan
