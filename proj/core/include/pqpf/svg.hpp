#pragma once

#include <string>

namespace pqpf {

// Minimal deterministic SVG builder for the diagram renderers.
class SvgCanvas {
 public:
  SvgCanvas(int width, int height);

  void rect(double x, double y, double w, double h, const std::string& fill,
            double opacity = 1.0);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, bool dashed = false);
  void polyline(const std::string& points, const std::string& stroke, double width = 1.5);
  void circle(double cx, double cy, double r, const std::string& fill);
  void text(double x, double y, const std::string& content, int size = 11,
            const std::string& anchor = "start");

  void write(const std::string& path) const;
  std::string str() const;

  int width() const { return width_; }
  int height() const { return height_; }

 private:
  int width_, height_;
  std::string body_;
};

}  // namespace pqpf
