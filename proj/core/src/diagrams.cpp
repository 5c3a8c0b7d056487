#include "pqpf/diagrams.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "pqpf/csv.hpp"
#include "pqpf/errors.hpp"
#include "pqpf/svg.hpp"

namespace pqpf::verify {

namespace {

constexpr int kW = 360, kH = 300;
constexpr double kLeft = 48, kRight = 16, kTop = 34, kBottom = 40;

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                               "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

struct Frame {
  double x0, y0, x1, y1;  // data range
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

void axes(SvgCanvas& svg, const Frame& f, const std::string& xlab, const std::string& ylab) {
  svg.line(f.px(f.x0), f.py(f.y0), f.px(f.x1), f.py(f.y0), "black");
  svg.line(f.px(f.x0), f.py(f.y0), f.px(f.x0), f.py(f.y1), "black");
  svg.text(0.5 * (f.px(f.x0) + f.px(f.x1)), kH - 8, xlab, 11, "middle");
  svg.text(14, kTop - 10, ylab, 11, "start");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void write_upit_csv(const std::string& path, const UpitHistogram& hist) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "bin_lo,bin_hi,count,density\n";
  for (int b = 0; b < hist.bins; ++b) {
    out << format_double(double(b) / hist.bins) << ',' << format_double(double(b + 1) / hist.bins)
        << ',' << hist.counts[b] << ',' << format_double(hist.density[b]) << '\n';
  }
}

void write_upit_svg(const std::string& path, const UpitHistogram& hist, const std::string& title,
                    double cut) {
  SvgCanvas svg(kW, kH);
  Frame f{0, 0, 1, cut};
  svg.text(kLeft, 18, title, 12);
  for (int b = 0; b < hist.bins; ++b) {
    double d = std::min(hist.density[b], cut);
    double x0 = f.px(double(b) / hist.bins), x1 = f.px(double(b + 1) / hist.bins);
    svg.rect(x0, f.py(d), x1 - x0 - 0.5, f.py(0) - f.py(d), "#6baed6");
  }
  svg.line(f.px(0), f.py(1.0), f.px(1), f.py(1.0), "black", 1.0, true);
  axes(svg, f, "uPIT", "density");
  svg.text(kW - kRight, 18, "max " + fmt(hist.max_density), 10, "end");
  for (double x : {0.0, 0.5, 1.0}) svg.text(f.px(x), kH - kBottom + 14, fmt(x), 10, "middle");
  for (double y : {0.0, 1.0, 2.0, 3.0}) svg.text(kLeft - 6, f.py(y) + 4, fmt(y), 10, "end");
  svg.write(path);
}

void write_reliability_csv(const std::string& path, const ReliabilityDiagram& diagram) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "bin_lo,bin_hi,mean_pop,event_freq,count,rel_freq\n";
  for (const auto& b : diagram.bins) {
    out << format_double(b.lo) << ',' << format_double(b.hi) << ',' << format_double(b.mean_pop)
        << ',' << format_double(b.event_freq) << ',' << b.count << ','
        << format_double(diagram.total ? double(b.count) / double(diagram.total) : 0.0) << '\n';
  }
}

void write_reliability_svg(const std::string& path, const ReliabilityDiagram& diagram,
                           const std::string& title) {
  SvgCanvas svg(kW, kH);
  Frame f{0, 0, 1, 1};
  svg.text(kLeft, 18, title, 12);
  svg.line(f.px(0), f.py(0), f.px(1), f.py(1), "gray", 1.0, true);
  // PoP value frequencies along the bottom
  for (const auto& b : diagram.bins) {
    if (diagram.total == 0) break;
    double h = 0.18 * double(b.count) / double(diagram.total) / 0.25;  // 25% share fills the strip
    h = std::min(h, 0.18);
    svg.rect(f.px(b.lo), f.py(h), f.px(b.hi) - f.px(b.lo) - 0.5, f.py(0) - f.py(h), "#cccccc");
  }
  std::string pts;
  for (const auto& b : diagram.bins) {
    if (b.count == 0) continue;
    pts += fmt(f.px(b.mean_pop)) + "," + fmt(f.py(b.event_freq)) + " ";
    svg.circle(f.px(b.mean_pop), f.py(b.event_freq), 2.5, "#d62728");
  }
  if (!pts.empty()) svg.polyline(pts, "#d62728");
  axes(svg, f, "forecast probability", "observed frequency");
  for (double x : {0.0, 0.5, 1.0}) svg.text(f.px(x), kH - kBottom + 14, fmt(x), 10, "middle");
  for (double y : {0.0, 0.5, 1.0}) svg.text(kLeft - 6, f.py(y) + 4, fmt(y), 10, "end");
  svg.write(path);
}

void write_murphy_csv(const std::string& path, const MurphyCurve& curve) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "theta,mean_elementary_score\n";
  for (std::size_t i = 0; i < curve.thetas.size(); ++i)
    out << format_double(curve.thetas[i]) << ',' << format_double(curve.scores[i]) << '\n';
  out << "area," << format_double(curve.area) << '\n';
}

void write_murphy_svg(const std::string& path, const MurphyCurve& curve,
                      const std::string& title) {
  double ymax = 1e-9;
  for (double s : curve.scores) ymax = std::max(ymax, s);
  SvgCanvas svg(kW, kH);
  Frame f{0, 0, 1, 1.15 * ymax};
  svg.text(kLeft, 18, title, 12);
  std::string pts;
  for (std::size_t i = 0; i < curve.thetas.size(); ++i)
    pts += fmt(f.px(curve.thetas[i])) + "," + fmt(f.py(curve.scores[i])) + " ";
  if (!pts.empty()) svg.polyline(pts, "#1f77b4");
  axes(svg, f, "cost-loss ratio", "mean elementary score");
  svg.text(kW - kRight, 18, "area " + fmt(curve.area), 10, "end");
  for (double x : {0.0, 0.5, 1.0}) svg.text(f.px(x), kH - kBottom + 14, fmt(x), 10, "middle");
  svg.text(kLeft - 6, f.py(ymax) + 4, fmt(ymax), 10, "end");
  svg.write(path);
}

void write_skill_csv(const std::string& path, const std::string& score,
                     const std::vector<SkillSeries>& series) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "score,method,season,skill\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.seasons.size(); ++i)
      out << score << ',' << s.method << ',' << s.seasons[i] << ','
          << format_double(s.skill[i]) << '\n';
}

void write_skill_svg(const std::string& path, const std::vector<SkillSeries>& series,
                     const std::string& title) {
  double lo = -0.05, hi = 0.05;
  int smin = 0, smax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.seasons.size(); ++i) {
      lo = std::min(lo, s.skill[i]);
      hi = std::max(hi, s.skill[i]);
      smin = first ? s.seasons[i] : std::min(smin, s.seasons[i]);
      smax = first ? s.seasons[i] + 1 : std::max(smax, s.seasons[i]);
      first = false;
    }
  }
  SvgCanvas svg(kW, kH);
  Frame f{double(smin), lo - 0.02, double(std::max(smax, smin + 1)), hi + 0.02};
  svg.text(kLeft, 18, title, 12);
  svg.line(f.px(f.x0), f.py(0), f.px(f.x1), f.py(0), "gray", 1.0, true);  // skill equal to reference
  int color = 0;
  for (const auto& s : series) {
    std::string pts;
    const char* c = kSeriesColors[color % 8];
    for (std::size_t i = 0; i < s.seasons.size(); ++i) {
      pts += fmt(f.px(s.seasons[i])) + "," + fmt(f.py(s.skill[i])) + " ";
      svg.circle(f.px(s.seasons[i]), f.py(s.skill[i]), 2.2, c);
    }
    if (!pts.empty()) svg.polyline(pts, c);
    svg.text(kW - kRight, kTop + 14 * color, s.method, 10, "end");
    ++color;
  }
  axes(svg, f, "season", "skill vs reference");
  svg.text(f.px(f.x0), kH - kBottom + 14, std::to_string(smin), 10, "middle");
  svg.text(f.px(f.x1), kH - kBottom + 14, std::to_string(smax), 10, "middle");
  svg.write(path);
}

}  // namespace pqpf::verify
