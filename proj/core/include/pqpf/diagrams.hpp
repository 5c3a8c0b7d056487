#pragma once

#include <string>
#include <vector>

#include "pqpf/verify.hpp"

namespace pqpf::verify {

// CSV and self-contained SVG renderings of the calibration diagnostics.
// uPIT histograms are drawn cut at a height of 3 with the maximum noted.

void write_upit_csv(const std::string& path, const UpitHistogram& hist);
void write_upit_svg(const std::string& path, const UpitHistogram& hist, const std::string& title,
                    double cut = 3.0);

void write_reliability_csv(const std::string& path, const ReliabilityDiagram& diagram);
void write_reliability_svg(const std::string& path, const ReliabilityDiagram& diagram,
                           const std::string& title);

void write_murphy_csv(const std::string& path, const MurphyCurve& curve);
void write_murphy_svg(const std::string& path, const MurphyCurve& curve,
                      const std::string& title);

struct SkillSeries {
  std::string method;
  std::vector<int> seasons;
  std::vector<double> skill;  // 1 - S/S_ref per season
};

void write_skill_csv(const std::string& path, const std::string& score,
                     const std::vector<SkillSeries>& series);
void write_skill_svg(const std::string& path, const std::vector<SkillSeries>& series,
                     const std::string& title);

}  // namespace pqpf::verify
