#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fracac::cli {

struct Series {
  std::string name;
  std::vector<double> x, y;
  bool points_only = false;
};

struct LinePlot {
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
  bool logx = false, logy = false;
};

// Fixed-layout SVG; output bytes depend only on the data.
void write_svg(std::ostream& os, const LinePlot& plot);

}  // namespace fracac::cli
