#include "qadv/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

#include "qadv/errors.hpp"

namespace qadv::plot {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ValidationError("CSV cell is not a number: '" + s + "'");
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Curve {
  std::string column;
  std::string label;
  std::string color;
  bool dashed;
};

constexpr double width = 720, height = 480;
constexpr double left = 70, right = 200, top = 30, bottom = 50;

}  // namespace

std::string render_svg(std::string_view csv_text) {
  std::istringstream in{std::string(csv_text)};
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty CSV");
  const auto header = split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto r = split(line);
    if (r.size() != header.size()) throw ValidationError("CSV row has the wrong number of cells");
    rows.push_back(std::move(r));
  }
  auto need = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) throw ValidationError("CSV lacks column '" + name + "'");
    return it->second;
  };

  bool all_valid = true;
  const std::size_t vcol = need("valid_regime");
  for (const auto& r : rows) all_valid = all_valid && r[vcol] == "true";

  const std::vector<Curve> curves{
      {"g_clean", "E|G| clean", "#1f77b4", false},
      {"g_adv", "E|G| adversarial", "#d62728", false},
      {"udb_clean", "UDB clean", "#1f77b4", true},
      {"udb_adv", "UDB adversarial", "#d62728", true},
      {"bound_banchi", "bound (clean)", "#2ca02c", true},
      all_valid ? Curve{"bound_adv", "bound (adversarial)", "#9467bd", true}
                : Curve{"bound_general", "bound (general eps)", "#9467bd", true},
  };

  std::vector<double> ts;
  const std::size_t tcol = need("T");
  for (const auto& r : rows) ts.push_back(parse_number(r[tcol]));
  std::vector<std::vector<double>> ys;
  double ymax = 0.0;
  for (const auto& c : curves) {
    const std::size_t j = need(c.column);
    std::vector<double> y;
    for (const auto& r : rows) {
      y.push_back(parse_number(r[j]));
      if (std::isfinite(y.back())) ymax = std::max(ymax, y.back());
    }
    ys.push_back(std::move(y));
  }

  // Axes: log x over [min T, max T], linear y from 0.
  double tlo = ts.empty() ? 1.0 : *std::min_element(ts.begin(), ts.end());
  double thi = ts.empty() ? 10.0 : *std::max_element(ts.begin(), ts.end());
  if (tlo <= 0.0) throw ValidationError("T must be positive for a log axis");
  if (thi <= tlo) thi = tlo * 10.0;
  if (ymax <= 0.0) ymax = 1.0;
  const double step = std::pow(10.0, std::floor(std::log10(ymax / 5.0)));
  double ystep = step;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    ystep = m * step;
    if (ymax / ystep <= 6.0) break;
  }
  const double ytop = std::ceil(ymax / ystep) * ystep;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double t) { return left + pw * (std::log(t) - std::log(tlo)) / (std::log(thi) - std::log(tlo)); };
  auto py = [&](double y) { return top + ph * (1.0 - y / ytop); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double y = 0.0; y <= ytop + 1e-12; y += ystep) {
    s << "<line x1=\"" << left << "\" x2=\"" << fmt(left + pw) << "\" y1=\"" << fmt(py(y)) << "\" y2=\""
      << fmt(py(y)) << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << fmt(py(y) + 4) << "\" text-anchor=\"end\">" << tick_label(y)
      << "</text>\n";
  }
  for (double t : ts) {
    s << "<line x1=\"" << fmt(px(t)) << "\" x2=\"" << fmt(px(t)) << "\" y1=\"" << top << "\" y2=\""
      << fmt(top + ph) << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << fmt(px(t)) << "\" y=\"" << fmt(top + ph + 16) << "\" text-anchor=\"middle\">"
      << tick_label(t) << "</text>\n";
  }
  s << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">T</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    std::string pts;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double y = ys[k][i];
      if (!std::isfinite(y) || y < 0.0) continue;
      pts += fmt(px(ts[i])) + "," + fmt(py(y)) + " ";
    }
    if (!pts.empty()) pts.pop_back();
    s << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"2\""
      << (c.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << pts << "\"/>\n";
    const double ly = top + 14 + 20.0 * static_cast<double>(k);
    s << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 42 << "\" y1=\"" << fmt(ly - 4) << "\" y2=\""
      << fmt(ly - 4) << "\" stroke=\"" << c.color << "\" stroke-width=\"2\""
      << (c.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    s << "<text x=\"" << left + pw + 48 << "\" y=\"" << fmt(ly) << "\">" << c.label << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace qadv::plot
