#include <algorithm>
#include <cstdio>
#include <string>

#include "cogfx/error.hpp"
#include "cogfx/report.hpp"

namespace cogfx {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 64;
constexpr double kRight = 24;
constexpr double kTop = 40;
constexpr double kBottom = 56;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
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

std::string render_distance_curve(std::span<const BucketStat> buckets, std::string_view title) {
  if (buckets.size() < 2) throw ConfigError("distance curve needs at least two buckets");

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double x_lo = buckets.front().bucket;
  const double x_hi = buckets.back().bucket;
  const double x_span = x_hi > x_lo ? x_hi - x_lo : 1.0;
  // Confidence axis fixed at [0, 1]; SVG y grows downward.
  auto px = [&](double bucket) { return kLeft + (bucket - x_lo) / x_span * plot_w; };
  auto py = [&](double v) { return kTop + (1.0 - std::clamp(v, 0.0, 1.0)) * plot_h; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
       num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  s += "<title>" + escape(title) + "</title>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
       escape(title) + "</text>\n";

  // Axes and ticks.
  const auto x0 = num(kLeft);
  const auto y0 = num(kTop + plot_h);
  s += "<line x1=\"" + x0 + "\" y1=\"" + num(kTop) + "\" x2=\"" + x0 + "\" y2=\"" + y0 +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + x0 + "\" y1=\"" + y0 + "\" x2=\"" + num(kLeft + plot_w) + "\" y2=\"" + y0 +
       "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i * 0.25;
    s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(v) + 4) +
         "\" text-anchor=\"end\" font-size=\"11\">" + num(v) + "</text>\n";
  }
  for (const auto& b : buckets) {
    s += "<text x=\"" + num(px(b.bucket)) + "\" y=\"" + num(kTop + plot_h + 18) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + std::to_string(b.bucket) + "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 12) +
       "\" text-anchor=\"middle\" font-size=\"12\">distance</text>\n";
  s += "<text x=\"16\" y=\"" + num(kTop + plot_h / 2) +
       "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
       num(kTop + plot_h / 2) + ")\">mean confidence</text>\n";

  // Whiskers.
  for (const auto& b : buckets) {
    const auto x = px(b.bucket);
    const auto lo = num(py(b.mean - b.ci_half));
    const auto hi = num(py(b.mean + b.ci_half));
    s += "<line x1=\"" + num(x) + "\" y1=\"" + lo + "\" x2=\"" + num(x) + "\" y2=\"" + hi +
         "\" stroke=\"#555555\"/>\n";
    for (const auto& y : {lo, hi}) {
      s += "<line x1=\"" + num(x - 4) + "\" y1=\"" + y + "\" x2=\"" + num(x + 4) + "\" y2=\"" + y +
           "\" stroke=\"#555555\"/>\n";
    }
  }

  s += "<polyline fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (i) s += ' ';
    s += num(px(buckets[i].bucket)) + "," + num(py(buckets[i].mean));
  }
  s += "\"/>\n";
  for (const auto& b : buckets) {
    s += "<circle cx=\"" + num(px(b.bucket)) + "\" cy=\"" + num(py(b.mean)) +
         "\" r=\"3\" fill=\"#1f4e79\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace cogfx
