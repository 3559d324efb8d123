#include "carleman/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "carleman/error.hpp"

namespace carleman {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw Error(ErrorKind::InvalidArgument, "cannot open " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::separator() {
  if (current_ > 0) out_ << ',';
  ++current_;
}

CsvWriter& CsvWriter::operator<<(double v) {
  separator();
  out_ << format_number(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
  separator();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  separator();
  if (v.find_first_of(",\"\n") == std::string::npos) {
    out_ << v;
  } else {
    out_ << '"';
    for (char c : v) out_ << (c == '"' ? std::string("\"\"") : std::string(1, c));
    out_ << '"';
  }
  return *this;
}

void CsvWriter::end_row() {
  if (current_ != columns_) throw Error(ErrorKind::InvalidArgument, "CSV row has the wrong number of columns");
  out_ << '\n';
  current_ = 0;
}

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 80, kRight = 20, kTop = 40, kBottom = 60;

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double map(double v) const {
    const double t = log ? std::log10(v) : v;
    return (t - lo) / (hi - lo);
  }
};

Axis fit_axis(const std::vector<const std::vector<double>*>& data, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* v : data)
    for (double x : *v) {
      if (!std::isfinite(x) || (log && x <= 0)) continue;
      const double t = log ? std::log10(x) : x;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (log) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
    if (hi <= lo) hi = lo + 1;
  } else {
    const double pad = hi > lo ? 0.05 * (hi - lo) : 0.5;
    lo -= pad;
    hi += pad;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace

void write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec) {
  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : spec.series) {
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  const Axis ax = fit_axis(xs, spec.log_x);
  const Axis ay = fit_axis(ys, spec.log_y);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto px = [&](double v) { return kLeft + ax.map(v) * pw; };
  const auto py = [&](double v) { return kTop + (1.0 - ay.map(v)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title)
    << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  const auto ticks = [](const Axis& a) {
    std::vector<double> t;
    if (a.log) {
      for (double e = a.lo; e <= a.hi + 1e-9; e += 1.0) t.push_back(e);
    } else {
      for (int i = 0; i <= 5; ++i) t.push_back(a.lo + (a.hi - a.lo) * i / 5.0);
    }
    return t;
  };
  for (double t : ticks(ax)) {
    const double x = kLeft + (t - ax.lo) / (ax.hi - ax.lo) * pw;
    o << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\"" << kTop + ph + 5
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << x << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
      << (ax.log ? "1e" + format_number(t) : format_number(std::round(t * 1000) / 1000)) << "</text>\n";
  }
  for (double t : ticks(ay)) {
    const double y = kTop + (1.0 - (t - ay.lo) / (ay.hi - ay.lo)) * ph;
    o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
      << (ay.log ? "1e" + format_number(t) : format_number(std::round(t * 1000) / 1000)) << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
    << escape(spec.x_label) << "</text>\n";
  o << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << kTop + ph / 2 << ")\">" << escape(spec.y_label) << "</text>\n";

  int idx = 0;
  for (const auto& s : spec.series) {
    const char* colour = kColours[idx % 5];
    const auto usable = [&](std::size_t i) {
      return std::isfinite(s.x[i]) && std::isfinite(s.y[i]) && (!spec.log_x || s.x[i] > 0) &&
             (!spec.log_y || s.y[i] > 0);
    };
    if (s.line) {
      o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (usable(i)) o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      o << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (usable(i))
          o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << colour
            << "\"/>\n";
    }
    o << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 16 + 16 * idx << "\" fill=\"" << colour << "\">"
      << escape(s.label) << "</text>\n";
    ++idx;
  }
  o << "</svg>\n";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::InvalidArgument, "cannot open " + path.string());
  f << o.str();
}

}  // namespace carleman
