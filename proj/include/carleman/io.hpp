#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace carleman {

/// Comma-separated output with a header row, LF line endings and
/// round-trip ("%.17g") number formatting.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(unsigned long long v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(unsigned long v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(const std::string& v);
  /// Terminates the current row; throws if the column count disagrees with the header.
  void end_row();

 private:
  void separator();

  std::ofstream out_;
  std::size_t columns_;
  std::size_t current_ = 0;
};

std::string format_number(double v);

struct PlotSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  bool line = false;  ///< polyline instead of markers
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = true;
  bool log_y = true;
  std::vector<PlotSeries> series;
};

/// Minimal SVG scatter/line plot with axes and decade ticks.
void write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec);

}  // namespace carleman
