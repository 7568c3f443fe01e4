#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polatk/image.hpp"

namespace polatk {

struct SegMetrics {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double iou = 0.0;
  double ber = 0.0;  // percent
};

/// Binary mask from probabilities: prob > threshold.
Mask threshold_mask(std::span<const double> prob, int width, int height, double threshold = 0.5);

/// |pred & y| / |pred | y|; 1 when the union is empty.
double iou(const Mask& pred, const Mask& y);

/// 100 (1 - mean per-class recall) over the classes present in y.
/// Throws ValidationError when y has no pixels.
double ber(const Mask& pred, const Mask& y);

SegMetrics seg_metrics(const Mask& pred, const Mask& y);

/// Angle between two chroma vectors in degrees.
double angular_error(const std::array<double, 3>& a, const std::array<double, 3>& b);

struct ReportRow {
  std::string name;   // clean, ran., plain, EOT
  int grid = 0;       // 0 for the clean row
  std::string world;  // digital, physical, or both for the clean row
  double iou = 0.0;
  double ber = 0.0;
};

struct Report {
  std::vector<ReportRow> rows;
  std::vector<std::string> missing;
};

/// Orders rows as clean, then per grid ran., plain, EOT, each digital before physical.
void sort_report(std::vector<ReportRow>& rows);

/// Collects rows from every metrics.json below `root` (run directories).
Report collect_report(const std::filesystem::path& root);

/// Writes report.csv and report.json with columns name, grid, world, iou, ber.
void write_report(const std::filesystem::path& out_dir, const Report& report, bool with_reference);

/// Text table for terminals; includes the published reference values when requested.
std::string format_report(const Report& report, bool with_reference);

struct ReferenceRow {
  const char* name;
  int grid;
  double digital_iou, digital_ber, physical_iou, physical_ber;
};

/// Published reference numbers for side-by-side display.
std::span<const ReferenceRow> reference_rows();

}  // namespace polatk
