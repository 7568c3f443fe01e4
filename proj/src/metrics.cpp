#include "polatk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <numbers>
#include <sstream>

namespace polatk {
namespace {

void check_aligned(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height || a.v.size() != b.v.size()) {
    throw StructuralError("metrics: mask dimensions differ");
  }
}

}  // namespace

Mask threshold_mask(std::span<const double> prob, int width, int height, double threshold) {
  Mask m(width, height);
  if (prob.size() != m.v.size()) throw StructuralError("threshold_mask: size mismatch");
  for (std::size_t i = 0; i < prob.size(); ++i) m.v[i] = prob[i] > threshold ? 1 : 0;
  return m;
}

SegMetrics seg_metrics(const Mask& pred, const Mask& y) {
  check_aligned(pred, y);
  SegMetrics m;
  for (std::size_t i = 0; i < y.v.size(); ++i) {
    const bool p = pred.v[i] != 0, t = y.v[i] != 0;
    if (p && t) ++m.tp;
    else if (p) ++m.fp;
    else if (t) ++m.fn;
    else ++m.tn;
  }
  const std::size_t uni = m.tp + m.fp + m.fn;
  m.iou = uni == 0 ? 1.0 : static_cast<double>(m.tp) / static_cast<double>(uni);
  const std::size_t pos = m.tp + m.fn, neg = m.tn + m.fp;
  if (pos + neg == 0) {
    m.ber = 0.0;
    return m;
  }
  double recall = 0.0;
  int classes = 0;
  if (pos > 0) {
    recall += static_cast<double>(m.tp) / static_cast<double>(pos);
    ++classes;
  }
  if (neg > 0) {
    recall += static_cast<double>(m.tn) / static_cast<double>(neg);
    ++classes;
  }
  m.ber = 100.0 * (1.0 - recall / classes);
  return m;
}

double iou(const Mask& pred, const Mask& y) { return seg_metrics(pred, y).iou; }

double ber(const Mask& pred, const Mask& y) {
  check_aligned(pred, y);
  if (y.v.empty()) throw ValidationError("ber: both classes absent");
  return seg_metrics(pred, y).ber;
}

double angular_error(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  const double nb = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
  if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("angular_error: zero vector");
  const double c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (na * nb);
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

namespace {

int name_rank(const std::string& n) {
  if (n == "clean") return 0;
  if (n == "ran.") return 1;
  if (n == "plain") return 2;
  if (n == "EOT") return 3;
  return 4;
}

int world_rank(const std::string& w) { return w == "digital" ? 0 : w == "physical" ? 1 : 2; }

}  // namespace

void sort_report(std::vector<ReportRow>& rows) {
  std::ranges::stable_sort(rows, [](const ReportRow& a, const ReportRow& b) {
    const bool ca = a.name == "clean", cb = b.name == "clean";
    if (ca != cb) return ca;
    if (a.grid != b.grid) return a.grid < b.grid;
    if (name_rank(a.name) != name_rank(b.name)) return name_rank(a.name) < name_rank(b.name);
    if (a.name != b.name) return a.name < b.name;
    return world_rank(a.world) < world_rank(b.world);
  });
}

Report collect_report(const std::filesystem::path& root) {
  if (!std::filesystem::exists(root)) throw IoError("report: no such directory " + root.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == "metrics.json") files.push_back(e.path());
  }
  std::ranges::sort(files);
  Report rep;
  std::map<std::tuple<std::string, int, std::string>, bool> seen;
  std::vector<int> grids;
  for (const auto& f : files) {
    std::ifstream in(f);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception&) {
      rep.missing.push_back("unreadable " + f.parent_path().filename().string());
      continue;
    }
    if (!j.contains("rows") || !j["rows"].is_array()) {
      rep.missing.push_back("no rows in " + f.parent_path().filename().string());
      continue;
    }
    for (const auto& r : j["rows"]) {
      ReportRow row{r.value("name", ""), r.value("grid", 0), r.value("world", ""), r.value("iou", 0.0), r.value("ber", 0.0)};
      auto key = std::make_tuple(row.name, row.grid, row.world);
      if (seen[key]) continue;
      seen[key] = true;
      if (row.grid > 0 && std::ranges::find(grids, row.grid) == grids.end()) grids.push_back(row.grid);
      rep.rows.push_back(row);
    }
  }
  sort_report(rep.rows);
  std::ranges::sort(grids);
  if (!seen[{"clean", 0, "both"}]) rep.missing.push_back("clean");
  for (int g : grids) {
    for (const char* n : {"ran.", "plain", "EOT"}) {
      for (const char* w : {"digital", "physical"}) {
        if (!seen[{n, g, w}]) rep.missing.push_back(std::string(n) + " grid " + std::to_string(g) + " " + w);
      }
    }
  }
  return rep;
}

std::span<const ReferenceRow> reference_rows() {
  static const ReferenceRow rows[] = {
      {"clean", 0, 0.957, 1.61, 0.957, 1.61},
      {"ran.", 8, 0.571, 23.59, 0.584, 22.58},   {"plain", 8, 0.001, 98.17, 0.437, 40.72},
      {"EOT", 8, 0.006, 95.81, 0.379, 50.95},    {"ran.", 16, 0.432, 41.09, 0.405, 46.48},
      {"plain", 16, 0.378, 50.47, 0.404, 46.63}, {"EOT", 16, 0.385, 49.50, 0.385, 49.50},
      {"ran.", 32, 0.435, 40.68, 0.596, 21.52},  {"plain", 32, 0.382, 50.23, 0.469, 35.58},
      {"EOT", 32, 0.382, 50.08, 0.414, 43.99},
  };
  return rows;
}

namespace {

const ReferenceRow* find_reference(const std::string& name, int grid) {
  for (const auto& r : reference_rows()) {
    if (name == r.name && grid == r.grid) return &r;
  }
  return nullptr;
}

std::string fixed(double v, int prec) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

}  // namespace

void write_report(const std::filesystem::path& out_dir, const Report& report, bool reference) {
  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir / "report.csv");
  if (!csv) throw IoError("cannot write report.csv");
  csv << "name,grid,world,iou,ber";
  if (reference) csv << ",reference_iou,reference_ber";
  csv << '\n';
  nlohmann::ordered_json j;
  j["columns"] = {"name", "grid", "world", "iou", "ber"};
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    csv << r.name << ',' << r.grid << ',' << r.world << ',' << fixed(r.iou, 4) << ',' << fixed(r.ber, 2);
    nlohmann::ordered_json row = {{"name", r.name}, {"grid", r.grid}, {"world", r.world}, {"iou", r.iou}, {"ber", r.ber}};
    if (reference) {
      const auto* ref = find_reference(r.name, r.grid);
      if (ref != nullptr) {
        const bool phys = r.world == "physical";
        const double ri = phys ? ref->physical_iou : ref->digital_iou;
        const double rb = phys ? ref->physical_ber : ref->digital_ber;
        csv << ',' << fixed(ri, 3) << ',' << fixed(rb, 2);
        row["reference_iou"] = ri;
        row["reference_ber"] = rb;
      } else {
        csv << ",,";
      }
    }
    csv << '\n';
    j["rows"].push_back(row);
  }
  j["missing"] = report.missing;
  std::ofstream js(out_dir / "report.json");
  if (!js) throw IoError("cannot write report.json");
  js << j.dump(2) << '\n';
}

std::string format_report(const Report& report, bool reference) {
  // One line per (name, grid) with digital and physical side by side.
  struct Line {
    std::string name;
    int grid;
    std::string d = "-", p = "-";
  };
  std::vector<Line> lines;
  for (const auto& r : report.rows) {
    auto it = std::ranges::find_if(lines, [&](const Line& l) { return l.name == r.name && l.grid == r.grid; });
    if (it == lines.end()) {
      lines.push_back({r.name, r.grid});
      it = lines.end() - 1;
    }
    const std::string cell = fixed(r.iou, 3) + " / " + fixed(r.ber, 2);
    if (r.world == "physical") it->p = cell;
    else if (r.world == "digital") it->d = cell;
    else it->d = it->p = cell;
  }
  std::ostringstream out;
  out << std::left << std::setw(8) << "name" << std::setw(6) << "grid" << std::setw(18) << "digital IoU/BER"
      << std::setw(18) << "physical IoU/BER";
  if (reference) out << "reference digital | physical";
  out << '\n';
  for (const auto& l : lines) {
    out << std::left << std::setw(8) << l.name << std::setw(6) << (l.grid > 0 ? std::to_string(l.grid) : "-")
        << std::setw(18) << l.d << std::setw(18) << l.p;
    if (reference) {
      if (const auto* ref = find_reference(l.name, l.grid)) {
        out << fixed(ref->digital_iou, 3) << " / " << fixed(ref->digital_ber, 2) << " | " << fixed(ref->physical_iou, 3)
            << " / " << fixed(ref->physical_ber, 2);
      }
    }
    out << '\n';
  }
  for (const auto& m : report.missing) out << "missing: " << m << '\n';
  return out.str();
}

}  // namespace polatk
