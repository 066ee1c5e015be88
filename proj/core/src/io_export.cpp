#include "patchwork/export.hpp"

#include "patchwork/error.hpp"
#include "patchwork/io.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace patchwork {
namespace {

using json = nlohmann::json;

json label_json(std::uint32_t label) {
  if (label == kBoundaryLabel) return "boundary";
  return label;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

}  // namespace

void save_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
}

std::string extracted_labels_json(const ExtractedComplex& c) {
  json doc;
  doc["dim"] = c.dim;
  json facets = json::array();
  for (const Facet& f : c.facets) {
    facets.push_back({{"minus", f.minus_term}, {"plus", f.plus_term},
                      {"vertices", f.vertices}});
  }
  doc["facets"] = std::move(facets);
  json cells = json::array();
  for (const CandidateCell& cell : c.interior_cells) {
    json nb = json::array();
    for (auto l : cell.neighbours) nb.push_back(label_json(l));
    json center = json::array();
    for (int k = 0; k < c.dim; ++k) center.push_back(cell.center[k]);
    cells.push_back({{"term", cell.term}, {"center", center},
                     {"radius", cell.radius}, {"neighbours", nb}});
  }
  doc["interior_cells"] = std::move(cells);
  json deg = json::array();
  for (const Degeneracy& d : c.degeneracies) {
    json point = json::array();
    for (int k = 0; k < c.dim; ++k) point.push_back(d.point[k]);
    deg.push_back({{"kind", d.kind == DegeneracyKind::TiedVertex ? "tied_vertex"
                                                                  : "lower_dimensional_cell"},
                   {"point", point},
                   {"terms", d.terms}});
  }
  doc["degeneracies"] = std::move(deg);
  doc["degeneracy_count"] = c.degeneracy_count;
  return doc.dump(1) + "\n";
}

std::filesystem::path save_extracted(const std::filesystem::path& obj_path,
                                     const ExtractedComplex& complex) {
  PolygonMesh mesh = complex.polygons();
  save_obj(obj_path, mesh);
  std::filesystem::path side = obj_path;
  side.replace_extension(".labels.json");
  save_text(side, extracted_labels_json(complex));
  return side;
}

std::string svg_document(const SegmentSoup& contour, const std::vector<SvgFill>& fills,
                         const SvgOptions& o) {
  const double w = o.view.hi.x() - o.view.lo.x();
  const double h = o.view.hi.y() - o.view.lo.y();
  if (!(w > 0.0 && h > 0.0)) raise(ErrorCode::DegenerateBBox, "SVG view box is empty");
  const double scale = o.size_px / std::max(w, h);
  auto X = [&](const Vec3& p) { return fmt("%.4f", (p.x() - o.view.lo.x()) * scale); };
  auto Y = [&](const Vec3& p) { return fmt("%.4f", (o.view.hi.y() - p.y()) * scale); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt("%.0f", w * scale)
    << "\" height=\"" << fmt("%.0f", h * scale) << "\" viewBox=\"0 0 "
    << fmt("%.4f", w * scale) << ' ' << fmt("%.4f", h * scale) << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const SvgFill& f : fills) {
    if (f.polygon.size() < 3) continue;
    s << "<polygon fill=\"" << (f.dark ? "#5b6b7d" : "#e8edf2")
      << "\" stroke=\"#c0c8d0\" stroke-width=\"0.5\" points=\"";
    for (const Vec3& p : f.polygon) s << X(p) << ',' << Y(p) << ' ';
    s << "\"/>\n";
  }
  s << "<path fill=\"none\" stroke=\"#c0392b\" stroke-linecap=\"round\" stroke-width=\""
    << fmt("%.2f", o.stroke_px) << "\" d=\"";
  for (const auto& seg : contour.segments) {
    const Vec3& a = contour.vertices[seg[0]];
    const Vec3& b = contour.vertices[seg[1]];
    s << 'M' << X(a) << ',' << Y(a) << 'L' << X(b) << ',' << Y(b);
  }
  s << "\"/>\n</svg>\n";
  return s.str();
}

void save_svg(const std::filesystem::path& path, const SegmentSoup& contour,
              const std::vector<SvgFill>& fills, const SvgOptions& options) {
  save_text(path, svg_document(contour, fills, options));
}

std::string metrics_csv(const MetricReport& r) {
  std::string out = "CH_x1e3,HD_x1e2,FS_percent,params,samples,seed\n";
  out += fmt("%.6f", r.chamfer_scaled()) + ',' + fmt("%.6f", r.hausdorff_scaled()) + ',' +
         fmt("%.4f", r.fscore) + ',' +
         (r.parameters ? std::to_string(*r.parameters) : std::string("")) + ',' +
         std::to_string(r.sample_count) + ',' + std::to_string(r.seed) + '\n';
  return out;
}

std::string metrics_table(const MetricReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%12s %12s %10s %10s\n%12.4f %12.4f %10.2f %10s\n",
                "CH(x1e-3)", "HD(x1e-2)", "FS(%)", "#Params", r.chamfer_scaled(),
                r.hausdorff_scaled(), r.fscore,
                r.parameters ? std::to_string(*r.parameters).c_str() : "-");
  return buf;
}

std::string metrics_json(const MetricReport& r) {
  json j;
  j["chamfer"] = r.chamfer;
  j["hausdorff"] = r.hausdorff;
  j["fscore"] = r.fscore;
  j["chamfer_x1e3"] = r.chamfer_scaled();
  j["hausdorff_x1e2"] = r.hausdorff_scaled();
  j["cutoff"] = r.cutoff;
  j["samples"] = r.sample_count;
  j["seed"] = r.seed;
  if (r.parameters) j["parameters"] = *r.parameters;
  return j.dump();
}

}  // namespace patchwork
