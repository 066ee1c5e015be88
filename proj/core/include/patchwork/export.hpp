#pragma once

#include "patchwork/extract.hpp"
#include "patchwork/mesh.hpp"
#include "patchwork/metrics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace patchwork {

/// Polygonal OBJ of the facets plus `<stem>.labels.json` with the term pair
/// of every facet, the candidate cells and any reported degeneracies.
/// Returns the sidecar path.
std::filesystem::path save_extracted(const std::filesystem::path& obj_path,
                                     const ExtractedComplex& complex);
std::string extracted_labels_json(const ExtractedComplex& complex);

struct SvgFill {
  PointList polygon;
  bool dark = false;  // inside (Minus) cells render dark
};

struct SvgOptions {
  BBox view = BBox::unit(2, 1.0);
  double size_px = 512.0;
  double stroke_px = 1.5;
};

/// Contour segments (and optional candidate-cell fills) in y-up world
/// coordinates mapped onto an SVG canvas.
std::string svg_document(const SegmentSoup& contour,
                         const std::vector<SvgFill>& fills = {},
                         const SvgOptions& options = {});
void save_svg(const std::filesystem::path& path, const SegmentSoup& contour,
              const std::vector<SvgFill>& fills = {},
              const SvgOptions& options = {});

/// One CSV header plus row in the tabulated column order (CH, HD, FS,
/// #Params), and the aligned-text equivalent.
std::string metrics_csv(const MetricReport& report);
std::string metrics_table(const MetricReport& report);
std::string metrics_json(const MetricReport& report);

void save_text(const std::filesystem::path& path, const std::string& text);

}  // namespace patchwork
