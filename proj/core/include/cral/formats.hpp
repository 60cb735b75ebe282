#pragma once

// On-disk formats.
//
//   RF frame      <stem>.bin  little-endian float32, range-major
//                 <stem>.hdr  text header: "cral-rf 1" then key/value lines
//   camera file   JSON lines; header {"format":"cral-camera","version":1},
//                 one record per object with an optional RLE mask
//   annotations   JSON lines; header {"format":"cral-annotations","version":1}
//   plane log     JSON lines; header {"format":"cral-planes","version":1}
//
// Readers raise FormatError naming the file and line.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cral/align.hpp"
#include "cral/rf_detect.hpp"
#include "cral/scoring.hpp"

namespace cral {

inline constexpr int kFormatVersion = 1;

// ---- RF frames -----------------------------------------------------------

/// Writes <stem>.bin and <stem>.hdr.
void write_rf_image(const RfImage& img, const std::filesystem::path& stem);
/// Reads <stem>.bin / <stem>.hdr and validates the image.
RfImage read_rf_image(const std::filesystem::path& stem);

/// "frame_000042" style stem inside dir.
std::filesystem::path rf_frame_stem(const std::filesystem::path& dir, std::int64_t frame_id);
/// All frame stems in dir (every *.hdr), sorted by name.
std::vector<std::filesystem::path> list_rf_frames(const std::filesystem::path& dir);

// ---- camera detections ---------------------------------------------------

/// Column-major run-length encoding of a binary mask over an integer pixel
/// grid. counts alternate background / foreground runs, starting with
/// background; pixel (c, k) covers [u0 + c, u0 + c + 1) x [v0 + k, v0 + k + 1).
struct RleMask {
  int u0 = 0;
  int v0 = 0;
  int width = 0;
  int height = 0;
  std::vector<int> counts;
};

/// Rasterizes mask columns (pixel set when its center lies inside the column's
/// [top, bottom]) and encodes the result.
RleMask encode_mask(const std::vector<MaskColumn>& columns);
/// Per-column extents of an RLE mask: top = first set row, bottom = last set
/// row + 1, clamped to the box.
std::vector<MaskColumn> decode_mask(const RleMask& rle, const BBox& clamp_to);

void write_camera_objects(std::ostream& out, const std::vector<CameraObject>& objects);
std::vector<CameraObject> read_camera_objects(std::istream& in, const std::string& source_name);
std::vector<CameraObject> read_camera_objects(const std::filesystem::path& path);

// ---- annotations / point detections --------------------------------------

void write_annotations(std::ostream& out, const std::vector<Annotation>& annotations,
                       const std::string& scenario = "");
std::vector<Annotation> read_annotations(std::istream& in, const std::string& source_name);
std::vector<Annotation> read_annotations(const std::filesystem::path& path);

/// Annotation file records as scoring inputs (scenario label preserved).
std::vector<PointDet> read_point_dets(const std::filesystem::path& path);

// ---- plane log -----------------------------------------------------------

void write_plane_log(std::ostream& out, const std::vector<WindowLog>& windows);
std::vector<WindowLog> read_plane_log(const std::filesystem::path& path);

// ---- score report --------------------------------------------------------

/// Human-readable report.
void write_report_text(std::ostream& out, const ScoreReport& report, bool per_class, bool per_scenario);
/// Flat "key=value" lines; absent MAE is written as "nan".
void write_report_kv(std::ostream& out, const ScoreReport& report);
/// Whitespace table: threshold precision recall.
void write_plot_data(std::ostream& out, const ScoreReport& report);

}  // namespace cral
