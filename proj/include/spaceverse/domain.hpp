#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace spaceverse {

enum class TaskKind { QA, Classification, Detection };

const char* to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

// Grayscale intensity grid, row-major, values in [0, 1].
struct PixelGrid {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  PixelGrid() = default;
  PixelGrid(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(std::size_t(h) * std::size_t(w), fill) {}

  double at(int r, int c) const { return pixels[std::size_t(r) * width + c]; }
  double& at(int r, int c) { return pixels[std::size_t(r) * width + c]; }
  std::size_t pixel_count() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }
  double mean() const;

  bool operator==(const PixelGrid&) const = default;
};

struct QaAnswer {
  std::vector<std::uint32_t> tokens;
  bool operator==(const QaAnswer&) const = default;
};

struct ClassAnswer {
  std::uint32_t label = 0;
  bool operator==(const ClassAnswer&) const = default;
};

// Axis-aligned box in pixel coordinates; x_min < x_max and y_min < y_max.
struct BoxAnswer {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
  bool operator==(const BoxAnswer&) const = default;
};

BoxAnswer make_box(double x_min, double y_min, double x_max, double y_max);

struct TaskAnswer {
  std::variant<QaAnswer, ClassAnswer, BoxAnswer> value;
  TaskKind kind() const;
  bool operator==(const TaskAnswer&) const = default;
};

// One observation task. region_relevance carries the planted per-region
// relevance used by the synthetic encoders (row-major over the region grid;
// empty means "no injection", treated as all zeros).
struct Sample {
  std::string id;
  PixelGrid image;
  std::string prompt;
  TaskAnswer ground_truth;
  double difficulty = 0.0;  // [0, 1]
  TaskKind task_kind = TaskKind::QA;
  std::vector<double> region_relevance;
};

struct RegionGrid {
  int region_height = 0;
  int region_width = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  int image_height = 0;
  int image_width = 0;
  std::vector<PixelGrid> regions;    // row-major
  std::vector<std::uint8_t> padded;  // per-region zero-padding flag

  int count() const { return grid_rows * grid_cols; }
};

// Tiles an image into region_height x region_width blocks, row-major.
// Trailing partial blocks are zero-padded and flagged.
RegionGrid partition_image(const PixelGrid& image, int region_height,
                           int region_width);

// Inverse of partition_image: crops padding and restores the original image.
PixelGrid reassemble(const RegionGrid& grid);

using ByteSize = std::uint64_t;

struct ByteModel {
  std::uint64_t bytes_per_pixel = 1;
  std::uint64_t region_header_bytes = 4;
};

// Serialized size of one region record: fixed header plus pixel payload.
// A null payload (discarded region) costs the header only.
ByteSize byte_size(const PixelGrid* region_or_null, const ByteModel& model = {});
ByteSize byte_size(const PixelGrid& region, const ByteModel& model = {});

// Size of the whole grid serialized region by region at full resolution.
ByteSize full_grid_bytes(const RegionGrid& grid, const ByteModel& model = {});

}  // namespace spaceverse
