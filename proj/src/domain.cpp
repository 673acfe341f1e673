#include "spaceverse/domain.hpp"

#include <stdexcept>

namespace spaceverse {

const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::QA: return "qa";
    case TaskKind::Classification: return "classification";
    case TaskKind::Detection: return "detection";
  }
  return "?";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "qa") return TaskKind::QA;
  if (s == "classification") return TaskKind::Classification;
  if (s == "detection") return TaskKind::Detection;
  throw std::invalid_argument("unknown task kind: " + s);
}

double PixelGrid::mean() const {
  if (pixels.empty()) return 0.0;
  double s = 0.0;
  for (double p : pixels) s += p;
  return s / double(pixels.size());
}

BoxAnswer make_box(double x_min, double y_min, double x_max, double y_max) {
  if (!(x_min < x_max) || !(y_min < y_max))
    throw std::invalid_argument("degenerate box: min must be strictly below max");
  return BoxAnswer{x_min, y_min, x_max, y_max};
}

TaskKind TaskAnswer::kind() const {
  if (std::holds_alternative<QaAnswer>(value)) return TaskKind::QA;
  if (std::holds_alternative<ClassAnswer>(value)) return TaskKind::Classification;
  return TaskKind::Detection;
}

RegionGrid partition_image(const PixelGrid& image, int region_height,
                           int region_width) {
  if (region_height < 1 || region_width < 1)
    throw std::invalid_argument("region dimensions must be >= 1");
  if (image.empty()) throw std::invalid_argument("empty image");

  RegionGrid grid;
  grid.region_height = region_height;
  grid.region_width = region_width;
  grid.image_height = image.height;
  grid.image_width = image.width;
  grid.grid_rows = (image.height + region_height - 1) / region_height;
  grid.grid_cols = (image.width + region_width - 1) / region_width;
  grid.regions.reserve(std::size_t(grid.count()));
  grid.padded.reserve(std::size_t(grid.count()));

  for (int gr = 0; gr < grid.grid_rows; ++gr) {
    for (int gc = 0; gc < grid.grid_cols; ++gc) {
      PixelGrid region(region_height, region_width, 0.0);
      const int r0 = gr * region_height;
      const int c0 = gc * region_width;
      const int rows = std::min(region_height, image.height - r0);
      const int cols = std::min(region_width, image.width - c0);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          region.at(r, c) = image.at(r0 + r, c0 + c);
      grid.regions.push_back(std::move(region));
      grid.padded.push_back(rows < region_height || cols < region_width ? 1 : 0);
    }
  }
  return grid;
}

PixelGrid reassemble(const RegionGrid& grid) {
  PixelGrid image(grid.image_height, grid.image_width, 0.0);
  for (int gr = 0; gr < grid.grid_rows; ++gr) {
    for (int gc = 0; gc < grid.grid_cols; ++gc) {
      const PixelGrid& region = grid.regions[std::size_t(gr) * grid.grid_cols + gc];
      const int r0 = gr * grid.region_height;
      const int c0 = gc * grid.region_width;
      const int rows = std::min(grid.region_height, grid.image_height - r0);
      const int cols = std::min(grid.region_width, grid.image_width - c0);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          image.at(r0 + r, c0 + c) = region.at(r, c);
    }
  }
  return image;
}

ByteSize byte_size(const PixelGrid* region_or_null, const ByteModel& model) {
  ByteSize b = model.region_header_bytes;
  if (region_or_null != nullptr && !region_or_null->empty())
    b += ByteSize(region_or_null->pixel_count()) * model.bytes_per_pixel;
  return b;
}

ByteSize byte_size(const PixelGrid& region, const ByteModel& model) {
  return byte_size(&region, model);
}

ByteSize full_grid_bytes(const RegionGrid& grid, const ByteModel& model) {
  ByteSize total = 0;
  for (const auto& region : grid.regions) total += byte_size(region, model);
  return total;
}

}  // namespace spaceverse
