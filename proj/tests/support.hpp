#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "satstack/error.hpp"
#include "satstack/grid.hpp"

#define EXPECT_ERRC(stmt, errc)                                        \
  do {                                                                 \
    try {                                                              \
      stmt;                                                            \
      ADD_FAILURE() << "expected " << ::satstack::to_string(errc);     \
    } catch (const ::satstack::Error& e_) {                            \
      EXPECT_EQ(e_.code(), errc) << e_.what();                         \
    }                                                                  \
  } while (0)

namespace satstack::test {

inline std::filesystem::path fixture_dir() { return SATSTACK_FIXTURE_DIR; }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("satstack_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
  std::filesystem::path path_;
};

/// North-up lattice with unit cells whose top-left corner is (ox, oy).
inline GeoRef lattice(int rows, int cols, double ox = 0.0, double oy = 0.0, double cell = 1.0,
                      CrsSpec crs = CrsSpec::utm(30, true)) {
  GeoRef g;
  g.origin_x = ox;
  g.origin_y = oy;
  g.pixel_w = cell;
  g.pixel_h = -cell;
  g.n_rows = rows;
  g.n_cols = cols;
  g.crs = crs;
  return g;
}

inline RasterGrid grid_of(int rows, int cols, std::vector<double> values, double ox = 0.0, double oy = 0.0) {
  return RasterGrid(lattice(rows, cols, ox, oy), std::move(values));
}

inline Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline bool same_cells(const RasterGrid& a, const RasterGrid& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_missing(a[i]) != is_missing(b[i])) return false;
    if (!is_missing(a[i]) && a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace satstack::test
