#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "marginalia/geometry.hpp"
#include "marginalia/raster.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("marginalia_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Random valid box inside a grid x grid frame.
inline marginalia::BBox random_box(std::mt19937_64& rng, int grid) {
  std::uniform_int_distribution<int> coord(0, grid - 1);
  const int x = coord(rng), y = coord(rng);
  std::uniform_int_distribution<int> dw(1, grid - x), dh(1, grid - y);
  return {x, y, dw(rng), dh(rng)};
}

inline marginalia::Raster random_raster(std::mt19937_64& rng, int w, int h, int lo = 0, int hi = 255) {
  std::uniform_int_distribution<int> d(lo, hi);
  marginalia::Raster r(h, w);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = static_cast<std::uint8_t>(d(rng));
  return r;
}

}  // namespace testing_support
