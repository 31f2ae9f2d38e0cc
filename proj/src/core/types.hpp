#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gm {

enum class ErrorCode {
  InvalidArgument = 1,
  DimensionMismatch = 2,
  InsufficientData = 3,
  Degenerate = 4,
  IoError = 5,
  NumericError = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

// Row-major dense grid, channel-innermost. Units are caller-defined
// (RGB in [0,255], feature units, or pixels).
struct DenseMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;

  DenseMap() = default;
  DenseMap(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c) {
    require(h > 0 && w > 0 && c > 0, ErrorCode::InvalidArgument,
            "DenseMap dimensions must be positive");
    values.assign(static_cast<size_t>(h) * w * c, fill);
  }

  bool empty() const { return values.empty(); }
  size_t size() const { return values.size(); }
  size_t index(int i, int j, int k = 0) const {
    return (static_cast<size_t>(i) * width + j) * channels + k;
  }
  double& at(int i, int j, int k = 0) { return values[index(i, j, k)]; }
  double at(int i, int j, int k = 0) const { return values[index(i, j, k)]; }

  bool same_shape(const DenseMap& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

struct BoolMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> bits;

  BoolMask() = default;
  BoolMask(int h, int w, bool fill = false) : height(h), width(w) {
    require(h > 0 && w > 0, ErrorCode::InvalidArgument,
            "BoolMask dimensions must be positive");
    bits.assign(static_cast<size_t>(h) * w, fill ? 1 : 0);
  }

  size_t index(int i, int j) const {
    return static_cast<size_t>(i) * width + j;
  }
  bool at(int i, int j) const { return bits[index(i, j)] != 0; }
  void set(int i, int j, bool v) { bits[index(i, j)] = v ? 1 : 0; }
  size_t count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += (b != 0);
    return n;
  }
};

// Per-pixel confidence in [0, 1].
struct ConfidenceMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  ConfidenceMap() = default;
  ConfidenceMap(int h, int w, double fill = 0.0) : height(h), width(w) {
    require(h > 0 && w > 0, ErrorCode::InvalidArgument,
            "ConfidenceMap dimensions must be positive");
    require(fill >= 0.0 && fill <= 1.0, ErrorCode::InvalidArgument,
            "confidence outside [0, 1]");
    values.assign(static_cast<size_t>(h) * w, fill);
  }

  size_t index(int i, int j) const {
    return static_cast<size_t>(i) * width + j;
  }
  double at(int i, int j) const { return values[index(i, j)]; }
  void set(int i, int j, double v) {
    require(v >= 0.0 && v <= 1.0, ErrorCode::InvalidArgument,
            "confidence outside [0, 1]");
    values[index(i, j)] = v;
  }
};

// Per-pixel (x, y) target coordinates in support-frame pixel units plus a
// validity bit. Coordinates must be finite wherever valid.
struct CorrespondenceField {
  int height = 0;
  int width = 0;
  std::vector<double> coords;  // 2 per pixel, (x, y)
  std::vector<uint8_t> valid;

  CorrespondenceField() = default;
  CorrespondenceField(int h, int w) : height(h), width(w) {
    require(h > 0 && w > 0, ErrorCode::InvalidArgument,
            "CorrespondenceField dimensions must be positive");
    coords.assign(static_cast<size_t>(h) * w * 2, 0.0);
    valid.assign(static_cast<size_t>(h) * w, 0);
  }

  size_t index(int i, int j) const {
    return static_cast<size_t>(i) * width + j;
  }
  double x(int i, int j) const { return coords[2 * index(i, j)]; }
  double y(int i, int j) const { return coords[2 * index(i, j) + 1]; }
  bool is_valid(int i, int j) const { return valid[index(i, j)] != 0; }
  void set(int i, int j, double px, double py, bool v = true) {
    coords[2 * index(i, j)] = px;
    coords[2 * index(i, j) + 1] = py;
    valid[index(i, j)] = v ? 1 : 0;
  }
  void invalidate(int i, int j) { valid[index(i, j)] = 0; }

  // Identity grid: every pixel maps to its own coordinates.
  static CorrespondenceField identity(int h, int w) {
    CorrespondenceField f(h, w);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) f.set(i, j, j, i);
    return f;
  }
};

// Per-pixel metric depth, positive wherever valid.
struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<double> depth;
  std::vector<uint8_t> valid;

  DepthMap() = default;
  DepthMap(int h, int w) : height(h), width(w) {
    require(h > 0 && w > 0, ErrorCode::InvalidArgument,
            "DepthMap dimensions must be positive");
    depth.assign(static_cast<size_t>(h) * w, 0.0);
    valid.assign(static_cast<size_t>(h) * w, 0);
  }

  size_t index(int i, int j) const {
    return static_cast<size_t>(i) * width + j;
  }
  double at(int i, int j) const { return depth[index(i, j)]; }
  bool is_valid(int i, int j) const { return valid[index(i, j)] != 0; }
  void set(int i, int j, double d) {
    require(d > 0.0, ErrorCode::InvalidArgument, "depth must be positive");
    depth[index(i, j)] = d;
    valid[index(i, j)] = 1;
  }
  void invalidate(int i, int j) {
    depth[index(i, j)] = 0.0;
    valid[index(i, j)] = 0;
  }
};

// Per-pixel unit normal in camera coordinates, camera-facing.
struct NormalMap {
  int height = 0;
  int width = 0;
  std::vector<double> normal;  // 3 per pixel
  std::vector<uint8_t> valid;

  NormalMap() = default;
  NormalMap(int h, int w) : height(h), width(w) {
    require(h > 0 && w > 0, ErrorCode::InvalidArgument,
            "NormalMap dimensions must be positive");
    normal.assign(static_cast<size_t>(h) * w * 3, 0.0);
    valid.assign(static_cast<size_t>(h) * w, 0);
  }

  size_t index(int i, int j) const {
    return static_cast<size_t>(i) * width + j;
  }
  bool is_valid(int i, int j) const { return valid[index(i, j)] != 0; }
  void set(int i, int j, double nx, double ny, double nz) {
    size_t b = 3 * index(i, j);
    normal[b] = nx;
    normal[b + 1] = ny;
    normal[b + 2] = nz;
    valid[index(i, j)] = 1;
  }
};

bool all_finite(const std::vector<double>& v);

}  // namespace gm
