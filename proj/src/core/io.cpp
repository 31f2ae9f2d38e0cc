#include "core/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

namespace gm {

static_assert(std::endian::native == std::endian::little,
              "binary map format assumes a little-endian host");

namespace {

using nlohmann::json;

void write_file(const std::string& path, const std::string& header,
                const void* payload, size_t bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  out << header << '\n';
  out.write(static_cast<const char*>(payload), bytes);
  require(out.good(), ErrorCode::IoError, "write failed: " + path);
}

json read_header(std::istream& in, const std::string& path) {
  std::string line;
  std::getline(in, line);
  require(in.good(), ErrorCode::IoError, "missing header line: " + path);
  json header = json::parse(line, nullptr, false);
  require(!header.is_discarded() && header.is_object(), ErrorCode::IoError,
          "malformed header JSON: " + path);
  return header;
}

std::vector<float> read_f32(std::istream& in, size_t count,
                            const std::string& path) {
  std::vector<float> data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  require(in.gcount() == static_cast<std::streamsize>(count * sizeof(float)),
          ErrorCode::IoError, "truncated payload: " + path);
  return data;
}

json parse_object(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  require(!j.is_discarded() && j.is_object(), ErrorCode::IoError,
          "malformed JSON for " + what);
  return j;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open: " + path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  out << text;
  require(out.good(), ErrorCode::IoError, "write failed: " + path);
}

}  // namespace

void save_densemap(const std::string& path, const DenseMap& map) {
  require(!map.empty(), ErrorCode::InvalidArgument, "save_densemap: empty map");
  json header = {{"height", map.height},
                 {"width", map.width},
                 {"channels", map.channels},
                 {"dtype", "f32"}};
  std::vector<float> payload(map.values.begin(), map.values.end());
  write_file(path, header.dump(), payload.data(),
             payload.size() * sizeof(float));
}

DenseMap load_densemap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open: " + path);
  json header = read_header(in, path);
  require(header.value("dtype", "") == "f32", ErrorCode::IoError,
          "expected dtype f32: " + path);
  int h = header.value("height", 0);
  int w = header.value("width", 0);
  int c = header.value("channels", 0);
  require(h > 0 && w > 0 && c > 0, ErrorCode::IoError,
          "bad dimensions in header: " + path);
  DenseMap map(h, w, c);
  auto data = read_f32(in, map.size(), path);
  for (size_t i = 0; i < data.size(); ++i) map.values[i] = data[i];
  require(all_finite(map.values), ErrorCode::IoError,
          "non-finite values in map: " + path);
  return map;
}

void save_mask(const std::string& path, const BoolMask& mask) {
  json header = {{"height", mask.height},
                 {"width", mask.width},
                 {"channels", 1},
                 {"dtype", "u8"}};
  write_file(path, header.dump(), mask.bits.data(), mask.bits.size());
}

BoolMask load_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open: " + path);
  json header = read_header(in, path);
  require(header.value("dtype", "") == "u8", ErrorCode::IoError,
          "expected dtype u8: " + path);
  int h = header.value("height", 0);
  int w = header.value("width", 0);
  require(h > 0 && w > 0, ErrorCode::IoError, "bad dimensions: " + path);
  BoolMask mask(h, w);
  in.read(reinterpret_cast<char*>(mask.bits.data()),
          static_cast<std::streamsize>(mask.bits.size()));
  require(in.gcount() == static_cast<std::streamsize>(mask.bits.size()),
          ErrorCode::IoError, "truncated payload: " + path);
  for (uint8_t& b : mask.bits) {
    require(b <= 1, ErrorCode::IoError, "mask bytes must be 0/1: " + path);
  }
  return mask;
}

void save_confidence(const std::string& path, const ConfidenceMap& conf) {
  DenseMap map(conf.height, conf.width, 1);
  map.values = conf.values;
  save_densemap(path, map);
}

ConfidenceMap load_confidence(const std::string& path) {
  DenseMap map = load_densemap(path);
  require(map.channels == 1, ErrorCode::IoError,
          "confidence maps are single-channel: " + path);
  ConfidenceMap conf(map.height, map.width);
  for (size_t i = 0; i < map.values.size(); ++i) {
    require(map.values[i] >= 0.0 && map.values[i] <= 1.0, ErrorCode::IoError,
            "confidence outside [0, 1]: " + path);
    conf.values[i] = map.values[i];
  }
  return conf;
}

void save_field(const std::string& path, const CorrespondenceField& field) {
  DenseMap map(field.height, field.width, 2);
  map.values = field.coords;
  save_densemap(path, map);
  BoolMask mask(field.height, field.width);
  mask.bits = field.valid;
  save_mask(path + ".valid", mask);
}

CorrespondenceField load_field(const std::string& path) {
  DenseMap map = load_densemap(path);
  require(map.channels == 2, ErrorCode::IoError,
          "correspondence fields are two-channel: " + path);
  BoolMask mask = load_mask(path + ".valid");
  require(mask.height == map.height && mask.width == map.width,
          ErrorCode::IoError, "validity mask shape differs: " + path);
  CorrespondenceField field(map.height, map.width);
  field.coords = map.values;
  field.valid = mask.bits;
  return field;
}

void save_depth(const std::string& path, const DepthMap& depth) {
  DenseMap map(depth.height, depth.width, 1);
  map.values = depth.depth;
  save_densemap(path, map);
  BoolMask mask(depth.height, depth.width);
  mask.bits = depth.valid;
  save_mask(path + ".valid", mask);
}

DepthMap load_depth(const std::string& path) {
  DenseMap map = load_densemap(path);
  require(map.channels == 1, ErrorCode::IoError,
          "depth maps are single-channel: " + path);
  BoolMask mask = load_mask(path + ".valid");
  require(mask.height == map.height && mask.width == map.width,
          ErrorCode::IoError, "validity mask shape differs: " + path);
  DepthMap depth(map.height, map.width);
  depth.depth = map.values;
  depth.valid = mask.bits;
  for (int i = 0; i < depth.height; ++i)
    for (int j = 0; j < depth.width; ++j)
      require(!depth.is_valid(i, j) || depth.at(i, j) > 0.0, ErrorCode::IoError,
              "nonpositive depth marked valid: " + path);
  return depth;
}

void save_normals(const std::string& path, const NormalMap& normals) {
  DenseMap map(normals.height, normals.width, 3);
  map.values = normals.normal;
  save_densemap(path, map);
  BoolMask mask(normals.height, normals.width);
  mask.bits = normals.valid;
  save_mask(path + ".valid", mask);
}

NormalMap load_normals(const std::string& path) {
  DenseMap map = load_densemap(path);
  require(map.channels == 3, ErrorCode::IoError,
          "normal maps are three-channel: " + path);
  BoolMask mask = load_mask(path + ".valid");
  require(mask.height == map.height && mask.width == map.width,
          ErrorCode::IoError, "validity mask shape differs: " + path);
  NormalMap normals(map.height, map.width);
  normals.normal = map.values;
  normals.valid = mask.bits;
  return normals;
}

void save_volume(const std::string& path, const CorrelationVolume& volume) {
  require(volume.n > 0, ErrorCode::InvalidArgument, "save_volume: empty volume");
  json header = {{"n", volume.n}, {"gamma", volume.gamma}, {"dtype", "f32"}};
  std::vector<float> payload(static_cast<size_t>(volume.n) * volume.n);
  for (int i = 0; i < volume.n; ++i)
    for (int k = 0; k < volume.n; ++k)
      payload[static_cast<size_t>(i) * volume.n + k] =
          static_cast<float>(volume.matrix(i, k));
  write_file(path, header.dump(), payload.data(),
             payload.size() * sizeof(float));
}

CorrelationVolume load_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open: " + path);
  json header = read_header(in, path);
  require(header.value("dtype", "") == "f32", ErrorCode::IoError,
          "expected dtype f32: " + path);
  int n = header.value("n", 0);
  double gamma = header.value("gamma", 0.0);
  require(n > 0 && gamma > 0.0, ErrorCode::IoError, "bad volume header: " + path);
  auto data = read_f32(in, static_cast<size_t>(n) * n, path);
  CorrelationVolume volume;
  volume.n = n;
  volume.gamma = gamma;
  volume.matrix.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      volume.matrix(i, k) = data[static_cast<size_t>(i) * n + k];
  return volume;
}

std::string intrinsics_to_json(const Intrinsics& K) {
  Eigen::Matrix3d m = K.matrix();
  json j = {{"K", {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2),
                   m(2, 0), m(2, 1), m(2, 2)}}};
  return j.dump();
}

Intrinsics intrinsics_from_json(const std::string& text) {
  json j = parse_object(text, "intrinsics");
  require(j.contains("K") && j["K"].is_array() && j["K"].size() == 9,
          ErrorCode::IoError, "intrinsics JSON needs a 9-element K");
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = j["K"][i].get<double>();
  return Intrinsics::from_matrix(m);
}

void save_intrinsics(const std::string& path, const Intrinsics& K) {
  write_text(path, intrinsics_to_json(K) + "\n");
}

Intrinsics load_intrinsics(const std::string& path) {
  return intrinsics_from_json(read_text(path));
}

std::string pose_to_json(const RigidPose& pose) {
  json j = {{"R",
             {pose.R(0, 0), pose.R(0, 1), pose.R(0, 2), pose.R(1, 0),
              pose.R(1, 1), pose.R(1, 2), pose.R(2, 0), pose.R(2, 1),
              pose.R(2, 2)}},
            {"t", {pose.t.x(), pose.t.y(), pose.t.z()}}};
  return j.dump();
}

RigidPose pose_from_json(const std::string& text) {
  json j = parse_object(text, "pose");
  require(j.contains("R") && j["R"].is_array() && j["R"].size() == 9 &&
              j.contains("t") && j["t"].is_array() && j["t"].size() == 3,
          ErrorCode::IoError, "pose JSON needs R[9] and t[3]");
  Eigen::Matrix3d R;
  for (int i = 0; i < 9; ++i) R(i / 3, i % 3) = j["R"][i].get<double>();
  Eigen::Vector3d t;
  for (int i = 0; i < 3; ++i) t(i) = j["t"][i].get<double>();
  return RigidPose(R, t);
}

void save_pose(const std::string& path, const RigidPose& pose) {
  write_text(path, pose_to_json(pose) + "\n");
}

RigidPose load_pose(const std::string& path) {
  return pose_from_json(read_text(path));
}

std::string indicator_to_json(const IndicatorMatrix& indicator,
                              const CoplanarSampleSet& samples) {
  require(indicator.k == samples.k, ErrorCode::DimensionMismatch,
          "indicator_to_json: indicator and sample set sizes differ");
  json rows = json::array();
  for (int m = 0; m < indicator.k; ++m) {
    std::string bits(indicator.k, '0');
    for (int n = 0; n < indicator.k; ++n)
      if (indicator.at(m, n)) bits[n] = '1';
    rows.push_back(bits);
  }
  json anchors = json::array();
  for (const auto& a : samples.anchors) anchors.push_back({a.x(), a.y()});
  json candidates = json::array();
  for (int m = 0; m < samples.k; ++m) {
    json row = json::array();
    for (int n = 0; n < samples.k; ++n) {
      const auto& q = samples.candidate(m, n);
      row.push_back({q.x(), q.y()});
    }
    candidates.push_back(row);
  }
  json j = {{"K", indicator.k},     {"k1", indicator.k1},
            {"k2", indicator.k2},   {"k3", indicator.k3},
            {"seed", indicator.seed}, {"rows", rows},
            {"anchors", anchors},   {"candidates", candidates}};
  return j.dump();
}

std::pair<IndicatorMatrix, CoplanarSampleSet> indicator_from_json(
    const std::string& text) {
  json j = parse_object(text, "indicator");
  int k = j.value("K", 0);
  require(k > 0, ErrorCode::IoError, "indicator JSON needs K > 0");
  IndicatorMatrix indicator;
  indicator.k = k;
  indicator.k1 = j.value("k1", 0.0);
  indicator.k2 = j.value("k2", 0.0);
  indicator.k3 = j.value("k3", 0.0);
  indicator.seed = j.value("seed", uint64_t{0});
  indicator.bits.assign(static_cast<size_t>(k) * k, 0);
  require(j.contains("rows") && j["rows"].is_array() &&
              static_cast<int>(j["rows"].size()) == k,
          ErrorCode::IoError, "indicator JSON needs K rows");
  for (int m = 0; m < k; ++m) {
    std::string bits = j["rows"][m].get<std::string>();
    require(static_cast<int>(bits.size()) == k, ErrorCode::IoError,
            "indicator row has wrong length");
    for (int n = 0; n < k; ++n) {
      require(bits[n] == '0' || bits[n] == '1', ErrorCode::IoError,
              "indicator rows must be bitstrings");
      indicator.bits[static_cast<size_t>(m) * k + n] = bits[n] == '1' ? 1 : 0;
    }
  }
  CoplanarSampleSet samples;
  samples.k = k;
  samples.seed = indicator.seed;
  require(j.contains("anchors") && static_cast<int>(j["anchors"].size()) == k,
          ErrorCode::IoError, "indicator JSON needs K anchors");
  for (int m = 0; m < k; ++m)
    samples.anchors.emplace_back(j["anchors"][m][0].get<int>(),
                                 j["anchors"][m][1].get<int>());
  require(j.contains("candidates") &&
              static_cast<int>(j["candidates"].size()) == k,
          ErrorCode::IoError, "indicator JSON needs K candidate rows");
  samples.candidates.resize(static_cast<size_t>(k) * k);
  for (int m = 0; m < k; ++m) {
    require(static_cast<int>(j["candidates"][m].size()) == k, ErrorCode::IoError,
            "candidate row has wrong length");
    for (int n = 0; n < k; ++n)
      samples.candidates[static_cast<size_t>(m) * k + n] = {
          j["candidates"][m][n][0].get<int>(),
          j["candidates"][m][n][1].get<int>()};
  }
  return {indicator, samples};
}

void save_indicator(const std::string& path, const IndicatorMatrix& indicator,
                    const CoplanarSampleSet& samples) {
  write_text(path, indicator_to_json(indicator, samples) + "\n");
}

std::pair<IndicatorMatrix, CoplanarSampleSet> load_indicator(
    const std::string& path) {
  return indicator_from_json(read_text(path));
}

}  // namespace gm
