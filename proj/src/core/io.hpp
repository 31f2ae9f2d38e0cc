#pragma once

#include <string>
#include <utility>

#include "core/camera.hpp"
#include "core/matching.hpp"
#include "core/planar.hpp"
#include "core/types.hpp"

namespace gm {

// Dense maps are stored as one JSON header line
// {"height":H,"width":W,"channels":C,"dtype":"f32"} followed by little-endian
// 32-bit floats, row-major, channel-innermost. Masks use dtype "u8" (0/1).
// Depth maps, correspondence fields, and normal maps pair a f32 payload with
// a parallel "u8" validity mask at <path>.valid.

void save_densemap(const std::string& path, const DenseMap& map);
DenseMap load_densemap(const std::string& path);

void save_mask(const std::string& path, const BoolMask& mask);
BoolMask load_mask(const std::string& path);

void save_confidence(const std::string& path, const ConfidenceMap& conf);
ConfidenceMap load_confidence(const std::string& path);

void save_field(const std::string& path, const CorrespondenceField& field);
CorrespondenceField load_field(const std::string& path);

void save_depth(const std::string& path, const DepthMap& depth);
DepthMap load_depth(const std::string& path);

void save_normals(const std::string& path, const NormalMap& normals);
NormalMap load_normals(const std::string& path);

// Correlation volumes reuse the container with header {"n":N,"gamma":G,
// "dtype":"f32"} and an N*N payload.
void save_volume(const std::string& path, const CorrelationVolume& volume);
CorrelationVolume load_volume(const std::string& path);

// {"K":[9 row-major reals]}
std::string intrinsics_to_json(const Intrinsics& K);
Intrinsics intrinsics_from_json(const std::string& text);
void save_intrinsics(const std::string& path, const Intrinsics& K);
Intrinsics load_intrinsics(const std::string& path);

// {"R":[9 row-major reals],"t":[3 reals]}
std::string pose_to_json(const RigidPose& pose);
RigidPose pose_from_json(const std::string& text);
void save_pose(const std::string& path, const RigidPose& pose);
RigidPose load_pose(const std::string& path);

// {K, k1, k2, k3, seed, rows:[bitstrings]}, extended with the anchor and
// candidate coordinates so the loss side can reuse the exact sample set.
std::string indicator_to_json(const IndicatorMatrix& indicator,
                              const CoplanarSampleSet& samples);
std::pair<IndicatorMatrix, CoplanarSampleSet> indicator_from_json(
    const std::string& text);
void save_indicator(const std::string& path, const IndicatorMatrix& indicator,
                    const CoplanarSampleSet& samples);
std::pair<IndicatorMatrix, CoplanarSampleSet> load_indicator(
    const std::string& path);

}  // namespace gm
