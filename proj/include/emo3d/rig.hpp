#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emo3d/core.hpp"

namespace emo3d {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

// Canonical face rig: a neutral mesh plus one vertex-offset field per
// blendshape channel. A pose is neutral + sum_i w_i * delta_i.
struct FaceRig {
    std::string name;
    std::vector<Vec3> neutral;
    std::vector<std::array<std::uint32_t, 3>> faces;
    std::array<std::vector<Vec3>, kBlendshapeCount> deltas;

    std::size_t vertex_count() const { return neutral.size(); }

    void validate() const; // throws Validation on shape/finiteness violations

    // Procedurally generated parametric head with localized delta fields for
    // all 52 channels; self-contained, no asset files needed.
    static FaceRig builtin();
};

// Rig interchange: a directory holding manifest.json, neutral.obj and one
// absolute-position morph-target OBJ per channel (delta = target - neutral).
void save_rig(const std::filesystem::path& dir, const FaceRig& rig);
FaceRig load_rig(const std::filesystem::path& dir);

// "builtin" or a rig directory path.
FaceRig resolve_rig(const std::string& spec);

} // namespace emo3d
