#pragma once

#include <memory>
#include <string>
#include <vector>

#include "emo3d/core.hpp"
#include "emo3d/image.hpp"
#include "emo3d/rig.hpp"

namespace emo3d {

// Orthographic frontal camera, flat shading with one fixed directional
// light, solid mid-gray background.
struct RenderConfig {
    int width = 224;
    int height = 224;
    // World half-extent mapped onto the viewport; the builtin rig fits 1.35.
    double view_extent = 1.35;

    void validate() const; // width/height >= 16
};

// vertices = neutral + sum_i w_i * delta_i, exact linear combination.
std::vector<Vec3> apply_blendshapes(const FaceRig& rig, const BlendshapeVector& w);
std::vector<Vec3> apply_blendshapes_serial(const FaceRig& rig, const BlendshapeVector& w);

// Deterministic software rasterizer; identical inputs give byte-identical
// images at any thread count. Throws Render on a degenerate mesh.
Image render_frontal(const std::vector<Vec3>& vertices,
                     const std::vector<std::array<std::uint32_t, 3>>& faces,
                     const RenderConfig& config);
Image render_frontal_serial(const std::vector<Vec3>& vertices,
                            const std::vector<std::array<std::uint32_t, 3>>& faces,
                            const RenderConfig& config);

// Blendshapes-to-image stage of the metric pipeline.
class Renderer {
public:
    virtual ~Renderer() = default;
    virtual Image render(const BlendshapeVector& w) const = 0;
    virtual const std::string& rig_name() const = 0;
};

class MeshRenderer : public Renderer {
public:
    MeshRenderer(FaceRig rig, RenderConfig config);

    Image render(const BlendshapeVector& w) const override;
    const std::string& rig_name() const override { return rig_.name; }

    const FaceRig& rig() const { return rig_; }
    const RenderConfig& config() const { return config_; }

private:
    FaceRig rig_;
    RenderConfig config_;
};

// Encodes the 52 weights directly into pixels (16-bit fixed point per
// channel). Decouples metric-correctness tests from rendering quality;
// pairs with MockBackend's planted-pair table.
class MockRenderer : public Renderer {
public:
    MockRenderer();

    Image render(const BlendshapeVector& w) const override;
    const std::string& rig_name() const override { return name_; }

private:
    std::string name_;
};

} // namespace emo3d
