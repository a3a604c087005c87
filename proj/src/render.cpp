#include "emo3d/render.hpp"

#include <algorithm>
#include <cmath>

#include "emo3d/error.hpp"
#include "emo3d/parallel.hpp"

namespace emo3d {

void RenderConfig::validate() const {
    if (width < 16 || height < 16) {
        throw Error(ErrorKind::Validation, "render size must be at least 16x16");
    }
    if (!(view_extent > 0.0)) {
        throw Error(ErrorKind::Validation, "view_extent must be positive");
    }
}

namespace {

std::vector<Vec3> apply_impl(const FaceRig& rig, const BlendshapeVector& w, bool parallel) {
    // collect the active channels once; most weights are usually zero
    std::vector<int> active;
    active.reserve(kBlendshapeCount);
    for (int c = 0; c < kBlendshapeCount; ++c) {
        if (w[c] != 0.0) {
            active.push_back(c);
        }
    }
    const std::size_t n = rig.neutral.size();
    std::vector<Vec3> out(n);
    auto body = [&](std::int64_t i) {
        Vec3 v = rig.neutral[static_cast<std::size_t>(i)];
        for (int c : active) {
            const Vec3& d = rig.deltas[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
            const double wc = w[c];
            v.x += wc * d.x;
            v.y += wc * d.y;
            v.z += wc * d.z;
        }
        out[static_cast<std::size_t>(i)] = v;
    };
    if (parallel) {
        parallel_for(static_cast<std::int64_t>(n), body);
    } else {
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
            body(i);
        }
    }
    return out;
}

constexpr std::uint8_t kBackground = 128;

// fixed light and albedo for the flat shading
const double kLight[3] = {0.32, 0.28, 0.90};
constexpr double kAlbedo[3] = {214.0, 183.0, 162.0};

struct ScreenVertex {
    double x, y, z;
};

// Rasterizes every triangle restricted to rows [row_begin, row_end). Each
// band owns its rows of the image and depth buffer, and triangles are walked
// in submission order, so the output is independent of how rows are split
// across threads.
void raster_band(const std::vector<ScreenVertex>& pts,
                 const std::vector<std::array<std::uint32_t, 3>>& faces, int width,
                 int row_begin, int row_end, Image& img, std::vector<double>& depth) {
    const double light_norm =
        std::sqrt(kLight[0] * kLight[0] + kLight[1] * kLight[1] + kLight[2] * kLight[2]);

    for (const auto& f : faces) {
        const ScreenVertex& a = pts[f[0]];
        const ScreenVertex& b = pts[f[1]];
        const ScreenVertex& c = pts[f[2]];

        const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (area == 0.0) {
            continue;
        }

        const int min_x = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
        const int max_x =
            std::min(width - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
        const int min_y =
            std::max(row_begin, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
        const int max_y =
            std::min(row_end - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
        if (min_x > max_x || min_y > max_y) {
            continue;
        }

        // flat shading from the (world-space) face normal; z of the screen
        // vertices is the world z, x/y are uniformly scaled, so the normal
        // direction is preserved up to that scale
        double nx = (b.y - a.y) * (c.z - a.z) - (b.z - a.z) * (c.y - a.y);
        double ny = (b.z - a.z) * (c.x - a.x) - (b.x - a.x) * (c.z - a.z);
        double nz = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        const double nlen = std::sqrt(nx * nx + ny * ny + nz * nz);
        if (nlen == 0.0) {
            continue;
        }
        if (nz < 0.0) { // orient toward the viewer
            nx = -nx;
            ny = -ny;
            nz = -nz;
        }
        // screen y grows downward; flip for lighting
        const double ndotl =
            (nx * kLight[0] - ny * kLight[1] + nz * kLight[2]) / (nlen * light_norm);
        const double intensity = 0.25 + 0.75 * std::max(0.0, ndotl);
        const std::uint8_t rgb[3] = {
            static_cast<std::uint8_t>(std::min(255.0, kAlbedo[0] * intensity)),
            static_cast<std::uint8_t>(std::min(255.0, kAlbedo[1] * intensity)),
            static_cast<std::uint8_t>(std::min(255.0, kAlbedo[2] * intensity)),
        };

        const double inv_area = 1.0 / area;
        for (int y = min_y; y <= max_y; ++y) {
            const double py = y + 0.5;
            for (int x = min_x; x <= max_x; ++x) {
                const double px = x + 0.5;
                const double w0 =
                    ((b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)) * inv_area;
                const double w1 =
                    ((c.x - b.x) * (py - b.y) - (c.y - b.y) * (px - b.x)) * inv_area;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) {
                    continue;
                }
                // w0 weights c, w1 weights a, w2 weights b
                const double z = w1 * a.z + w2 * b.z + w0 * c.z;
                const std::size_t pix = static_cast<std::size_t>(y) * width + x;
                if (z > depth[pix]) {
                    depth[pix] = z;
                    img.pixels[pix * 3] = rgb[0];
                    img.pixels[pix * 3 + 1] = rgb[1];
                    img.pixels[pix * 3 + 2] = rgb[2];
                }
            }
        }
    }
}

Image render_impl(const std::vector<Vec3>& vertices,
                  const std::vector<std::array<std::uint32_t, 3>>& faces,
                  const RenderConfig& config, bool parallel) {
    config.validate();
    if (vertices.empty() || faces.empty()) {
        throw Error(ErrorKind::Render, "render_frontal: empty mesh");
    }

    double min_x = vertices[0].x, max_x = vertices[0].x;
    double min_y = vertices[0].y, max_y = vertices[0].y;
    double min_z = vertices[0].z, max_z = vertices[0].z;
    for (const auto& v : vertices) {
        if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
            throw Error(ErrorKind::Render, "render_frontal: non-finite vertex");
        }
        min_x = std::min(min_x, v.x);
        max_x = std::max(max_x, v.x);
        min_y = std::min(min_y, v.y);
        max_y = std::max(max_y, v.y);
        min_z = std::min(min_z, v.z);
        max_z = std::max(max_z, v.z);
    }
    if (max_x - min_x < 1e-12 && max_y - min_y < 1e-12 && max_z - min_z < 1e-12) {
        throw Error(ErrorKind::Render, "render_frontal: degenerate mesh (all vertices coincide)");
    }

    // orthographic: world [-e, e]^2 -> viewport, y up in world, down on screen
    const double sx = config.width / (2.0 * config.view_extent);
    const double sy = config.height / (2.0 * config.view_extent);
    std::vector<ScreenVertex> pts(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        pts[i].x = (vertices[i].x + config.view_extent) * sx;
        pts[i].y = (config.view_extent - vertices[i].y) * sy;
        pts[i].z = vertices[i].z;
    }

    Image img = Image::solid(config.width, config.height, kBackground, kBackground, kBackground);
    std::vector<double> depth(static_cast<std::size_t>(config.width) * config.height,
                              -std::numeric_limits<double>::infinity());

    const int bands = parallel ? threads_for(config.height) : 1;
    if (bands <= 1) {
        raster_band(pts, faces, config.width, 0, config.height, img, depth);
        return img;
    }
    const int rows_per_band = (config.height + bands - 1) / bands;
    parallel_for(bands, [&](std::int64_t band) {
        const int row_begin = static_cast<int>(band) * rows_per_band;
        const int row_end = std::min(config.height, row_begin + rows_per_band);
        if (row_begin < row_end) {
            raster_band(pts, faces, config.width, row_begin, row_end, img, depth);
        }
    });
    return img;
}

} // namespace

std::vector<Vec3> apply_blendshapes(const FaceRig& rig, const BlendshapeVector& w) {
    return apply_impl(rig, w, true);
}

std::vector<Vec3> apply_blendshapes_serial(const FaceRig& rig, const BlendshapeVector& w) {
    return apply_impl(rig, w, false);
}

Image render_frontal(const std::vector<Vec3>& vertices,
                     const std::vector<std::array<std::uint32_t, 3>>& faces,
                     const RenderConfig& config) {
    return render_impl(vertices, faces, config, true);
}

Image render_frontal_serial(const std::vector<Vec3>& vertices,
                            const std::vector<std::array<std::uint32_t, 3>>& faces,
                            const RenderConfig& config) {
    return render_impl(vertices, faces, config, false);
}

MeshRenderer::MeshRenderer(FaceRig rig, RenderConfig config)
    : rig_(std::move(rig)), config_(config) {
    rig_.validate();
    config_.validate();
}

Image MeshRenderer::render(const BlendshapeVector& w) const {
    return render_frontal(apply_blendshapes(rig_, w), rig_.faces, config_);
}

MockRenderer::MockRenderer() : name_("mock-renderer") {}

Image MockRenderer::render(const BlendshapeVector& w) const {
    // 52 weights, 16 bits each, written into the top rows; the rest is a
    // flat field so the image still has a plausible size
    Image img = Image::solid(64, 64, 96, 96, 96);
    for (int i = 0; i < kBlendshapeCount; ++i) {
        const double clamped = std::clamp(w[i], 0.0, 1.0);
        const auto q = static_cast<std::uint32_t>(std::lround(clamped * 65535.0));
        img.at(i, 0, 0) = static_cast<std::uint8_t>(q >> 8);
        img.at(i, 0, 1) = static_cast<std::uint8_t>(q & 0xff);
        img.at(i, 0, 2) = static_cast<std::uint8_t>(i);
    }
    return img;
}

} // namespace emo3d
