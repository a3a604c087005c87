#include "emo3d/rig.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "emo3d/error.hpp"

namespace emo3d {

void FaceRig::validate() const {
    if (neutral.empty()) {
        throw Error(ErrorKind::Validation, "rig has no vertices");
    }
    for (const auto& v : neutral) {
        if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
            throw Error(ErrorKind::Validation, "rig neutral has non-finite coordinates");
        }
    }
    for (int c = 0; c < kBlendshapeCount; ++c) {
        const auto& d = deltas[static_cast<std::size_t>(c)];
        if (d.size() != neutral.size()) {
            throw Error(ErrorKind::Validation,
                        "delta channel " + blendshape_channel_names()[static_cast<std::size_t>(c)] +
                            " has " + std::to_string(d.size()) + " vertices, expected " +
                            std::to_string(neutral.size()));
        }
        for (const auto& v : d) {
            if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
                throw Error(ErrorKind::Validation, "rig delta has non-finite coordinates");
            }
        }
    }
    for (const auto& f : faces) {
        for (auto idx : f) {
            if (idx >= neutral.size()) {
                throw Error(ErrorKind::Validation, "face index out of range");
            }
        }
    }
}

namespace {

struct RegionMove {
    const char* channel;
    double cx, cy;     // anchor on the face plane
    double radius;     // gaussian falloff radius
    double dx, dy, dz; // displacement at the anchor
};

// Localized displacement fields per channel. Bilateral channels get
// mirrored anchors; subtle channels (gaze) get small moves. "_neutral"
// stays zero.
const RegionMove kMoves[] = {
    {"browDownLeft", -0.35, 0.42, 0.16, 0.0, -0.10, 0.0},
    {"browDownRight", 0.35, 0.42, 0.16, 0.0, -0.10, 0.0},
    {"browInnerUp", -0.12, 0.42, 0.14, 0.0, 0.12, 0.02},
    {"browInnerUp", 0.12, 0.42, 0.14, 0.0, 0.12, 0.02},
    {"browOuterUpLeft", -0.48, 0.42, 0.14, 0.0, 0.12, 0.0},
    {"browOuterUpRight", 0.48, 0.42, 0.14, 0.0, 0.12, 0.0},
    {"cheekPuff", -0.52, -0.18, 0.28, -0.05, 0.0, 0.14},
    {"cheekPuff", 0.52, -0.18, 0.28, 0.05, 0.0, 0.14},
    {"cheekSquintLeft", -0.45, 0.05, 0.18, 0.0, 0.07, 0.04},
    {"cheekSquintRight", 0.45, 0.05, 0.18, 0.0, 0.07, 0.04},
    {"eyeBlinkLeft", -0.35, 0.28, 0.13, 0.0, -0.07, -0.03},
    {"eyeBlinkRight", 0.35, 0.28, 0.13, 0.0, -0.07, -0.03},
    {"eyeLookDownLeft", -0.35, 0.25, 0.10, 0.0, -0.03, -0.01},
    {"eyeLookDownRight", 0.35, 0.25, 0.10, 0.0, -0.03, -0.01},
    {"eyeLookInLeft", -0.35, 0.25, 0.10, 0.03, 0.0, 0.0},
    {"eyeLookInRight", 0.35, 0.25, 0.10, -0.03, 0.0, 0.0},
    {"eyeLookOutLeft", -0.35, 0.25, 0.10, -0.03, 0.0, 0.0},
    {"eyeLookOutRight", 0.35, 0.25, 0.10, 0.03, 0.0, 0.0},
    {"eyeLookUpLeft", -0.35, 0.25, 0.10, 0.0, 0.03, 0.01},
    {"eyeLookUpRight", 0.35, 0.25, 0.10, 0.0, 0.03, 0.01},
    {"eyeSquintLeft", -0.35, 0.22, 0.13, 0.0, 0.05, -0.02},
    {"eyeSquintRight", 0.35, 0.22, 0.13, 0.0, 0.05, -0.02},
    {"eyeWideLeft", -0.35, 0.28, 0.13, 0.0, 0.06, 0.02},
    {"eyeWideRight", 0.35, 0.28, 0.13, 0.0, 0.06, 0.02},
    {"jawForward", 0.0, -0.78, 0.42, 0.0, 0.0, 0.18},
    {"jawLeft", 0.0, -0.78, 0.42, -0.16, 0.0, 0.0},
    {"jawOpen", 0.0, -0.80, 0.48, 0.0, -0.38, -0.06},
    {"jawRight", 0.0, -0.78, 0.42, 0.16, 0.0, 0.0},
    {"mouthClose", 0.0, -0.55, 0.20, 0.0, 0.05, -0.02},
    {"mouthDimpleLeft", -0.34, -0.55, 0.12, -0.05, 0.02, -0.02},
    {"mouthDimpleRight", 0.34, -0.55, 0.12, 0.05, 0.02, -0.02},
    {"mouthFrownLeft", -0.30, -0.58, 0.14, -0.02, -0.10, 0.0},
    {"mouthFrownRight", 0.30, -0.58, 0.14, 0.02, -0.10, 0.0},
    {"mouthFunnel", 0.0, -0.55, 0.20, 0.0, 0.0, 0.12},
    {"mouthLeft", 0.0, -0.55, 0.22, -0.12, 0.0, 0.0},
    {"mouthLowerDownLeft", -0.15, -0.62, 0.13, 0.0, -0.08, 0.0},
    {"mouthLowerDownRight", 0.15, -0.62, 0.13, 0.0, -0.08, 0.0},
    {"mouthPressLeft", -0.20, -0.55, 0.13, 0.0, -0.02, -0.04},
    {"mouthPressRight", 0.20, -0.55, 0.13, 0.0, -0.02, -0.04},
    {"mouthPucker", 0.0, -0.55, 0.18, 0.0, 0.0, 0.14},
    {"mouthRight", 0.0, -0.55, 0.22, 0.12, 0.0, 0.0},
    {"mouthRollLower", 0.0, -0.62, 0.14, 0.0, 0.03, -0.06},
    {"mouthRollUpper", 0.0, -0.48, 0.14, 0.0, -0.03, -0.06},
    {"mouthShrugLower", 0.0, -0.65, 0.16, 0.0, 0.08, 0.03},
    {"mouthShrugUpper", 0.0, -0.48, 0.16, 0.0, 0.06, 0.03},
    {"mouthSmileLeft", -0.30, -0.52, 0.15, -0.08, 0.11, 0.03},
    {"mouthSmileRight", 0.30, -0.52, 0.15, 0.08, 0.11, 0.03},
    {"mouthStretchLeft", -0.32, -0.58, 0.16, -0.10, -0.04, 0.0},
    {"mouthStretchRight", 0.32, -0.58, 0.16, 0.10, -0.04, 0.0},
    {"mouthUpperUpLeft", -0.15, -0.48, 0.12, 0.0, 0.07, 0.0},
    {"mouthUpperUpRight", 0.15, -0.48, 0.12, 0.0, 0.07, 0.0},
    {"noseSneerLeft", -0.12, -0.05, 0.12, 0.0, 0.06, 0.02},
    {"noseSneerRight", 0.12, -0.05, 0.12, 0.0, 0.06, 0.02},
};

double gauss2(double x, double y, double cx, double cy, double r) {
    const double dx = (x - cx) / r;
    const double dy = (y - cy) / r;
    return std::exp(-(dx * dx + dy * dy));
}

} // namespace

FaceRig FaceRig::builtin() {
    FaceRig rig;
    rig.name = "builtin-v1";

    // Oval face shell over a (u,v) grid with a dome profile plus nose,
    // brow, eye-socket and lip relief.
    constexpr int kGrid = 45;
    rig.neutral.reserve(kGrid * kGrid);
    for (int iv = 0; iv < kGrid; ++iv) {
        const double v = -1.0 + 2.0 * iv / (kGrid - 1);
        for (int iu = 0; iu < kGrid; ++iu) {
            const double u = -1.0 + 2.0 * iu / (kGrid - 1);
            const double x = u * 0.92;
            const double y = v * 1.18;
            const double rr = u * u + 0.78 * v * v;
            double z = 0.85 * std::sqrt(std::max(0.0, 1.0 - rr));
            z += 0.26 * gauss2(x, y, 0.0, -0.08, 0.17);                  // nose
            z += 0.07 * gauss2(x, y, -0.35, 0.40, 0.18);                 // brow ridges
            z += 0.07 * gauss2(x, y, 0.35, 0.40, 0.18);
            z -= 0.09 * gauss2(x, y, -0.35, 0.25, 0.14);                 // eye sockets
            z -= 0.09 * gauss2(x, y, 0.35, 0.25, 0.14);
            z += 0.08 * gauss2(x, y, 0.0, -0.55, 0.16);                  // lips
            rig.neutral.push_back({x, y, z});
        }
    }
    for (int iv = 0; iv + 1 < kGrid; ++iv) {
        for (int iu = 0; iu + 1 < kGrid; ++iu) {
            const std::uint32_t a = static_cast<std::uint32_t>(iv * kGrid + iu);
            const std::uint32_t b = a + 1;
            const std::uint32_t c = a + kGrid;
            const std::uint32_t d = c + 1;
            rig.faces.push_back({a, c, b});
            rig.faces.push_back({b, c, d});
        }
    }

    for (auto& d : rig.deltas) {
        d.assign(rig.neutral.size(), Vec3{});
    }
    for (const auto& move : kMoves) {
        const int channel = blendshape_channel_index(move.channel);
        auto& delta = rig.deltas[static_cast<std::size_t>(channel)];
        for (std::size_t i = 0; i < rig.neutral.size(); ++i) {
            const double m = gauss2(rig.neutral[i].x, rig.neutral[i].y, move.cx, move.cy,
                                    move.radius);
            if (m < 1e-4) {
                continue;
            }
            delta[i].x += m * move.dx;
            delta[i].y += m * move.dy;
            delta[i].z += m * move.dz;
        }
    }
    rig.validate();
    return rig;
}

namespace {

std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_obj(const std::filesystem::path& path, const std::vector<Vec3>& vertices,
               const std::vector<std::array<std::uint32_t, 3>>& faces) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    for (const auto& v : vertices) {
        out << "v " << format_coord(v.x) << " " << format_coord(v.y) << " " << format_coord(v.z)
            << "\n";
    }
    for (const auto& f : faces) {
        out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    }
}

void read_obj(const std::filesystem::path& path, std::vector<Vec3>& vertices,
              std::vector<std::array<std::uint32_t, 3>>* faces) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.rfind("v ", 0) == 0) {
            Vec3 v;
            if (std::sscanf(line.c_str(), "v %lf %lf %lf", &v.x, &v.y, &v.z) != 3) {
                throw Error(ErrorKind::Parse,
                            path.string() + " line " + std::to_string(line_no) + ": bad vertex");
            }
            vertices.push_back(v);
        } else if (faces && line.rfind("f ", 0) == 0) {
            std::uint32_t a, b, c;
            if (std::sscanf(line.c_str(), "f %u %u %u", &a, &b, &c) != 3 || a == 0 || b == 0 ||
                c == 0) {
                throw Error(ErrorKind::Parse,
                            path.string() + " line " + std::to_string(line_no) + ": bad face");
            }
            faces->push_back({a - 1, b - 1, c - 1});
        }
    }
}

} // namespace

void save_rig(const std::filesystem::path& dir, const FaceRig& rig) {
    rig.validate();
    std::filesystem::create_directories(dir);

    write_obj(dir / "neutral.obj", rig.neutral, rig.faces);

    nlohmann::ordered_json manifest;
    manifest["name"] = rig.name;
    manifest["neutral"] = "neutral.obj";
    manifest["channels"] = blendshape_channel_names();
    nlohmann::ordered_json targets;
    for (int c = 0; c < kBlendshapeCount; ++c) {
        const auto& channel = blendshape_channel_names()[static_cast<std::size_t>(c)];
        std::vector<Vec3> morphed(rig.neutral.size());
        for (std::size_t i = 0; i < rig.neutral.size(); ++i) {
            const auto& n = rig.neutral[i];
            const auto& d = rig.deltas[static_cast<std::size_t>(c)][i];
            morphed[i] = {n.x + d.x, n.y + d.y, n.z + d.z};
        }
        const std::string file = channel + ".obj";
        write_obj(dir / file, morphed, {});
        targets[channel] = file;
    }
    manifest["targets"] = targets;

    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write rig manifest in " + dir.string());
    }
    out << manifest.dump(2) << "\n";
}

FaceRig load_rig(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open rig manifest " + (dir / "manifest.json").string());
    }
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, "rig manifest: " + std::string(e.what()));
    }

    FaceRig rig;
    rig.name = manifest.value("name", dir.filename().string());

    const auto channels = manifest.at("channels").get<std::vector<std::string>>();
    if (channels.size() != kBlendshapeCount) {
        throw Error(ErrorKind::Validation, "rig manifest must list exactly 52 channels");
    }

    read_obj(dir / manifest.at("neutral").get<std::string>(), rig.neutral, &rig.faces);
    if (rig.neutral.empty()) {
        throw Error(ErrorKind::Validation, "rig neutral mesh has no vertices");
    }

    const auto& targets = manifest.at("targets");
    for (int c = 0; c < kBlendshapeCount; ++c) {
        const std::string& channel = channels[static_cast<std::size_t>(c)];
        if (!targets.contains(channel)) {
            throw Error(ErrorKind::Validation, "rig manifest missing target for " + channel);
        }
        std::vector<Vec3> morphed;
        read_obj(dir / targets.at(channel).get<std::string>(), morphed, nullptr);
        if (morphed.size() != rig.neutral.size()) {
            throw Error(ErrorKind::Validation,
                        "target " + channel + " vertex count mismatch");
        }
        auto& delta = rig.deltas[static_cast<std::size_t>(c)];
        delta.resize(morphed.size());
        for (std::size_t i = 0; i < morphed.size(); ++i) {
            delta[i] = {morphed[i].x - rig.neutral[i].x, morphed[i].y - rig.neutral[i].y,
                        morphed[i].z - rig.neutral[i].z};
        }
    }
    rig.validate();
    return rig;
}

FaceRig resolve_rig(const std::string& spec) {
    if (spec.empty() || spec == "builtin") {
        return FaceRig::builtin();
    }
    return load_rig(spec);
}

} // namespace emo3d
