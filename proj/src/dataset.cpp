#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "emo3d/core.hpp"

namespace emo3d {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Triad parse_record(const json& j, std::size_t line_no) {
    for (const char* key : {"id", "text", "blendshapes", "emotion", "split"}) {
        if (!j.contains(key)) {
            throw Error(ErrorKind::Parse,
                        "line " + std::to_string(line_no) + ": missing field \"" + key + "\"");
        }
    }

    Triad t;
    t.id = j.at("id").get<std::string>();
    t.text = j.at("text").get<std::string>();
    if (t.text.empty()) {
        throw Error(ErrorKind::Validation, "record " + t.id + ": empty text");
    }
    if (j.contains("image_path") && !j.at("image_path").is_null()) {
        t.image_path = j.at("image_path").get<std::string>();
    }

    const auto& bs = j.at("blendshapes");
    if (!bs.is_array()) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": blendshapes not an array");
    }
    std::vector<double> weights = bs.get<std::vector<double>>();
    try {
        t.blendshapes = BlendshapeVector::from_values(weights);
    } catch (const Error& e) {
        throw Error(ErrorKind::Validation, "record " + t.id + ": " + e.what());
    }

    const auto& em = j.at("emotion");
    if (!em.is_array() || em.size() != kEmotionCount) {
        throw Error(ErrorKind::Validation,
                    "record " + t.id + ": emotion must have 8 entries");
    }
    std::array<double, kEmotionCount> dist{};
    for (int i = 0; i < kEmotionCount; ++i) {
        dist[static_cast<std::size_t>(i)] = em.at(static_cast<std::size_t>(i)).get<double>();
    }
    try {
        t.emotion = EmotionDistribution::from_values(dist);
    } catch (const Error& e) {
        throw Error(ErrorKind::Validation, "record " + t.id + ": " + e.what());
    }

    const auto split = split_from_name(j.at("split").get<std::string>());
    if (!split) {
        throw Error(ErrorKind::Validation,
                    "record " + t.id + ": unknown split \"" + j.at("split").get<std::string>() + "\"");
    }
    t.split = *split;

    if (j.contains("intensity") && !j.at("intensity").is_null()) {
        t.intensity = j.at("intensity").get<int>();
    }
    if (j.contains("presentation") && !j.at("presentation").is_null()) {
        t.presentation = j.at("presentation").get<std::string>();
    }
    return t;
}

} // namespace

std::vector<Triad> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open dataset file " + path.string());
    }

    std::vector<Triad> triads;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::Parse,
                        "line " + std::to_string(line_no) + ": " + e.what());
        }
        Triad t;
        try {
            t = parse_record(j, line_no);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Parse,
                        "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen_ids.insert(t.id).second) {
            throw Error(ErrorKind::Validation, "record " + t.id + ": duplicate id");
        }
        triads.push_back(std::move(t));
    }
    return triads;
}

void save_dataset(const std::filesystem::path& path, const std::vector<Triad>& triads) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write dataset file " + path.string());
    }
    for (const auto& t : triads) {
        ordered_json j;
        j["id"] = t.id;
        j["text"] = t.text;
        if (t.image_path) {
            j["image_path"] = *t.image_path;
        } else {
            j["image_path"] = nullptr;
        }
        j["blendshapes"] = t.blendshapes.values();
        j["emotion"] = t.emotion.values();
        j["split"] = split_name(t.split);
        if (t.intensity) {
            j["intensity"] = *t.intensity;
        }
        if (t.presentation) {
            j["presentation"] = *t.presentation;
        }
        out << j.dump() << "\n";
    }
    if (!out) {
        throw Error(ErrorKind::Io, "short write to " + path.string());
    }
}

} // namespace emo3d
