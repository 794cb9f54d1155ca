#pragma once

#include <fstream>
#include <string>

#include "json.hpp"

#include "graphnav/episode.hpp"
#include "graphnav/world.hpp"

namespace graphnav {

inline constexpr const char* kDatasetFormat = "graphnav-dataset-v1";

inline nlohmann::json world_to_json(const World& w) {
    nlohmann::json jw;
    jw["seed"] = w.seed;
    jw["n_rooms"] = w.n_rooms;
    auto& jvps = jw["viewpoints"] = nlohmann::json::array();
    for (const auto& vp : w.vps) {
        nlohmann::json jv;
        jv["id"] = vp.id;
        jv["x"] = vp.x;
        jv["y"] = vp.y;
        jv["room"] = vp.room;
        jv["objects"] = vp.objects;
        jv["neighbors"] = vp.neighbors;
        jvps.push_back(std::move(jv));
    }
    return jw;
}

inline World world_from_json(const nlohmann::json& jw) {
    World w;
    w.seed = jw.at("seed").get<uint64_t>();
    w.n_rooms = jw.at("n_rooms").get<int>();
    for (const auto& jv : jw.at("viewpoints")) {
        Viewpoint vp;
        vp.id = jv.at("id").get<int>();
        vp.x = jv.at("x").get<double>();
        vp.y = jv.at("y").get<double>();
        vp.room = jv.at("room").get<int>();
        vp.objects = jv.at("objects").get<std::vector<int>>();
        vp.neighbors = jv.at("neighbors").get<std::vector<int>>();
        w.vps.push_back(std::move(vp));
    }
    const int n = w.size();
    for (int i = 0; i < n; ++i) {
        const auto& vp = w.vps[static_cast<size_t>(i)];
        require(vp.id == i, "world file: viewpoint ids must be 0..n-1 in order");
        require(std::is_sorted(vp.neighbors.begin(), vp.neighbors.end()),
                "world file: neighbor lists must be sorted");
        for (int nb : vp.neighbors) {
            require(nb >= 0 && nb < n && nb != i, "world file: neighbor id out of range");
            const auto& back = w.vps[static_cast<size_t>(nb)].neighbors;
            require(std::find(back.begin(), back.end(), i) != back.end(),
                    "world file: adjacency not symmetric");
        }
    }
    return w;
}

struct DatasetFile {
    Dataset data;
    int world_id_offset = 0;  // global ids: offset..offset+n-1, keeps splits disjoint
};

inline nlohmann::json dataset_to_json(const DatasetFile& df) {
    nlohmann::json j;
    j["format"] = kDatasetFormat;
    j["world_id_offset"] = df.world_id_offset;
    auto& jws = j["worlds"] = nlohmann::json::array();
    for (const auto& w : df.data.worlds) jws.push_back(world_to_json(w));
    auto& jeps = j["episodes"] = nlohmann::json::array();
    for (const auto& ep : df.data.episodes) {
        nlohmann::json je;
        je["world"] = ep.world_idx;
        je["start"] = ep.start;
        je["goal"] = ep.goal;
        je["path"] = ep.path;
        je["instruction"] = ep.instruction;
        je["tokens"] = ep.tokens;
        jeps.push_back(std::move(je));
    }
    return j;
}

inline DatasetFile dataset_from_json(const nlohmann::json& j) {
    require(j.value("format", "") == kDatasetFormat, "dataset file: unknown format tag");
    DatasetFile df;
    df.world_id_offset = j.at("world_id_offset").get<int>();
    for (const auto& jw : j.at("worlds")) df.data.worlds.push_back(world_from_json(jw));
    for (const auto& je : j.at("episodes")) {
        EpisodeSpec ep;
        ep.world_idx = je.at("world").get<int>();
        ep.start = je.at("start").get<int>();
        ep.goal = je.at("goal").get<int>();
        ep.path = je.at("path").get<std::vector<int>>();
        ep.instruction = je.at("instruction").get<std::string>();
        ep.tokens = je.at("tokens").get<std::vector<int>>();
        require(ep.world_idx >= 0 && ep.world_idx < static_cast<int>(df.data.worlds.size()),
                "dataset file: episode references missing world");
        const auto& w = df.data.worlds[static_cast<size_t>(ep.world_idx)];
        require(!ep.path.empty() && ep.path.front() == ep.start && ep.path.back() == ep.goal,
                "dataset file: episode path endpoints mismatch");
        for (size_t i = 1; i < ep.path.size(); ++i) {
            const auto& nbs = w.at(ep.path[i - 1]).neighbors;
            require(std::find(nbs.begin(), nbs.end(), ep.path[i]) != nbs.end(),
                    "dataset file: episode path uses a non-edge");
        }
        df.data.episodes.push_back(std::move(ep));
    }
    return df;
}

inline void save_dataset(const std::string& path, const DatasetFile& df) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "save_dataset: cannot open " + path);
    out << dataset_to_json(df).dump(2) << "\n";
    require(static_cast<bool>(out), "save_dataset: write failed for " + path);
}

inline DatasetFile load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "load_dataset: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw error("load_dataset: " + path + ": " + e.what());
    }
    return dataset_from_json(j);
}

}  // namespace graphnav
