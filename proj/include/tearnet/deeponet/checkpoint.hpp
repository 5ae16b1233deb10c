#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tearnet/core/dsec.hpp"
#include "tearnet/deeponet/model.hpp"
#include "tearnet/nn/adam.hpp"

namespace tearnet::deeponet {

using ordered_json = nlohmann::ordered_json;

inline ordered_json task_to_json(const TaskConfig& c) {
    ordered_json j;
    j["task"] = to_string(c.task);
    j["branch_arch"] = to_string(c.branch_arch);
    ordered_json ch = ordered_json::array();
    for (auto x : c.branch_channels) ch.push_back(to_string(x));
    j["branch_channels"] = ch;
    j["grid"] = c.grid;
    j["branch_widths"] = c.branch_widths;
    j["trunk_widths"] = c.trunk_widths;
    j["volume_scale"] = c.volume_scale;
    j["pressure_scale"] = c.pressure_scale;
    return j;
}

inline Task task_from_string(const std::string& s) {
    if (s == "netd") return Task::NetD;
    if (s == "netpv") return Task::NetPV;
    if (s == "netdisp") return Task::NetDisp;
    throw DataError("unknown task: " + s);
}

inline Channel channel_from_string(const std::string& s) {
    if (s == "strut") return Channel::strut;
    if (s == "displacement") return Channel::displacement;
    if (s == "damage") return Channel::damage;
    throw DataError("unknown channel: " + s);
}

inline TaskConfig task_from_json(const ordered_json& j) {
    TaskConfig c;
    c.task = task_from_string(j.at("task").get<std::string>());
    c.branch_arch =
        j.at("branch_arch").get<std::string>() == "fnn" ? BranchArch::FNN : BranchArch::CNN;
    c.branch_channels.clear();
    for (const auto& x : j.at("branch_channels"))
        c.branch_channels.push_back(channel_from_string(x.get<std::string>()));
    c.grid = j.at("grid").get<std::size_t>();
    c.branch_widths = j.at("branch_widths").get<std::vector<std::size_t>>();
    c.trunk_widths = j.at("trunk_widths").get<std::vector<std::size_t>>();
    c.volume_scale = j.at("volume_scale").get<double>();
    c.pressure_scale = j.at("pressure_scale").get<double>();
    return c;
}

template <typename T>
inline std::string precision_name() {
    return sizeof(T) == 4 ? "f32" : "f64";
}

inline std::string param_file_name(const std::string& param_name) {
    std::string s = param_name;
    for (auto& ch : s)
        if (ch == '.') ch = '_';
    return s + ".dsec";
}

// Checkpoint layout: manifest.json plus one .dsec array per parameter
// tensor; optimizer state (when present) allows seamless resumes.
template <typename T>
inline void save_checkpoint(const std::string& dir, DeepONet<T>& model,
                            const nn::Adam<T>* opt = nullptr, std::size_t epoch = 0,
                            const std::string& shuffle_rng_state = "") {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["kind"] = "deeponet-checkpoint";
    manifest["precision"] = precision_name<T>();
    manifest["task"] = task_to_json(model.cfg);
    manifest["epoch"] = epoch;

    auto params = model.params();
    ordered_json plist = ordered_json::array();
    for (auto& p : params) {
        const std::string fname = param_file_name(p.name);
        TensorT<T> t({p.value->size()}, *p.value);
        dsec::write(dir + "/" + fname, t);
        ordered_json pj;
        pj["name"] = p.name;
        pj["file"] = fname;
        pj["size"] = p.value->size();
        pj["regularized"] = p.regularized;
        plist.push_back(pj);
    }
    manifest["params"] = plist;

    if (opt) {
        ordered_json oj;
        oj["t"] = opt->t;
        oj["lr"] = opt->lr;
        for (std::size_t i = 0; i < params.size(); ++i) {
            dsec::write(dir + "/adam_m_" + std::to_string(i) + ".dsec",
                        TensorT<T>({opt->m[i].size()}, opt->m[i]));
            dsec::write(dir + "/adam_v_" + std::to_string(i) + ".dsec",
                        TensorT<T>({opt->v[i].size()}, opt->v[i]));
        }
        manifest["optimizer"] = oj;
    }
    if (!shuffle_rng_state.empty()) manifest["shuffle_rng"] = shuffle_rng_state;

    std::ofstream f(dir + "/manifest.json");
    f << manifest.dump(2) << "\n";
}

template <typename T>
inline DeepONet<T> load_checkpoint(const std::string& dir, nn::Adam<T>* opt = nullptr,
                                   std::size_t* epoch = nullptr) {
    std::ifstream f(dir + "/manifest.json");
    if (!f) throw DataError("checkpoint: missing manifest in " + dir);
    ordered_json manifest = ordered_json::parse(f);
    if (manifest.at("kind").get<std::string>() != "deeponet-checkpoint")
        throw DataError("checkpoint: wrong manifest kind");
    if (manifest.at("precision").get<std::string>() != precision_name<T>())
        throw DataError("checkpoint: precision mismatch (stored " +
                        manifest.at("precision").get<std::string>() + ")");

    DeepONet<T> model(task_from_json(manifest.at("task")));
    auto params = model.params();
    const auto& plist = manifest.at("params");
    if (plist.size() != params.size()) throw DataError("checkpoint: parameter list mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& pj = plist[i];
        if (pj.at("name").get<std::string>() != params[i].name)
            throw DataError("checkpoint: parameter order mismatch at " + params[i].name);
        auto t = dsec::read<T>(dir + "/" + pj.at("file").get<std::string>());
        if (t.numel() != params[i].value->size())
            throw DataError("checkpoint: size mismatch for " + params[i].name);
        *params[i].value = t.data;
    }
    if (opt && manifest.contains("optimizer")) {
        opt->reset(params);
        opt->t = manifest.at("optimizer").at("t").get<std::uint64_t>();
        opt->lr = manifest.at("optimizer").at("lr").get<double>();
        for (std::size_t i = 0; i < params.size(); ++i) {
            opt->m[i] = dsec::read<T>(dir + "/adam_m_" + std::to_string(i) + ".dsec").data;
            opt->v[i] = dsec::read<T>(dir + "/adam_v_" + std::to_string(i) + ".dsec").data;
        }
    }
    if (epoch) *epoch = manifest.at("epoch").get<std::size_t>();
    return model;
}

}  // namespace tearnet::deeponet
