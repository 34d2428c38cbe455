#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "pcgen/params.hpp"

namespace pcgen {

// Checkpoint layout:
//   "FGCK" | uint32 LE version | uint32 LE header length | header JSON
//   | raw little-endian arrays in header order
//   [ | uint32 LE adam-header length | adam JSON | raw m,v arrays per entry ]
//
// The header lists parameter names, shapes and dtype ("f32"/"f64") plus the
// step counter and run metadata. The Adam block is optional; inference
// checkpoints omit it (and may omit whole parameter groups, e.g. the critic).
struct CheckpointMeta {
    std::uint32_t version = 1;
    std::string dtype;
    i64 step = 0;
    i64 epoch = 0;
    std::uint64_t seed = 0;
    std::string model_json;  // ModelConfig serialization
    std::string extra_json;  // free-form run metadata
    bool has_adam = false;
    std::vector<std::string> param_names;
};

namespace ckpt_detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw DataError("truncated checkpoint: " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

template <class T>
const char* dtype_name() {
    if constexpr (std::is_same_v<T, float>) return "f32";
    else return "f64";
}

template <class T>
void write_array(std::ostream& os, const Tensor<T>& t) {
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.v.size() * sizeof(T)));
}

template <class T>
void read_array(std::istream& is, Tensor<T>& t, const std::string& path) {
    if (!is.read(reinterpret_cast<char*>(t.data()),
                 static_cast<std::streamsize>(t.v.size() * sizeof(T))))
        throw DataError("truncated checkpoint arrays: " + path);
}

}  // namespace ckpt_detail

template <class T>
void save_checkpoint(const std::string& path, const ParamStore<T>& store,
                     const CheckpointMeta& meta, bool with_adam) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write checkpoint: " + path);
    f.write("FGCK", 4);
    ckpt_detail::put_u32(f, meta.version);

    nlohmann::ordered_json header;
    header["dtype"] = ckpt_detail::dtype_name<T>();
    header["step"] = meta.step;
    header["epoch"] = meta.epoch;
    header["seed"] = meta.seed;
    if (!meta.model_json.empty()) header["model"] = nlohmann::ordered_json::parse(meta.model_json);
    if (!meta.extra_json.empty()) header["extra"] = nlohmann::ordered_json::parse(meta.extra_json);
    auto params = nlohmann::ordered_json::array();
    for (const auto& e : store.entries())
        params.push_back({{"name", e.name}, {"shape", e.value.shape}});
    header["params"] = params;
    const std::string htext = header.dump();
    ckpt_detail::put_u32(f, static_cast<std::uint32_t>(htext.size()));
    f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& e : store.entries()) ckpt_detail::write_array(f, e.value);

    if (with_adam) {
        nlohmann::ordered_json ah;
        auto entries = nlohmann::ordered_json::array();
        for (const auto& e : store.entries())
            entries.push_back({{"name", e.name}, {"shape", e.value.shape}, {"step", e.step}});
        ah["adam"] = entries;
        const std::string atext = ah.dump();
        ckpt_detail::put_u32(f, static_cast<std::uint32_t>(atext.size()));
        f.write(atext.data(), static_cast<std::streamsize>(atext.size()));
        for (const auto& e : store.entries()) {
            ckpt_detail::write_array(f, e.m);
            ckpt_detail::write_array(f, e.v);
        }
    }
    if (!f) throw DataError("checkpoint write failed: " + path);
}

// Header only; cheap dtype probe for runtime dispatch.
CheckpointMeta read_checkpoint_meta(const std::string& path);

template <class T>
ParamStore<T> load_checkpoint(const std::string& path, CheckpointMeta* meta_out = nullptr) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot read checkpoint: " + path);
    char magic[4];
    if (!f.read(magic, 4) || std::string(magic, 4) != "FGCK")
        throw DataError("bad checkpoint magic: " + path);
    CheckpointMeta meta;
    meta.version = ckpt_detail::get_u32(f, path);
    const std::uint32_t hlen = ckpt_detail::get_u32(f, path);
    std::string htext(hlen, '\0');
    if (!f.read(htext.data(), hlen)) throw DataError("truncated checkpoint header: " + path);
    nlohmann::ordered_json header;
    try {
        header = nlohmann::ordered_json::parse(htext);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad checkpoint header json in " + path + ": " + e.what());
    }
    meta.dtype = header.value("dtype", "");
    if (meta.dtype != ckpt_detail::dtype_name<T>())
        throw DataError("checkpoint dtype " + meta.dtype + " does not match requested " +
                        ckpt_detail::dtype_name<T>() + ": " + path);
    meta.step = header.value("step", i64{0});
    meta.epoch = header.value("epoch", i64{0});
    meta.seed = header.value("seed", std::uint64_t{0});
    if (header.contains("model")) meta.model_json = header["model"].dump();
    if (header.contains("extra")) meta.extra_json = header["extra"].dump();

    ParamStore<T> store;
    for (const auto& p : header.at("params")) {
        const std::string name = p.at("name").get<std::string>();
        const auto shape = p.at("shape").get<std::vector<i64>>();
        Tensor<T>& t = store.create(name, Tensor<T>(shape));
        ckpt_detail::read_array(f, t, path);
        meta.param_names.push_back(name);
    }

    // Optional Adam block.
    if (f.peek() != std::char_traits<char>::eof()) {
        const std::uint32_t alen = ckpt_detail::get_u32(f, path);
        std::string atext(alen, '\0');
        if (!f.read(atext.data(), alen)) throw DataError("truncated adam header: " + path);
        nlohmann::ordered_json ah = nlohmann::ordered_json::parse(atext);
        for (const auto& p : ah.at("adam")) {
            const std::string name = p.at("name").get<std::string>();
            auto& e = store.entry(name);
            e.step = p.at("step").get<i64>();
            ckpt_detail::read_array(f, e.m, path);
            ckpt_detail::read_array(f, e.v, path);
        }
        meta.has_adam = true;
    }
    if (meta_out) *meta_out = meta;
    return store;
}

// Copies a checkpoint keeping only parameters accepted by `keep`; the Adam
// block is dropped. Used to produce inference-only artifacts.
void strip_checkpoint(const std::string& in_path, const std::string& out_path,
                      const std::function<bool(const std::string&)>& keep);

}  // namespace pcgen
