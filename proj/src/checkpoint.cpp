#include "pcgen/checkpoint.hpp"

namespace pcgen {

CheckpointMeta read_checkpoint_meta(const std::string& path) {
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
    meta.step = header.value("step", i64{0});
    meta.epoch = header.value("epoch", i64{0});
    meta.seed = header.value("seed", std::uint64_t{0});
    if (header.contains("model")) meta.model_json = header["model"].dump();
    if (header.contains("extra")) meta.extra_json = header["extra"].dump();
    for (const auto& p : header.at("params"))
        meta.param_names.push_back(p.at("name").get<std::string>());
    return meta;
}

namespace {

template <class T>
void strip_typed(const std::string& in_path, const std::string& out_path,
                 const std::function<bool(const std::string&)>& keep) {
    CheckpointMeta meta;
    ParamStore<T> full = load_checkpoint<T>(in_path, &meta);
    ParamStore<T> kept;
    for (const auto& e : full.entries())
        if (keep(e.name)) kept.create(e.name, e.value);
    save_checkpoint(out_path, kept, meta, /*with_adam=*/false);
}

}  // namespace

void strip_checkpoint(const std::string& in_path, const std::string& out_path,
                      const std::function<bool(const std::string&)>& keep) {
    const CheckpointMeta meta = read_checkpoint_meta(in_path);
    if (meta.dtype == "f32")
        strip_typed<float>(in_path, out_path, keep);
    else if (meta.dtype == "f64")
        strip_typed<double>(in_path, out_path, keep);
    else
        throw DataError("unknown checkpoint dtype: " + meta.dtype);
}

}  // namespace pcgen
