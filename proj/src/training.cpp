#include "pcgen/training.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>

namespace pcgen {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

ModelConfig TrainConfig::model() const {
    ModelConfig m;
    m.latent_dim = latent_dim;
    m.flow_layers = flow_layers;
    return m;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("config: epochs must be positive");
    if (batch_size < 1) throw ConfigError("config: batch_size must be positive");
    if (!(base_lr > 0.0)) throw ConfigError("config: base_lr must be positive");
    if (lr_drop_epoch < 0) throw ConfigError("config: lr_drop_epoch must be >= 0");
    if (!(lr_divisor > 0.0)) throw ConfigError("config: lr_divisor must be positive");
    if (points_per_cloud < 1) throw ConfigError("config: points_per_cloud must be positive");
    if (latent_dim < 1) throw ConfigError("config: latent_dim must be positive");
    if (flow_layers < 1) throw ConfigError("config: flow_layers must be positive");
    if (adv_weight < 0.0) throw ConfigError("config: adv_weight must be >= 0");
    if (d_steps_per_g_step < 0) throw ConfigError("config: d_steps_per_g_step must be >= 0");
    if (precision != "f32" && precision != "f64")
        throw ConfigError("config: precision must be f32 or f64");
    model().validate();
}

std::string TrainConfig::to_json() const {
    json j = {{"epochs", epochs},
              {"batch_size", batch_size},
              {"base_lr", base_lr},
              {"lr_drop_epoch", lr_drop_epoch},
              {"lr_divisor", lr_divisor},
              {"points_per_cloud", points_per_cloud},
              {"latent_dim", latent_dim},
              {"flow_layers", flow_layers},
              {"kl_weight", kl_weight},
              {"adv_weight", adv_weight},
              {"d_steps_per_g_step", d_steps_per_g_step},
              {"seed", seed},
              {"precision", precision}};
    return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config json: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    TrainConfig c;
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "epochs") c.epochs = val.get<i64>();
            else if (key == "batch_size") c.batch_size = val.get<i64>();
            else if (key == "base_lr") c.base_lr = val.get<double>();
            else if (key == "lr_drop_epoch") c.lr_drop_epoch = val.get<i64>();
            else if (key == "lr_divisor") c.lr_divisor = val.get<double>();
            else if (key == "points_per_cloud") c.points_per_cloud = val.get<i64>();
            else if (key == "latent_dim") c.latent_dim = val.get<i64>();
            else if (key == "flow_layers") c.flow_layers = val.get<i64>();
            else if (key == "kl_weight") c.kl_weight = val.get<double>();
            else if (key == "adv_weight") c.adv_weight = val.get<double>();
            else if (key == "d_steps_per_g_step") c.d_steps_per_g_step = val.get<i64>();
            else if (key == "seed") c.seed = val.get<std::uint64_t>();
            else if (key == "precision") c.precision = val.get<std::string>();
            else throw ConfigError("config: unknown key '" + key + "'");
        } catch (const json::exception& e) {
            throw ConfigError("config: bad value for '" + key + "': " + e.what());
        }
    }
    c.validate();
    return c;
}

namespace {

template <class T>
Tensor<T> noise_tensor(std::vector<i64> shape, Rng& rng) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.v) v = static_cast<T>(rng.normal());
    return t;
}

template <class T>
std::vector<Tensor<T>> snapshot_group(const ParamStore<T>& store, bool (*pred)(const std::string&)) {
    std::vector<Tensor<T>> out;
    for (const auto& e : store.entries())
        if (pred(e.name)) out.push_back(e.value);
    return out;
}

template <class T>
bool group_equals(const ParamStore<T>& store, bool (*pred)(const std::string&),
                  const std::vector<Tensor<T>>& snap) {
    size_t k = 0;
    for (const auto& e : store.entries()) {
        if (!pred(e.name)) continue;
        if (e.value.v != snap[k].v) return false;
        ++k;
    }
    return true;
}

}  // namespace

template <class T>
Tensor<T> TrainLoop<T>::batch_rows(const std::vector<const DatasetSample*>& batch) const {
    const i64 n = cfg_.points_per_cloud;
    Tensor<T> rows({static_cast<i64>(batch.size()) * n, 3});
    i64 r = 0;
    for (const auto* s : batch) {
        if (s->cloud.size() < n)
            throw DataError("sample " + s->id + " has " + std::to_string(s->cloud.size()) +
                            " points, need " + std::to_string(n));
        // Stored points are i.i.d. surface draws, so a prefix is itself a
        // uniform subsample.
        for (i64 i = 0; i < n; ++i) {
            rows.v[r * 3 + 0] = static_cast<T>(s->cloud[i].x);
            rows.v[r * 3 + 1] = static_cast<T>(s->cloud[i].y);
            rows.v[r * 3 + 2] = static_cast<T>(s->cloud[i].z);
            ++r;
        }
    }
    return rows;
}

template <class T>
Tensor<T> TrainLoop<T>::batch_images(const std::vector<const DatasetSample*>& batch) const {
    std::vector<const ImageTensor*> imgs;
    imgs.reserve(batch.size());
    for (const auto* s : batch) imgs.push_back(&s->image);
    return images_to_batch<T>(imgs);
}

template <class T>
Tensor<T> TrainLoop<T>::detached_fake_rows(const Tensor<T>& images, i64 b, Rng& rng) {
    const i64 n = cfg_.points_per_cloud, d = mcfg_.latent_dim;
    Tensor<T> eps = noise_tensor<T>({b, d}, rng);
    Tensor<T> u = noise_tensor<T>({b * n, 3}, rng);
    Tape<T> tape(false);
    auto p = encode_image_graph(tape, store_, mcfg_, tape.constant(images), false);
    auto z = reparam_graph(tape, p, tape.constant(eps));
    auto fake = flow_forward_rows(tape, store_, mcfg_, tape.constant(u), z, n, false);
    return tape.value(fake.points);
}

template <class T>
StepRecord TrainLoop<T>::train_step(const std::vector<const DatasetSample*>& batch, double lr,
                                    Rng& rng, bool debug_isolation) {
    if (batch.empty()) throw NumericError("train_step: empty batch");
    const i64 b = static_cast<i64>(batch.size());
    const i64 n = cfg_.points_per_cloud, d = mcfg_.latent_dim;
    const bool adversarial = cfg_.adv_weight != 0.0 && cfg_.d_steps_per_g_step > 0;

    const Tensor<T> rows = batch_rows(batch);
    const Tensor<T> images = batch_images(batch);

    AdamHyper hyper;
    hyper.lr = lr;

    auto batch_ids = [&]() {
        std::string ids;
        for (const auto* s : batch) ids += (ids.empty() ? "" : ",") + s->id;
        return ids;
    };

    StepRecord rec;
    rec.step = step_;
    rec.lr = lr;

    // Critic update(s) on detached reconstructions, then the generator.
    if (adversarial) {
        std::vector<Tensor<T>> gen_snap;
        if (debug_isolation) gen_snap = snapshot_group<T>(store_, is_generator_param);
        for (i64 k = 0; k < cfg_.d_steps_per_g_step; ++k) {
            const Tensor<T> fake = detached_fake_rows(images, b, rng);
            Tape<T> tape(true);
            auto loss = discriminator_loss_graph(tape, store_, mcfg_, tape.constant(images),
                                                 tape.constant(rows), tape.constant(fake), n);
            rec.d_loss = tape.scalar(loss);
            if (!std::isfinite(rec.d_loss))
                throw NumericError("non-finite critic loss at step " + std::to_string(step_) +
                                   "; batch ids: " + batch_ids());
            tape.backward(loss);
            tape.materialize_param_grads();
            for (const auto& bind : tape.bindings())
                store_.adam_update(store_.entry(bind.name), tape.grad(bind.var), hyper);
        }
        if (debug_isolation && !group_equals<T>(store_, is_generator_param, gen_snap))
            throw NumericError("critic step touched generator parameters");
    }

    // Generator update: variational terms from the point path, adversarial
    // term from a fresh image-path reconstruction.
    {
        std::vector<Tensor<T>> disc_snap;
        if (debug_isolation) disc_snap = snapshot_group<T>(store_, is_discriminator_param);
        Tape<T> tape(true);
        auto eps_q = tape.constant(noise_tensor<T>({b, d}, rng));
        typename Tape<T>::Var eps_p, u_fake;
        if (adversarial) {
            eps_p = tape.constant(noise_tensor<T>({b, d}, rng));
            u_fake = tape.constant(noise_tensor<T>({b * n, 3}, rng));
        }
        const double advw = adversarial ? cfg_.adv_weight : 0.0;
        auto loss = generator_loss_graph(tape, store_, mcfg_, tape.constant(rows),
                                         tape.constant(images), eps_q, n,
                                         cfg_.effective_kl_weight(), advw, eps_p, u_fake);
        rec.recon_nll = tape.scalar(loss.recon_nll);
        rec.kl = tape.scalar(loss.kl);
        rec.adv = advw != 0.0 ? tape.scalar(loss.adv) : 0.0;
        rec.total = rec.recon_nll + cfg_.effective_kl_weight() * rec.kl + advw * rec.adv;
        if (!std::isfinite(rec.total))
            throw NumericError("non-finite generator loss at step " + std::to_string(step_) +
                               "; batch ids: " + batch_ids());
        tape.backward(loss.total);
        tape.materialize_param_grads();
        for (const auto& bind : tape.bindings())
            store_.adam_update(store_.entry(bind.name), tape.grad(bind.var), hyper);
        if (debug_isolation && !group_equals<T>(store_, is_discriminator_param, disc_snap))
            throw NumericError("generator step touched critic parameters");
    }

    ++step_;
    return rec;
}

template <class T>
void TrainLoop<T>::run(const std::vector<DatasetSample>& train_samples, std::ostream* log,
                       const std::string& out_dir, bool debug_isolation,
                       std::vector<StepRecord>* records) {
    const i64 total = static_cast<i64>(train_samples.size());
    while (epoch_ < cfg_.epochs) {
        const double lr = lr_at(epoch_, cfg_.base_lr, cfg_.lr_drop_epoch, cfg_.lr_divisor);
        // Per-epoch reshuffle from a derived seed, reproducible on resume.
        std::vector<i64> order(static_cast<size_t>(total));
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(cfg_.seed, {0x5f1e, static_cast<std::uint64_t>(epoch_)}));
        for (i64 i = total - 1; i > 0; --i)
            std::swap(order[static_cast<size_t>(i)],
                      order[shuffle_rng.uniform_index(static_cast<std::uint64_t>(i + 1))]);

        i64 step_in_epoch = 0;
        for (i64 off = 0; off < total; off += cfg_.batch_size) {
            const i64 hi = std::min(off + cfg_.batch_size, total);
            std::vector<const DatasetSample*> batch;
            for (i64 i = off; i < hi; ++i)
                batch.push_back(&train_samples[static_cast<size_t>(order[static_cast<size_t>(i)])]);
            Rng step_rng(derive_seed(cfg_.seed, {0x57e9, static_cast<std::uint64_t>(epoch_),
                                                 static_cast<std::uint64_t>(step_in_epoch)}));
            const StepRecord rec = train_step(batch, lr, step_rng, debug_isolation);
            if (records) records->push_back(rec);
            if (log) {
                json line = {{"step", rec.step},   {"recon_nll", rec.recon_nll}, {"kl", rec.kl},
                             {"adv", rec.adv},     {"total", rec.total},         {"lr", rec.lr}};
                (*log) << line.dump() << "\n";
            }
            ++step_in_epoch;
        }
        ++epoch_;  // checkpoints record completed epochs, so resume restarts cleanly
        if (!out_dir.empty()) {
            char name[48];
            std::snprintf(name, sizeof name, "ckpt_epoch_%03d.fgck", static_cast<int>(epoch_));
            save((fs::path(out_dir) / name).string());
        }
    }
    if (!out_dir.empty()) save((fs::path(out_dir) / "ckpt_final.fgck").string());
}

template <class T>
void TrainLoop<T>::save(const std::string& path) const {
    CheckpointMeta meta;
    meta.dtype = ckpt_detail::dtype_name<T>();
    meta.step = step_;
    meta.epoch = epoch_;
    meta.seed = cfg_.seed;
    meta.model_json = mcfg_.to_json();
    meta.extra_json = cfg_.to_json();
    save_checkpoint(path, store_, meta, /*with_adam=*/true);
}

template class TrainLoop<float>;
template class TrainLoop<double>;

namespace {

template <class T>
TrainResult train_impl(const TrainConfig& cfg, const std::string& data_path,
                       const std::string& out_dir, const std::string& resume_checkpoint,
                       bool debug_isolation) {
    const std::string manifest = resolve_manifest_path(data_path);
    std::vector<DatasetSample> samples = load_samples(manifest, "train");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + out_dir);

    std::unique_ptr<TrainLoop<T>> loop;
    bool resumed = false;
    if (!resume_checkpoint.empty()) {
        CheckpointMeta meta;
        ParamStore<T> store = load_checkpoint<T>(resume_checkpoint, &meta);
        if (meta.model_json != cfg.model().to_json())
            throw DataError("resume: checkpoint model does not match config");
        TrainConfig stored = TrainConfig::from_json(meta.extra_json);
        stored.epochs = cfg.epochs;  // extending the run is the one allowed change
        if (stored.to_json() != cfg.to_json())
            throw DataError("resume: checkpoint training config does not match");
        loop = std::make_unique<TrainLoop<T>>(cfg, std::move(store), meta.epoch, meta.step);
        resumed = true;
    } else {
        loop = std::make_unique<TrainLoop<T>>(TrainLoop<T>::fresh(cfg));
    }

    const std::string log_path = (fs::path(out_dir) / "train_log.jsonl").string();
    std::ofstream log(log_path, resumed ? std::ios::app : std::ios::trunc);
    if (!log) throw DataError("cannot write log: " + log_path);
    if (!resumed) {
        json header = {{"config", json::parse(cfg.to_json())},
                       {"model", json::parse(cfg.model().to_json())},
                       {"dataset", manifest}};
        log << header.dump() << "\n";
    }

    loop->run(samples, &log, out_dir, debug_isolation);

    TrainResult res;
    res.final_checkpoint = (fs::path(out_dir) / "ckpt_final.fgck").string();
    res.log_path = log_path;
    res.steps = loop->step();
    res.epochs = loop->epoch();
    return res;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::string& data_path, const std::string& out_dir,
                  const std::string& resume_checkpoint, bool debug_isolation) {
    cfg.validate();
    if (cfg.precision == "f64")
        return train_impl<double>(cfg, data_path, out_dir, resume_checkpoint, debug_isolation);
    return train_impl<float>(cfg, data_path, out_dir, resume_checkpoint, debug_isolation);
}

}  // namespace pcgen
