#include "pcgen/pipeline.hpp"

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "pcgen/checkpoint.hpp"
#include "pcgen/flow.hpp"
#include "pcgen/threadpool.hpp"

namespace pcgen {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

template <class T>
struct InferenceModel {
    ModelConfig cfg;
    ParamStore<T> store;
};

// Loads psi.* and theta.* only; critic weights are ignored even if present.
template <class T>
InferenceModel<T> load_inference_model(const std::string& path) {
    CheckpointMeta meta;
    ParamStore<T> full = load_checkpoint<T>(path, &meta);
    if (meta.model_json.empty())
        throw DataError("checkpoint has no model config: " + path);
    InferenceModel<T> m;
    m.cfg = ModelConfig::from_json(meta.model_json);
    bool has_psi = false, has_theta = false;
    for (auto& e : full.entries()) {
        if (!is_inference_param(e.name)) continue;
        has_psi = has_psi || e.name.rfind("psi.", 0) == 0;
        has_theta = has_theta || e.name.rfind("theta.", 0) == 0;
        m.store.create(e.name, std::move(e.value));
    }
    if (!has_psi || !has_theta)
        throw DataError("checkpoint is missing psi/theta weights: " + path);
    return m;
}

template <class T>
PointCloud infer_with_model(InferenceModel<T>& m, const ImageTensor& image,
                            const InferOptions& opt, std::uint64_t seed) {
    if (opt.n < 1) throw NumericError("infer: n must be >= 1");
    if (opt.latent_mode != "mean" && opt.latent_mode != "sample")
        throw ConfigError("infer: latent_mode must be 'mean' or 'sample'");
    Rng rng(seed);
    const LatentGaussian g = encode_image(m.store, m.cfg, image);
    const std::vector<double> z = opt.latent_mode == "mean" ? g.mean : reparam_sample(g, rng);
    return sample_cloud(m.store, m.cfg, z, opt.n, rng);
}

struct PairMetrics {
    double cd = 0.0, emd = 0.0, f1 = 0.0;
};

PairMetrics pair_metrics(const PointCloud& pred, const PointCloud& gt, double tau,
                         std::uint64_t emd_seed) {
    const auto [np, tp] = normalize_to_box(pred);
    const auto [ng, tg] = normalize_to_box(gt);
    PairMetrics pm;
    pm.cd = chamfer(np, ng);
    pm.emd = emd_dispatch(np, ng, emd_seed);
    pm.f1 = f1_score(np, ng, tau).f1;
    return pm;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

// Per-category and overall aggregation for one repetition.
struct RepAggregate {
    std::map<int, std::vector<PairMetrics>> by_cat;

    void add(int cat, const PairMetrics& pm) { by_cat[cat].push_back(pm); }

    MetricReport overall() const {
        std::vector<double> cds, emds, f1s;
        for (const auto& [c, v] : by_cat)
            for (const auto& pm : v) {
                cds.push_back(pm.cd);
                emds.push_back(pm.emd);
                f1s.push_back(pm.f1);
            }
        return {mean_of(cds), mean_of(emds), mean_of(f1s)};
    }

    MetricReport category(int cat) const {
        std::vector<double> cds, emds, f1s;
        for (const auto& pm : by_cat.at(cat)) {
            cds.push_back(pm.cd);
            emds.push_back(pm.emd);
            f1s.push_back(pm.f1);
        }
        return {mean_of(cds), mean_of(emds), mean_of(f1s)};
    }
};

EvalResult combine_repetitions(const std::vector<RepAggregate>& reps, i64 samples) {
    EvalResult res;
    res.samples = samples;
    res.repetitions = static_cast<i64>(reps.size());

    std::vector<double> cds, emds, f1s;
    for (const auto& rep : reps) {
        const MetricReport o = rep.overall();
        res.per_repetition.push_back(o);
        cds.push_back(o.cd);
        emds.push_back(o.emd);
        f1s.push_back(o.f1);
    }
    res.overall = {mean_of(cds), mean_of(emds), mean_of(f1s)};
    res.overall_std = {std_of(cds), std_of(emds), std_of(f1s)};

    for (const auto& [cat, v] : reps.front().by_cat) {
        std::vector<double> c, e, f;
        for (const auto& rep : reps) {
            const MetricReport m = rep.category(cat);
            c.push_back(m.cd);
            e.push_back(m.emd);
            f.push_back(m.f1);
        }
        res.category_ids.push_back(cat);
        res.per_category.push_back({mean_of(c), mean_of(e), mean_of(f)});
    }
    return res;
}

std::string cpu_description() {
    std::ifstream f("/proc/cpuinfo");
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto pos = line.find(':');
            if (pos != std::string::npos && pos + 2 <= line.size())
                return line.substr(pos + 2);
        }
    }
    return "unknown-cpu";
}

template <class T>
EvalResult evaluate_typed(const EvalRunSpec& spec) {
    InferenceModel<T> model = load_inference_model<T>(spec.checkpoint);
    const std::string manifest = resolve_manifest_path(spec.data);
    const std::vector<DatasetSample> samples = load_samples(manifest, spec.split);

    InferOptions opt;
    opt.n = spec.n;
    opt.latent_mode = spec.latent_mode;

    std::vector<RepAggregate> reps;
    for (i64 r = 0; r < spec.repetitions; ++r) {
        const std::uint64_t sub_seed = spec.seed ^ static_cast<std::uint64_t>(r);
        RepAggregate agg;
        for (size_t i = 0; i < samples.size(); ++i) {
            try {
                const std::uint64_t s = derive_seed(sub_seed, {static_cast<std::uint64_t>(i)});
                const PointCloud pred = infer_with_model(model, samples[i].image, opt, s);
                agg.add(samples[i].category,
                        pair_metrics(pred, samples[i].cloud, spec.tau,
                                     derive_seed(sub_seed, {0xe3d, static_cast<std::uint64_t>(i)})));
            } catch (const std::exception& e) {
                throw NumericError("sample " + samples[i].id + ": " + e.what());
            }
        }
        reps.push_back(std::move(agg));
    }
    return combine_repetitions(reps, static_cast<i64>(samples.size()));
}

}  // namespace

PointCloud infer(const std::string& checkpoint_path, const ImageTensor& image,
                 const InferOptions& opt) {
    const CheckpointMeta meta = read_checkpoint_meta(checkpoint_path);
    if (meta.dtype == "f64") {
        auto m = load_inference_model<double>(checkpoint_path);
        return infer_with_model(m, image, opt, opt.seed);
    }
    auto m = load_inference_model<float>(checkpoint_path);
    return infer_with_model(m, image, opt, opt.seed);
}

EvalResult evaluate(const EvalRunSpec& spec) {
    if (spec.n < 1 || spec.repetitions < 1)
        throw ConfigError("evaluate: n and repetitions must be >= 1");
    const CheckpointMeta meta = read_checkpoint_meta(spec.checkpoint);
    return meta.dtype == "f64" ? evaluate_typed<double>(spec) : evaluate_typed<float>(spec);
}

EvalResult oracle_baseline(const std::string& data, i64 n, double tau, std::uint64_t seed) {
    const std::string manifest = resolve_manifest_path(data);
    const std::vector<DatasetSample> samples = load_samples(manifest, "test");
    RepAggregate agg;
    for (size_t i = 0; i < samples.size(); ++i) {
        const ShapeSpec spec = load_shape_spec(manifest, samples[i].id);
        Rng rng(derive_seed(seed, {0x0a7c, static_cast<std::uint64_t>(i)}));
        const PointCloud resample = sample_shape_surface(spec, n, rng);
        agg.add(samples[i].category,
                pair_metrics(resample, samples[i].cloud, tau,
                             derive_seed(seed, {0xe3d, static_cast<std::uint64_t>(i)})));
    }
    return combine_repetitions({agg}, static_cast<i64>(samples.size()));
}

BenchResult bench_speed(const std::string& checkpoint_path, const std::string& data, i64 n,
                        i64 batch, double min_seconds, i64 warmup_batches) {
    if (n < 1 || batch < 1) throw ConfigError("bench: n and batch must be >= 1");
    const CheckpointMeta meta = read_checkpoint_meta(checkpoint_path);
    if (meta.dtype == "f64")
        throw ConfigError("bench: expected an f32 training checkpoint");
    InferenceModel<float> model = load_inference_model<float>(checkpoint_path);

    const std::string manifest = resolve_manifest_path(data);
    const std::vector<DatasetSample> samples = load_samples(manifest, "test");

    InferOptions opt;
    opt.n = n;

    std::uint64_t seq = 0;
    auto run_batch = [&]() {
        for (i64 k = 0; k < batch; ++k) {
            const DatasetSample& s = samples[seq % samples.size()];
            infer_with_model(model, s.image, opt, derive_seed(0xbe7c, {seq}));
            ++seq;
        }
    };

    for (i64 w = 0; w < warmup_batches; ++w) run_batch();

    const auto t0 = std::chrono::steady_clock::now();
    i64 done = 0;
    double elapsed = 0.0;
    do {
        run_batch();
        done += batch;
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } while (elapsed < min_seconds);

    BenchResult res;
    res.samples = done;
    res.seconds = elapsed;
    res.samples_per_sec = static_cast<double>(done) / elapsed;
    res.n = n;
    res.batch = batch;
    res.threads = global_pool().size();
    res.hardware = cpu_description();
    return res;
}

AblationResult ablation_tables(const AblationSpec& spec) {
    std::vector<std::string> missing;
    for (const std::string& p : {spec.ckpt_with_adv, spec.ckpt_without_adv})
        if (!fs::exists(p)) missing.push_back(p);
    if (!missing.empty()) {
        std::string msg = "ablation: missing checkpoints:";
        for (const auto& m : missing) msg += " " + m;
        throw DataError(msg);
    }

    auto eval_at = [&](const std::string& ckpt, i64 n, i64 reps) {
        EvalRunSpec es;
        es.checkpoint = ckpt;
        es.data = spec.data;
        es.n = n;
        es.repetitions = reps;
        es.tau = spec.tau;
        es.seed = spec.seed;
        return evaluate(es);
    };

    std::string text;
    json j;

    {  // Architecture: critic on/off.
        const EvalResult without = eval_at(spec.ckpt_without_adv, spec.table5_n, 1);
        const EvalResult with = eval_at(spec.ckpt_with_adv, spec.table5_n, 1);
        text += "architecture comparison (n=" + std::to_string(spec.table5_n) + ")\n";
        text += metric_table({"generator only", "generator + critic"},
                             {without.overall, with.overall});
        text += "\n";
        j["architecture"] = {{"generator_only", json::parse(without.overall.to_json())},
                             {"generator_plus_critic", json::parse(with.overall.to_json())}};
    }

    {  // Variable sampling resolution from one checkpoint.
        std::vector<std::string> labels;
        std::vector<MetricReport> rows;
        json jn = json::array();
        for (i64 n : spec.n_values) {
            const EvalResult r = eval_at(spec.ckpt_with_adv, n, 1);
            labels.push_back("n=" + std::to_string(n));
            rows.push_back(r.overall);
            jn.push_back({{"n", n}, {"metrics", json::parse(r.overall.to_json())}});
        }
        text += "sampling resolution\n" + metric_table(labels, rows) + "\n";
        j["resolution"] = jn;
    }

    {  // Repeated-sampling stability.
        const EvalResult r = eval_at(spec.ckpt_with_adv, spec.table5_n, spec.repetitions);
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "repeated sampling (%lld runs, n=%lld)\n"
                      "  CD(x1e3)  %.3f +- %.4f\n  EMD(x1e2) %.3f +- %.4f\n  F1(%%)     %.2f +- %.4f\n\n",
                      static_cast<long long>(spec.repetitions),
                      static_cast<long long>(spec.table5_n), r.overall.cd_e3(),
                      r.overall_std.cd * 1e3, r.overall.emd_e2(), r.overall_std.emd * 1e2,
                      r.overall.f1_pct(), r.overall_std.f1 * 1e2);
        text += buf;
        j["stability"] = {{"runs", spec.repetitions},
                          {"n", spec.table5_n},
                          {"mean", json::parse(r.overall.to_json())},
                          {"std", {{"cd_raw", r.overall_std.cd},
                                   {"emd_raw", r.overall_std.emd},
                                   {"f1_raw", r.overall_std.f1}}}};
    }

    AblationResult out;
    out.text = text;
    out.json = j.dump(2);
    return out;
}

std::string EvalResult::to_json() const {
    json j;
    j["samples"] = samples;
    j["repetitions"] = repetitions;
    j["overall"] = json::parse(overall.to_json());
    j["overall_std"] = {{"cd_raw", overall_std.cd},
                        {"emd_raw", overall_std.emd},
                        {"f1_raw", overall_std.f1}};
    json cats = json::array();
    for (size_t i = 0; i < category_ids.size(); ++i)
        cats.push_back({{"category", category_ids[i]},
                        {"metrics", json::parse(per_category[i].to_json())}});
    j["per_category"] = cats;
    json reps = json::array();
    for (const auto& r : per_repetition) reps.push_back(json::parse(r.to_json()));
    j["per_repetition"] = reps;
    return j.dump(2);
}

std::string EvalResult::to_text() const {
    std::vector<std::string> labels;
    std::vector<MetricReport> rows;
    for (size_t i = 0; i < category_ids.size(); ++i) {
        labels.push_back("category " + std::to_string(category_ids[i]));
        rows.push_back(per_category[i]);
    }
    labels.push_back("overall");
    rows.push_back(overall);
    std::string out = metric_table(labels, rows);
    if (repetitions > 1) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "std over %lld repetitions: CD %.5f  EMD %.5f  F1 %.5f (raw scale)\n",
                      static_cast<long long>(repetitions), overall_std.cd, overall_std.emd,
                      overall_std.f1);
        out += buf;
    }
    return out;
}

std::string BenchResult::to_json() const {
    json j = {{"samples_per_sec", samples_per_sec},
              {"samples", samples},
              {"seconds", seconds},
              {"n", n},
              {"batch", batch},
              {"threads", threads},
              {"hardware", hardware}};
    return j.dump();
}

}  // namespace pcgen
