#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "pcgen/checkpoint.hpp"
#include "pcgen/io.hpp"
#include "pcgen/pipeline.hpp"
#include "pcgen/threadpool.hpp"
#include "pcgen/training.hpp"

namespace fs = std::filesystem;
using namespace pcgen;

namespace {

TrainConfig load_train_config(const std::string& config_path) {
    if (config_path.empty()) return TrainConfig{};
    return TrainConfig::from_json(read_text_file(config_path));
}

void write_or_print(const std::string& out_dir, const std::string& filename,
                    const std::string& content) {
    if (out_dir.empty()) return;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    write_text_file((fs::path(out_dir) / filename).string(), content);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"point cloud single-view reconstruction: conditional coupling-flow generator "
                 "with a cross-modal least-squares critic"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads for dense kernels (0 = all cores)");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic shape dataset");
    DatasetConfig dcfg;
    std::string gen_out = "data";
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--categories", dcfg.categories, "shape families to use (1-4)");
    gen->add_option("--shapes", dcfg.shapes_per_category, "shapes per category");
    gen->add_option("--views", dcfg.views_per_shape, "views per shape");
    gen->add_option("--train-fraction", dcfg.train_fraction, "train split fraction");
    gen->add_option("--points", dcfg.cloud_points, "points per stored cloud");
    gen->add_option("--resolution", dcfg.image_resolution, "silhouette resolution");
    gen->add_option("--seed", dcfg.seed, "dataset seed");

    // train
    auto* tr = app.add_subcommand("train", "train a model");
    std::string tr_config, tr_data, tr_out = "run", tr_resume;
    bool tr_seed_set = false;
    std::uint64_t tr_seed = 0;
    tr->add_option("--config", tr_config, "training config JSON (flat key/value)");
    tr->add_option("--data", tr_data, "dataset directory or manifest")->required();
    tr->add_option("--out", tr_out, "output directory for checkpoints and logs");
    tr->add_option("--resume", tr_resume, "epoch checkpoint to resume from");
    tr->add_option("--seed", tr_seed, "override the config seed")
        ->each([&](const std::string&) { tr_seed_set = true; });

    // infer
    auto* in = app.add_subcommand("infer", "reconstruct a point cloud from one image");
    std::string in_ckpt, in_image, in_out = "cloud.xyz", in_format = "xyz", in_mode = "mean";
    InferOptions in_opt;
    in->add_option("--checkpoint", in_ckpt, "model checkpoint")->required();
    in->add_option("--image", in_image, "input image (PGM/PPM)")->required();
    in->add_option("--n", in_opt.n, "number of points to sample");
    in->add_option("--format", in_format, "output format: xyz, ply, or bin");
    in->add_option("--out", in_out, "output cloud path");
    in->add_option("--latent-mode", in_mode, "latent from encoder: mean or sample");
    in->add_option("--seed", in_opt.seed, "sampling seed");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    EvalRunSpec espec;
    std::string ev_out;
    ev->add_option("--checkpoint", espec.checkpoint, "model checkpoint")->required();
    ev->add_option("--data", espec.data, "dataset directory or manifest")->required();
    ev->add_option("--n", espec.n, "points sampled per reconstruction");
    ev->add_option("--reps", espec.repetitions, "independent sampling repetitions");
    ev->add_option("--tau", espec.tau, "F1 threshold on squared distance");
    ev->add_option("--seed", espec.seed, "evaluation seed");
    ev->add_option("--split", espec.split, "manifest split to evaluate");
    ev->add_option("--latent-mode", espec.latent_mode, "latent from encoder: mean or sample");
    ev->add_option("--out", ev_out, "directory for eval.json");

    // oracle
    auto* orc = app.add_subcommand("oracle", "score independent surface resamples (upper bound)");
    std::string orc_data, orc_out;
    i64 orc_n = 2500;
    double orc_tau = 0.001;
    std::uint64_t orc_seed = 0;
    orc->add_option("--data", orc_data, "dataset directory or manifest")->required();
    orc->add_option("--n", orc_n, "points per resample");
    orc->add_option("--tau", orc_tau, "F1 threshold on squared distance");
    orc->add_option("--seed", orc_seed, "resampling seed");
    orc->add_option("--out", orc_out, "directory for oracle.json");

    // bench-speed
    auto* bench = app.add_subcommand("bench-speed", "inference throughput (samples per second)");
    std::string b_ckpt, b_data;
    i64 b_n = 2500, b_batch = 16, b_warmup = 3;
    double b_duration = 5.0;
    bench->add_option("--checkpoint", b_ckpt, "model checkpoint")->required();
    bench->add_option("--data", b_data, "dataset directory or manifest")->required();
    bench->add_option("--n", b_n, "points per reconstruction");
    bench->add_option("--batch", b_batch, "images per batch");
    bench->add_option("--duration", b_duration, "minimum timed seconds");
    bench->add_option("--warmup", b_warmup, "warmup batches excluded from timing");

    // ablate
    auto* ab = app.add_subcommand("ablate", "emit the three comparison tables");
    AblationSpec aspec;
    std::string ab_out, ab_nlist = "256,1024,4096";
    ab->add_option("--data", aspec.data, "dataset directory or manifest")->required();
    ab->add_option("--ckpt-adv", aspec.ckpt_with_adv, "checkpoint trained with the critic")
        ->required();
    ab->add_option("--ckpt-noadv", aspec.ckpt_without_adv, "checkpoint trained without it")
        ->required();
    ab->add_option("--n-list", ab_nlist, "comma-separated sampling resolutions");
    ab->add_option("--n", aspec.table5_n, "resolution for architecture/stability tables");
    ab->add_option("--reps", aspec.repetitions, "stability repetitions");
    ab->add_option("--tau", aspec.tau, "F1 threshold on squared distance");
    ab->add_option("--seed", aspec.seed, "evaluation seed");
    ab->add_option("--out", ab_out, "directory for ablation tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        set_global_threads(threads);

        if (*gen) {
            const auto manifest = build_dataset(dcfg, gen_out);
            i64 train_n = 0, test_n = 0;
            for (const auto& r : manifest) (r.split == "train" ? train_n : test_n) += 1;
            std::printf("wrote %zu samples (%lld train / %lld test) to %s\n", manifest.size(),
                        static_cast<long long>(train_n), static_cast<long long>(test_n),
                        gen_out.c_str());
        } else if (*tr) {
            TrainConfig cfg = load_train_config(tr_config);
            if (tr_seed_set) cfg.seed = tr_seed;
            const TrainResult res = train(cfg, tr_data, tr_out, tr_resume);
            std::printf("trained %lld epochs (%lld steps); final checkpoint: %s\n",
                        static_cast<long long>(res.epochs), static_cast<long long>(res.steps),
                        res.final_checkpoint.c_str());
        } else if (*in) {
            in_opt.latent_mode = in_mode;
            const ImageTensor image = read_image(in_image);
            const PointCloud cloud = infer(in_ckpt, image, in_opt);
            write_cloud(in_out, cloud, cloud_format_from_name(in_format));
            std::printf("wrote %lld points to %s\n", static_cast<long long>(cloud.size()),
                        in_out.c_str());
        } else if (*ev) {
            const EvalResult res = evaluate(espec);
            std::fputs(res.to_text().c_str(), stdout);
            write_or_print(ev_out, "eval.json", res.to_json() + "\n");
        } else if (*orc) {
            const EvalResult res = oracle_baseline(orc_data, orc_n, orc_tau, orc_seed);
            std::fputs(res.to_text().c_str(), stdout);
            write_or_print(orc_out, "oracle.json", res.to_json() + "\n");
        } else if (*bench) {
            const BenchResult res = bench_speed(b_ckpt, b_data, b_n, b_batch, b_duration, b_warmup);
            std::printf("%.2f samples/s (%lld samples in %.2fs, n=%lld, batch=%lld, threads=%d)\n",
                        res.samples_per_sec, static_cast<long long>(res.samples), res.seconds,
                        static_cast<long long>(res.n), static_cast<long long>(res.batch),
                        res.threads);
            std::printf("hardware: %s\n", res.hardware.c_str());
        } else if (*ab) {
            aspec.n_values.clear();
            std::stringstream ss(ab_nlist);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) aspec.n_values.push_back(std::stoll(tok));
            if (aspec.n_values.empty()) throw ConfigError("ablate: empty --n-list");
            const AblationResult res = ablation_tables(aspec);
            std::fputs(res.text.c_str(), stdout);
            if (!ab_out.empty()) {
                write_or_print(ab_out, "ablation.json", res.json + "\n");
                write_or_print(ab_out, "ablation.txt", res.text);
            }
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
