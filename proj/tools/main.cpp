// Command-line front end: dataset generation, the two training stages,
// evaluation with regional scores, OOD and data-efficiency protocols, timing,
// autoregressive rollout, map export, and a gradient self-check.
//
// Exit codes: 0 success, 1 runtime failure, 2 bad command line.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rqmap/eval.hpp"
#include "rqmap/io.hpp"
#include "rqmap/pipeline.hpp"

using namespace rqmap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_summary(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

std::uint64_t digest_json(const json& j) {
    const std::string s = j.dump();
    return fnv1a64(s.data(), s.size());
}

Model<float> load_checkpoint(const fs::path& path) {
    Model<float> m = build_from_arch(read_checkpoint_arch(path), 0);
    load_model(m, path);
    return m;
}

Dataset dataset_from_sequences(const std::vector<std::vector<DepthMap>>& seqs,
                               const DatagenConfig& dg, const SceneSpec& spec) {
    Dataset ds;
    ds.kind = Dataset::Kind::sequences;
    ds.modality = "depth";
    ds.h = dg.h;
    ds.w = dg.w;
    ds.seq_len = dg.steps;
    ds.seed = dg.seed;
    ds.scene_spec_digest = scene_spec_digest(spec);
    for (const auto& seq : seqs) {
        std::vector<float> item;
        item.reserve(seq.size() * static_cast<std::size_t>(dg.h) * dg.w);
        for (const auto& d : seq) item.insert(item.end(), d.values.begin(), d.values.end());
        ds.items.push_back(std::move(item));
    }
    return ds;
}

Dataset dataset_from_labeled(const std::vector<LabeledSample>& samples, const DatagenConfig& dg,
                             const SceneSpec& spec, Modality modality) {
    Dataset ds;
    ds.kind = Dataset::Kind::labeled;
    ds.modality = modality_name(modality);
    ds.h = dg.h;
    ds.w = dg.w;
    ds.seed = dg.seed;
    ds.scene_spec_digest = scene_spec_digest(spec);
    for (const auto& s : samples) {
        std::vector<float> item;
        item.reserve(2 * s.input.size());
        item.insert(item.end(), s.input.v.begin(), s.input.v.end());
        item.insert(item.end(), s.target.v.begin(), s.target.v.end());
        ds.items.push_back(std::move(item));
    }
    return ds;
}

std::vector<std::vector<DepthMap>> sequences_from_dataset(const Dataset& ds) {
    if (ds.kind != Dataset::Kind::sequences)
        throw ArgumentError("dataset is not a sequence dataset");
    std::vector<std::vector<DepthMap>> out;
    const std::size_t plane = static_cast<std::size_t>(ds.h) * ds.w;
    for (const auto& item : ds.items) {
        std::vector<DepthMap> seq;
        for (int t = 0; t < ds.seq_len; ++t) {
            DepthMap d;
            d.h = ds.h;
            d.w = ds.w;
            d.cell_x_m = SceneSpec{}.floor_x_m / ds.w;
            d.cell_y_m = SceneSpec{}.floor_y_m / ds.h;
            d.ceiling_m = SceneSpec{}.ceiling_m;
            d.values.assign(item.begin() + static_cast<std::ptrdiff_t>(t * plane),
                            item.begin() + static_cast<std::ptrdiff_t>((t + 1) * plane));
            seq.push_back(std::move(d));
        }
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<LabeledSample> labeled_from_dataset(const Dataset& ds) {
    if (ds.kind != Dataset::Kind::labeled) throw ArgumentError("dataset is not a labeled dataset");
    std::vector<LabeledSample> out;
    const std::size_t plane = static_cast<std::size_t>(ds.h) * ds.w;
    for (const auto& item : ds.items) {
        LabeledSample s;
        s.modality = modality_from_name(ds.modality);
        s.input = Tensor<float>({1, ds.h, ds.w},
                                std::vector<float>(item.begin(),
                                                   item.begin() + static_cast<std::ptrdiff_t>(plane)));
        s.target = Tensor<float>({1, ds.h, ds.w},
                                 std::vector<float>(item.begin() + static_cast<std::ptrdiff_t>(plane),
                                                    item.end()));
        out.push_back(std::move(s));
    }
    return out;
}

json history_json(const std::vector<EpochLoss>& history) {
    json j = json::array();
    for (const auto& e : history) j.push_back({{"train", e.train}, {"test", e.test}});
    return j;
}

void save_history_csv(const std::vector<EpochLoss>& history, const fs::path& path) {
    std::vector<std::pair<double, double>> rows;
    for (const auto& e : history) rows.push_back({e.train, e.test});
    write_loss_csv(rows, path);
}

json region_row(const EvalRow& row) {
    return {{"model", row.model},
            {"global", row.psnr_db[0]},
            {"area1", row.psnr_db[1]},
            {"area2", row.psnr_db[2]},
            {"area3", row.psnr_db[3]},
            {"area4", row.psnr_db[4]},
            {"area5", row.psnr_db[5]}};
}

void print_report(const EvalReport& report) {
    std::printf("%-10s %8s %8s %8s %8s %8s %8s\n", "model", "global", "area1", "area2", "area3",
                "area4", "area5");
    for (const auto& row : report.rows) {
        std::printf("%-10s", row.model.c_str());
        for (double v : row.psnr_db) std::printf(" %8.2f", v);
        std::printf("\n");
    }
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"warehouse field-map prediction toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI/TOML file");

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data", "generate and store a dataset");
    std::string g_kind = "sequences", g_modality = "radio", g_antenna = "corner", g_out = "data";
    DatagenConfig g_dg;
    std::uint64_t g_scene_seed = 1;
    gen->add_option("--kind", g_kind, "sequences | labeled")
        ->check(CLI::IsMember({"sequences", "labeled"}));
    gen->add_option("--modality", g_modality, "radio | illumination | temperature")
        ->check(CLI::IsMember({"radio", "illumination", "temperature"}));
    gen->add_option("--sequences", g_dg.n_sequences, "number of depth sequences");
    gen->add_option("--steps", g_dg.steps, "time steps per sequence");
    gen->add_option("--labeled", g_dg.n_labeled, "number of labeled pairs");
    gen->add_option("--height", g_dg.h, "grid rows")->check(CLI::Range(8, 4096));
    gen->add_option("--width", g_dg.w, "grid columns")->check(CLI::Range(8, 4096));
    gen->add_option("--augment-fraction", g_dg.augment_fraction, "augmented share of labeled pairs")
        ->check(CLI::Range(0.0, 1.0));
    gen->add_option("--antenna", g_antenna, "corner | center")
        ->check(CLI::IsMember({"corner", "center"}));
    gen->add_option("--seed", g_dg.seed, "dataset seed");
    gen->add_option("--scene-seed", g_scene_seed, "base world seed");
    gen->add_option("--out", g_out, "output directory");

    // ---- train-stage1 / train-stage2 ----
    auto* t1 = app.add_subcommand("train-stage1", "self-supervised next-map pretraining");
    auto* t2 = app.add_subcommand("train-stage2", "supervised field fine-tuning");
    std::string t_data, t_backbone = "vit", t_out = "model.ckpt", t_csv, t_init;
    TrainConfig t_cfg;
    for (auto* t : {t1, t2}) {
        t->add_option("--data", t_data, "dataset manifest path")->required();
        t->add_option("--backbone", t_backbone, "vit | cnn | mlp")
            ->check(CLI::IsMember({"vit", "cnn", "mlp"}));
        t->add_option("--epochs", t_cfg.epochs, "training epochs");
        t->add_option("--lr", t_cfg.lr, "learning rate");
        t->add_option("--batch", t_cfg.batch_size, "mini-batch size");
        t->add_option("--split", t_cfg.split_ratio, "train fraction");
        t->add_option("--seed", t_cfg.seed, "training seed");
        t->add_option("--k", t_cfg.k, "window length");
        t->add_option("--out", t_out, "checkpoint output path");
        t->add_option("--csv", t_csv, "per-epoch loss CSV output path");
    }
    t2->add_option("--init", t_init, "pretrained checkpoint to transplant from");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "regional PSNR comparison of trained models");
    std::string e_data, e_out;
    std::vector<std::string> e_models;
    bool e_ood = false;
    std::vector<int> e_areas{1, 4};
    std::string e_modality = "radio", e_antenna = "corner";
    int e_count = 100;
    std::uint64_t e_seed = 1;
    ev->add_option("--model", e_models, "name=checkpoint (repeatable)")->required();
    ev->add_option("--data", e_data, "labeled dataset manifest (in-distribution mode)");
    ev->add_flag("--ood", e_ood, "evaluate on scenes with shelves removed from --areas");
    ev->add_option("--areas", e_areas, "areas emptied in OOD mode");
    ev->add_option("--modality", e_modality)->check(CLI::IsMember({"radio", "illumination", "temperature"}));
    ev->add_option("--antenna", e_antenna)->check(CLI::IsMember({"corner", "center"}));
    ev->add_option("--count", e_count, "OOD sample count");
    ev->add_option("--seed", e_seed, "OOD generation seed");
    ev->add_option("--out", e_out, "report JSON path");

    // ---- bench ----
    auto* be = app.add_subcommand("bench", "inference timing vs. the physics simulator");
    std::string b_model, b_backbone = "vit";
    int b_runs = 200, b_warmup = 20, b_sim_runs = 10;
    std::string b_out;
    be->add_option("--model", b_model, "checkpoint to time (otherwise a fresh backbone)");
    be->add_option("--backbone", b_backbone)->check(CLI::IsMember({"vit", "cnn", "mlp"}));
    be->add_option("--runs", b_runs)->check(CLI::Range(10, 100000));
    be->add_option("--warmup", b_warmup);
    be->add_option("--sim-runs", b_sim_runs)->check(CLI::Range(1, 1000));
    be->add_option("--out", b_out, "timing report JSON path");

    // ---- rollout ----
    auto* ro = app.add_subcommand("rollout", "autoregressive depth forecast as PGM images");
    std::string r_model, r_out = "rollout";
    std::uint64_t r_scene_seed = 1;
    int r_t0 = 0, r_steps = 4;
    ro->add_option("--model", r_model, "stage-1 checkpoint")->required();
    ro->add_option("--scene-seed", r_scene_seed, "world seed");
    ro->add_option("--t0", r_t0, "first window frame time");
    ro->add_option("--steps", r_steps, "forecast steps")->check(CLI::Range(1, 1000));
    ro->add_option("--out", r_out, "output directory");

    // ---- export-maps ----
    auto* ex = app.add_subcommand("export-maps", "depth and field maps of one scene as PGM");
    std::string x_out = "maps", x_antenna = "corner";
    std::uint64_t x_scene_seed = 1;
    int x_t = 0, x_h = 64, x_w = 64;
    ex->add_option("--scene-seed", x_scene_seed, "world seed");
    ex->add_option("--t", x_t, "time step");
    ex->add_option("--height", x_h)->check(CLI::Range(8, 4096));
    ex->add_option("--width", x_w)->check(CLI::Range(8, 4096));
    ex->add_option("--antenna", x_antenna)->check(CLI::IsMember({"corner", "center"}));
    ex->add_option("--out", x_out, "output directory");

    // ---- gradcheck ----
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient self-check");
    std::string c_backbone = "vit";
    int c_coords = 25;
    double c_eps = 1e-5, c_tol = 1e-4;
    std::uint64_t c_seed = 1;
    gc->add_option("--backbone", c_backbone)->check(CLI::IsMember({"vit", "cnn", "mlp"}));
    gc->add_option("--coords", c_coords, "sampled parameter coordinates")->check(CLI::Range(1, 10000));
    gc->add_option("--eps", c_eps, "finite-difference step");
    gc->add_option("--tol", c_tol, "max allowed relative error");
    gc->add_option("--seed", c_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (gen->parsed()) {
        SceneSpec spec;
        spec.rng_seed = g_scene_seed;
        g_dg.antenna = g_antenna == "corner" ? AntennaPlacement::corner : AntennaPlacement::center;
        const fs::path dir(g_out);
        fs::create_directories(dir);

        Dataset ds;
        if (g_kind == "sequences") {
            ds = dataset_from_sequences(make_stage1_sequences(spec, g_dg), g_dg, spec);
        } else {
            const Modality m = modality_from_name(g_modality);
            ds = dataset_from_labeled(make_stage2_labeled(spec, m, g_dg), g_dg, spec, m);
        }
        save_dataset(ds, dir / "dataset.json", dir / "dataset.bin");

        json summary{{"command", "gen-data"},
                     {"kind", g_kind},
                     {"modality", ds.modality},
                     {"items", ds.items.size()},
                     {"grid", {g_dg.h, g_dg.w}},
                     {"seed", g_dg.seed},
                     {"scene_seed", g_scene_seed},
                     {"scene_spec_digest", ds.scene_spec_digest},
                     {"blob_digest", digest_file(dir / "dataset.bin")}};
        summary["config_digest"] = digest_json(summary);
        write_summary(dir / "summary.json", summary);
        std::cout << "wrote " << ds.items.size() << " items to " << (dir / "dataset.json") << "\n";
        return 0;
    }

    if (t1->parsed() || t2->parsed()) {
        const Dataset ds = load_dataset(t_data);
        const bool stage1 = t1->parsed();

        Model<float> model = [&] {
            if (stage1 || t_init.empty())
                return build_backbone<float>(backbone_from_name(t_backbone), t_cfg.k, t_cfg.seed);
            // stage 2 with a pretrained start: same architecture as the checkpoint
            return build_from_arch(read_checkpoint_arch(t_init), t_cfg.seed);
        }();

        TrainResult res;
        if (stage1) {
            res = pretrain_stage1(sequences_from_dataset(ds), model, t_cfg);
        } else {
            std::optional<Model<float>> init;
            if (!t_init.empty()) init = load_checkpoint(t_init);
            res = finetune_stage2(labeled_from_dataset(ds), model,
                                  init ? &init.value() : nullptr, t_cfg);
        }

        save_model(model, t_out);
        if (!t_csv.empty()) save_history_csv(res.history, t_csv);

        json summary{{"command", stage1 ? "train-stage1" : "train-stage2"},
                     {"arch", model.arch},
                     {"params", model.param_count()},
                     {"data", t_data},
                     {"epochs", t_cfg.epochs},
                     {"lr", t_cfg.lr},
                     {"batch", t_cfg.batch_size},
                     {"seed", t_cfg.seed},
                     {"init", t_init},
                     {"train_items", res.train_ids.size()},
                     {"test_items", res.test_ids.size()},
                     {"skipped_sequences", res.skipped_sequences},
                     {"final_train_loss", res.history.empty() ? 0.0 : res.history.back().train},
                     {"final_test_loss", res.history.empty() ? 0.0 : res.history.back().test},
                     {"history", history_json(res.history)},
                     {"checkpoint", t_out},
                     {"checkpoint_digest", digest_file(t_out)}};
        summary["config_digest"] = digest_json(summary);
        write_summary(fs::path(t_out).replace_extension(".summary.json"), summary);
        std::cout << "final train loss " << res.history.back().train << ", test loss "
                  << res.history.back().test << "; saved " << t_out << "\n";
        return 0;
    }

    if (ev->parsed()) {
        std::vector<Model<float>> storage;
        storage.reserve(e_models.size());
        std::map<std::string, Model<float>*> models;
        for (const auto& spec : e_models) {
            const auto pos = spec.find('=');
            if (pos == std::string::npos)
                throw ArgumentError("--model expects name=path, got '" + spec + "'");
            storage.push_back(load_checkpoint(spec.substr(pos + 1)));
            models[spec.substr(0, pos)] = &storage.back();
        }

        EvalReport report;
        if (e_ood) {
            SceneSpec spec;
            DatagenConfig dg;
            dg.n_labeled = e_count;
            dg.seed = e_seed;
            dg.antenna = e_antenna == "corner" ? AntennaPlacement::corner : AntennaPlacement::center;
            report = evaluate_ood(models, spec, modality_from_name(e_modality), dg,
                                  std::set<int>(e_areas.begin(), e_areas.end()));
        } else {
            if (e_data.empty()) throw ArgumentError("eval needs --data unless --ood is given");
            report = evaluate_models(models, labeled_from_dataset(load_dataset(e_data)),
                                     RegionMap::standard());
        }
        print_report(report);

        if (!e_out.empty()) {
            json rows = json::array();
            for (const auto& row : report.rows) rows.push_back(region_row(row));
            json summary{{"command", "eval"},
                         {"ood", e_ood},
                         {"areas", e_areas},
                         {"samples", report.sample_count},
                         {"rows", rows}};
            summary["config_digest"] = digest_json(summary);
            write_summary(e_out, summary);
        }
        return 0;
    }

    if (be->parsed()) {
        Model<float> model = b_model.empty()
                                 ? build_backbone<float>(backbone_from_name(b_backbone), 4, 1)
                                 : load_checkpoint(b_model);
        Tensor<float> x({model.in_channels, 64, 64});
        Rng rng(1);
        for (auto& v : x.v) v = static_cast<float>(rng.uniform());
        const auto stats = benchmark_inference(model, x, b_warmup, b_runs);

        // the simulator this replaces: the full set of ground-truth field maps
        // (radio + illumination + temperature) for the benchmark scene
        SceneSpec spec;
        const SceneState scene = scene_with_sources(spec, 0, AntennaPlacement::corner);
        double sim_ms = 0.0;
        for (int i = 0; i < b_sim_runs; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            (void)generate_labeled_sample(scene, Modality::radio, 64, 64);
            (void)generate_labeled_sample(scene, Modality::illumination, 64, 64);
            (void)generate_labeled_sample(scene, Modality::temperature, 64, 64);
            sim_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                          .count();
        }
        sim_ms /= b_sim_runs;

        std::printf("%s: mean %.3f ms, p50 %.3f ms, p95 %.3f ms over %d runs\n", model.arch.c_str(),
                    stats.mean_ms, stats.p50_ms, stats.p95_ms, stats.n_runs);
        std::printf("simulator: %.3f ms per scene (all field maps); speedup p50 %.1fx\n", sim_ms,
                    sim_ms / stats.p50_ms);

        if (!b_out.empty()) {
            json summary{{"command", "bench"},        {"arch", model.arch},
                         {"mean_ms", stats.mean_ms},  {"p50_ms", stats.p50_ms},
                         {"p95_ms", stats.p95_ms},    {"runs", stats.n_runs},
                         {"simulator_ms", sim_ms},    {"speedup_p50", sim_ms / stats.p50_ms}};
            summary["config_digest"] = digest_json(summary);
            write_summary(b_out, summary);
        }
        return 0;
    }

    if (ro->parsed()) {
        Model<float> model = load_checkpoint(r_model);
        const int k = model.in_channels;
        SceneSpec spec;
        spec.rng_seed = r_scene_seed;

        const auto states = evolve_sequence(spec, r_t0, k + r_steps);
        std::vector<DepthMap> maps;
        for (const auto& s : states) maps.push_back(project_depth(s, 64, 64));

        const std::vector<DepthMap> window(maps.begin(), maps.begin() + k);
        const auto preds = rollout(model, stack_window(window, k), r_steps);

        const fs::path dir(r_out);
        fs::create_directories(dir);
        json steps = json::array();
        for (int s = 0; s < r_steps; ++s) {
            const auto& truth = maps[static_cast<std::size_t>(k + s)];
            char name[64];
            std::snprintf(name, sizeof(name), "pred-%03d.pgm", s);
            write_pgm(preds[static_cast<std::size_t>(s)].v, 64, 64, dir / name);
            std::snprintf(name, sizeof(name), "truth-%03d.pgm", s);
            write_pgm(truth.values, 64, 64, dir / name);
            const double score = psnr(preds[static_cast<std::size_t>(s)].v, truth.values);
            steps.push_back({{"step", s}, {"psnr_db", score}});
            std::printf("step %d: psnr %.2f dB\n", s, score);
        }
        json summary{{"command", "rollout"},
                     {"model", r_model},
                     {"scene_seed", r_scene_seed},
                     {"t0", r_t0},
                     {"steps", steps}};
        summary["config_digest"] = digest_json(summary);
        write_summary(dir / "summary.json", summary);
        return 0;
    }

    if (ex->parsed()) {
        SceneSpec spec;
        spec.rng_seed = x_scene_seed;
        const SceneState scene = scene_with_sources(
            spec, x_t, x_antenna == "corner" ? AntennaPlacement::corner : AntennaPlacement::center);
        const fs::path dir(x_out);
        fs::create_directories(dir);

        const auto depth = project_depth(scene, x_h, x_w);
        write_pgm(depth.values, x_h, x_w, dir / "depth.pgm");
        json files{{"depth", "depth.pgm"}};
        for (auto m : {Modality::radio, Modality::illumination, Modality::temperature}) {
            const auto [d, field] = generate_labeled_sample(scene, m, x_h, x_w);
            const std::string name = std::string(modality_name(m)) + ".pgm";
            write_pgm(field.values, x_h, x_w, dir / name);
            files[modality_name(m)] = name;
        }
        json summary{{"command", "export-maps"},
                     {"scene_seed", x_scene_seed},
                     {"t", x_t},
                     {"grid", {x_h, x_w}},
                     {"files", files}};
        summary["config_digest"] = digest_json(summary);
        write_summary(dir / "summary.json", summary);
        std::cout << "wrote maps to " << dir << "\n";
        return 0;
    }

    if (gc->parsed()) {
        // double precision end to end so the comparison is meaningful
        auto model = [&] {
            switch (backbone_from_name(c_backbone)) {
                case Backbone::vit: return build_backbone<double>(Backbone::vit, 4, c_seed);
                case Backbone::cnn: return build_backbone<double>(Backbone::cnn, 4, c_seed);
                default: return build_backbone<double>(Backbone::mlp, 4, c_seed);
            }
        }();
        Rng rng(stream_seed(c_seed, "gradcheck-data"));
        Tensor<double> x({4, 64, 64}), target({1, 64, 64});
        for (auto& v : x.v) v = rng.uniform();
        for (auto& v : target.v) v = rng.uniform();
        const double err = grad_check(model, x, target, c_eps, c_coords, c_seed);
        std::printf("%s: max relative gradient error %.3g over %d coordinates (tol %.1g)\n",
                    model.arch.c_str(), err, c_coords, c_tol);
        if (!(err < c_tol)) {
            std::cerr << "gradient check FAILED\n";
            return 1;
        }
        return 0;
    }

    return 0;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
