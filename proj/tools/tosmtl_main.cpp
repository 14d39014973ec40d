#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

#include "tosmtl/checkpoint.hpp"
#include "tosmtl/dataset.hpp"
#include "tosmtl/gradcam.hpp"
#include "tosmtl/metrics.hpp"
#include "tosmtl/model.hpp"
#include "tosmtl/phantom.hpp"
#include "tosmtl/preprocess.hpp"
#include "tosmtl/snake.hpp"
#include "tosmtl/surface.hpp"
#include "tosmtl/svg_render.hpp"
#include "tosmtl/toml_lite.hpp"
#include "tosmtl/train.hpp"
#include "tosmtl/version.hpp"

namespace {

using namespace tosmtl;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitSchema = 5;

// Merged run configuration: TOML file values first, then flag overrides.
struct RunConfig {
    PhantomSpec phantom;
    PreprocessConfig preprocess;
    ModelConfig model;
    TrainConfig train;
    SnakeConfig snake;
    SurfaceGridConfig surface;

    void load(const std::string& path) {
        const TomlTable t = TomlTable::parse_file(path);
        auto geti = [&](const char* sec, const char* key, std::size_t cur) {
            return static_cast<std::size_t>(t.get_int(sec, key, static_cast<std::int64_t>(cur)));
        };
        phantom.n_sectors = geti("phantom", "n_sectors", phantom.n_sectors);
        phantom.n_frames_min = geti("phantom", "n_frames_min", phantom.n_frames_min);
        phantom.n_frames_max = geti("phantom", "n_frames_max", phantom.n_frames_max);
        phantom.frame_period_ms = t.get_double("phantom", "frame_period_ms", phantom.frame_period_ms);
        phantom.scar_probability =
            t.get_double("phantom", "scar_probability", phantom.scar_probability);
        phantom.noise_std = t.get_double("phantom", "noise_std", phantom.noise_std);
        phantom.rng_seed = static_cast<std::uint64_t>(
            t.get_int("phantom", "seed", static_cast<std::int64_t>(phantom.rng_seed)));

        preprocess.trim_last_frames = geti("preprocess", "trim_last_frames", preprocess.trim_last_frames);
        preprocess.target_frames = geti("preprocess", "target_frames", preprocess.target_frames);
        preprocess.target_sectors = geti("preprocess", "target_sectors", preprocess.target_sectors);
        preprocess.shift_copies = geti("preprocess", "shift_copies", preprocess.shift_copies);
        preprocess.mixup_copies = geti("preprocess", "mixup_copies", preprocess.mixup_copies);
        preprocess.mixup_alpha = t.get_double("preprocess", "mixup_alpha", preprocess.mixup_alpha);
        preprocess.lma_threshold_ms =
            t.get_double("preprocess", "lma_threshold_ms", preprocess.lma_threshold_ms);

        model.channels = geti("model", "channels", model.channels);
        model.kernel = geti("model", "kernel", model.kernel);
        model.leak_alpha = t.get_double("model", "leak_alpha", model.leak_alpha);
        model.tos_min_ms = t.get_double("model", "tos_min_ms", model.tos_min_ms);
        model.squared_regression =
            t.get_bool("model", "squared_regression", model.squared_regression);

        train.learning_rate = t.get_double("train", "learning_rate", train.learning_rate);
        train.batch_size = geti("train", "batch_size", train.batch_size);
        train.lambda_cls = t.get_double("train", "lambda_cls", train.lambda_cls);
        train.l1_weight = t.get_double("train", "l1_weight", train.l1_weight);
        train.max_epochs = geti("train", "max_epochs", train.max_epochs);
        train.patience = geti("train", "patience", train.patience);
        train.val_fraction = t.get_double("train", "val_fraction", train.val_fraction);

        snake.lambda = t.get_double("snake", "lambda", snake.lambda);
        snake.beta = t.get_double("snake", "beta", snake.beta);
        snake.gamma = t.get_double("snake", "gamma", snake.gamma);
        snake.max_iters = geti("snake", "max_iters", snake.max_iters);
        snake.onset_threshold = t.get_double("snake", "onset_threshold", snake.onset_threshold);

        surface.angular_resolution =
            geti("surface", "angular_resolution", surface.angular_resolution);
        surface.axial_resolution = geti("surface", "axial_resolution", surface.axial_resolution);
    }
};

ordered_json phantom_json(const PhantomSpec& s, std::size_t patients) {
    return ordered_json{{"n_sectors", s.n_sectors},
                        {"n_frames_min", s.n_frames_min},
                        {"n_frames_max", s.n_frames_max},
                        {"frame_period_ms", s.frame_period_ms},
                        {"scar_probability", s.scar_probability},
                        {"noise_std", s.noise_std},
                        {"seed", s.rng_seed},
                        {"patients", patients}};
}

ordered_json train_json(const TrainConfig& c) {
    return ordered_json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
                        {"lambda_cls", c.lambda_cls},       {"l1_weight", c.l1_weight},
                        {"max_epochs", c.max_epochs},       {"patience", c.patience},
                        {"val_fraction", c.val_fraction},   {"rng_seed", c.rng_seed}};
}

ordered_json preprocess_json(const PreprocessConfig& c) {
    return ordered_json{{"trim_last_frames", c.trim_last_frames},
                        {"target_frames", c.target_frames},
                        {"target_sectors", c.target_sectors},
                        {"shift_copies", c.shift_copies},
                        {"mixup_copies", c.mixup_copies},
                        {"mixup_alpha", c.mixup_alpha},
                        {"lma_threshold_ms", c.lma_threshold_ms}};
}

ordered_json meta_json(ordered_json config) {
    return ordered_json{{"version", kVersion}, {"config", std::move(config)}};
}

StrainMatrix prepare_input(const PhantomRecord& rec, const PreprocessConfig& pre,
                           const ModelConfig& model_cfg) {
    return pad_to(trim_frames(rec.strain, pre.trim_last_frames), model_cfg.n_sectors,
                  model_cfg.n_frames);
}

int cmd_gen(const RunConfig& cfg, std::size_t patients, const std::string& out_path) {
    if (patients == 0) throw UsageError("--patients must be >= 1");
    auto records = generate_phantom(cfg.phantom, patients);
    auto meta = meta_json(phantom_json(cfg.phantom, patients));
    save_dataset(records, out_path, &meta);

    std::size_t lma = 0, scar = 0, sectors = 0;
    for (const auto& rec : records) {
        for (std::size_t s = 0; s < rec.labels.n_sectors(); ++s) {
            ++sectors;
            lma += rec.labels.is_lma(s) ? 1 : 0;
            scar += rec.scar_mask[s] ? 1 : 0;
        }
    }
    std::printf("wrote %zu records to %s\n", records.size(), out_path.c_str());
    std::printf("sectors: %zu total, %zu LMA (%.1f%%), %zu scar (%.1f%%)\n", sectors, lma,
                100.0 * static_cast<double>(lma) / static_cast<double>(sectors), scar,
                100.0 * static_cast<double>(scar) / static_cast<double>(sectors));
    return kExitOk;
}

int cmd_train(RunConfig cfg, const std::string& data_path, const std::string& task,
              const std::string& out_path, std::size_t test_count,
              const std::string& dump_augmented) {
    auto records = load_dataset(data_path);
    if (records.empty()) throw SchemaError("dataset is empty: " + data_path);

    auto split = split_patients(patient_ids(records), test_count, cfg.train.val_fraction,
                                cfg.train.rng_seed);
    Rng aug_rng(derive_seed(cfg.train.rng_seed, 0xA06));
    auto train_set = build_training_set(filter_by_patients(records, split.train_patients),
                                        cfg.preprocess, aug_rng);
    auto val_set = build_training_set(filter_by_patients(records, split.val_patients),
                                      cfg.preprocess, aug_rng);

    if (!dump_augmented.empty()) {
        auto meta = meta_json(preprocess_json(cfg.preprocess));
        save_training_set(train_set, dump_augmented, &meta);
    }

    cfg.model.n_sectors = cfg.preprocess.target_sectors;
    cfg.model.n_frames = cfg.preprocess.target_frames;
    MtlModel model(cfg.model);

    std::printf("task %s: %zu train / %zu val samples, %zu test patients held out\n", task.c_str(),
                train_set.size(), val_set.size(), split.test_patients.size());
    TrainHistory history = train(model, train_set, val_set, cfg.train);
    save_checkpoint(model, cfg.train, out_path);
    history.save_csv(out_path + ".history.csv", std::string(kVersion) + " task=" + task);

    ordered_json effective;
    effective["version"] = kVersion;
    effective["task"] = task;
    effective["train"] = train_json(cfg.train);
    effective["preprocess"] = preprocess_json(cfg.preprocess);
    effective["split"] = ordered_json{{"train_patients", split.train_patients},
                                      {"val_patients", split.val_patients},
                                      {"test_patients", split.test_patients}};
    effective["epochs_run"] = history.epochs.size();
    effective["best_epoch"] = history.best_epoch + 1;
    effective["best_val_total"] = history.epochs[history.best_epoch].val_total;
    std::ofstream cfg_out(out_path + ".config.json", std::ios::binary);
    if (!cfg_out) throw IoError("cannot write " + out_path + ".config.json");
    cfg_out << effective.dump(2) << "\n";

    std::printf("trained %zu epochs (best %zu, val %.3f); checkpoint %s\n", history.epochs.size(),
                history.best_epoch + 1, history.epochs[history.best_epoch].val_total,
                out_path.c_str());
    return kExitOk;
}

int cmd_predict(const RunConfig& cfg, const std::string& data_path, const std::string& ckpt_path,
                const std::string& out_path, const std::string& method_override) {
    auto records = load_dataset(data_path);
    auto [model, ckpt] = load_checkpoint(ckpt_path);
    const std::string method =
        !method_override.empty() ? method_override
                                 : (ckpt.train_config.lambda_cls > 0.0 ? "mtl" : "regression");

    std::vector<PredictionRecord> preds;
    preds.reserve(records.size());
    for (const auto& rec : records) {
        auto [tos, labels] = model->predict(prepare_input(rec, cfg.preprocess, ckpt.model_config));
        PredictionRecord p;
        p.id = rec.id;
        p.method = method;
        p.tos = tos;
        p.labels = labels;
        preds.push_back(std::move(p));
    }
    auto meta = meta_json(ordered_json{{"checkpoint", ckpt_path},
                                       {"method", method},
                                       {"train", train_json(ckpt.train_config)}});
    save_predictions(preds, out_path, &meta);
    std::printf("wrote %zu predictions (%s) to %s\n", preds.size(), method.c_str(),
                out_path.c_str());
    return kExitOk;
}

int cmd_snake(const RunConfig& cfg, const std::string& data_path, const std::string& out_path) {
    auto records = load_dataset(data_path);
    std::vector<PredictionRecord> preds(records.size());
    std::size_t warnings = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto result = snake_tos(records[i].strain, cfg.snake);
        if (!result.converged) ++warnings;
        preds[i] = {records[i].id, "snake", result.tos, std::nullopt};
    }
    auto meta = meta_json(ordered_json{{"lambda", cfg.snake.lambda},
                                       {"beta", cfg.snake.beta},
                                       {"gamma", cfg.snake.gamma},
                                       {"max_iters", cfg.snake.max_iters},
                                       {"onset_threshold", cfg.snake.onset_threshold}});
    save_predictions(preds, out_path, &meta);
    std::printf("wrote %zu snake fits to %s", preds.size(), out_path.c_str());
    if (warnings) std::printf(" (%zu did not converge within max_iters)", warnings);
    std::printf("\n");
    return kExitOk;
}

int cmd_gradcam(const RunConfig& cfg, const std::string& data_path, const std::string& ckpt_path,
                const std::string& record_id, const std::string& sector_arg,
                const std::string& layer, bool use_gt_center, const std::string& out_path,
                const std::string& svg_path) {
    auto records = load_dataset(data_path);
    const PhantomRecord* rec = nullptr;
    for (const auto& r : records) {
        if (r.id == record_id) {
            rec = &r;
            break;
        }
    }
    if (!rec) throw UsageError("record id not found in dataset: " + record_id);

    auto [model, ckpt] = load_checkpoint(ckpt_path);
    auto prepared = prepare_input(*rec, cfg.preprocess, ckpt.model_config);

    std::size_t sector;
    if (sector_arg == "auto") {
        if (use_gt_center) {
            sector = central_sector(rec->labels);
        } else {
            auto [tos, labels] = model->predict(prepared);
            sector = central_sector(labels);
        }
    } else {
        sector = static_cast<std::size_t>(std::stoul(sector_arg));
        if (sector >= ckpt.model_config.n_sectors) throw UsageError("--sector out of range");
    }

    auto map = gradcam(*model, prepared, sector, layer);

    ordered_json j;
    j["version"] = kVersion;
    j["record_id"] = rec->id;
    j["target_sector"] = map.target_sector;
    j["target_layer"] = map.target_layer;
    j["n_sectors"] = map.n_sectors;
    j["n_frames"] = map.n_frames;
    j["values"] = map.values;
    j["config"] = ordered_json{{"checkpoint", ckpt_path}, {"use_gt_center", use_gt_center}};
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path);
    out << j.dump() << "\n";

    if (!svg_path.empty()) {
        auto [tos, labels] = model->predict(prepared);
        std::vector<std::pair<TosCurve, CurveStyle>> curves = {{rec->tos, {"gt", "#000000"}},
                                                               {tos, {"pred", "#E69F00"}}};
        emit_svg_heatmap(prepared, curves, &map, svg_path,
                         rec->id + " sector " + std::to_string(sector));
    }
    std::printf("gradcam for %s sector %zu layer %s -> %s\n", rec->id.c_str(), sector,
                map.target_layer.c_str(), out_path.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& data_path, const std::vector<std::string>& pred_paths,
             const std::string& out_path, const std::string& csv_path,
             const std::string& svg_dir) {
    auto records = load_dataset(data_path);
    std::vector<PredictionRecord> all;
    for (const auto& p : pred_paths) {
        auto preds = load_predictions(p);
        all.insert(all.end(), preds.begin(), preds.end());
    }
    auto report = scar_stratified_report(all, records);

    ordered_json j = report_to_json(report);
    j["version"] = kVersion;
    j["dataset"] = data_path;
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path);
    out << j.dump(2) << "\n";
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path, std::ios::binary);
        if (!csv) throw IoError("cannot write " + csv_path);
        csv << report_to_csv(report, std::string(kVersion) + " dataset=" + data_path);
    }

    if (!svg_dir.empty()) {
        std::filesystem::create_directories(svg_dir);
        const char* palette[4] = {"#E69F00", "#009E73", "#CC3311", "#0077BB"};
        std::map<std::string, std::vector<const PredictionRecord*>> by_id;
        for (const auto& p : all) by_id[p.id].push_back(&p);
        for (const auto& rec : records) {
            auto it = by_id.find(rec.id);
            if (it == by_id.end()) continue;
            std::vector<std::pair<TosCurve, CurveStyle>> curves = {{rec.tos, {"gt", "#000000"}}};
            std::size_t color = 0;
            for (const auto* p : it->second) {
                if (curves.size() >= 4) break;
                curves.push_back({p->tos, {p->method, palette[color++ % 4]}});
            }
            emit_svg_heatmap(rec.strain, curves, nullptr, svg_dir + "/" + rec.id + ".svg", rec.id);
        }
    }

    for (const auto& m : report.methods) {
        std::printf("%-12s MAE %8.1f ms over %zu records", m.method.c_str(), m.all.mae_ms,
                    m.records);
        if (m.scar.present()) std::printf(" (scar stratum %.1f ms)", m.scar.mae_ms);
        if (!m.missing_record_ids.empty()) {
            std::printf(" [missing %zu records]", m.missing_record_ids.size());
        }
        std::printf("\n");
    }
    return kExitOk;
}

int cmd_surface(const RunConfig& cfg, const std::string& data_path, const std::string& pred_path,
                const std::string& patient, const std::string& method, const std::string& out_path,
                const std::string& svg_path) {
    auto records = load_dataset(data_path);
    auto preds = load_predictions(pred_path);

    std::map<std::string, const PhantomRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;

    // ascending z: apical, mid2, mid1, basal
    const std::vector<std::string> slice_order = {"apical", "mid2", "mid1", "basal"};
    std::map<std::string, TosCurve> found;
    for (const auto& p : preds) {
        if (!method.empty() && p.method != method) continue;
        auto it = by_id.find(p.id);
        if (it == by_id.end()) continue;
        if (it->second->patient_id != patient) continue;
        found[it->second->slice_level] = p.tos;
    }
    if (found.size() != cfg.surface.slice_z.size()) {
        throw UsageError("patient " + patient + " has " + std::to_string(found.size()) +
                         " predicted slices, config declares " +
                         std::to_string(cfg.surface.slice_z.size()) + " slice positions");
    }
    std::vector<TosCurve> slices;
    for (const auto& level : slice_order) {
        if (!found.count(level)) throw UsageError("missing slice level: " + level);
        slices.push_back(found[level]);
    }

    auto grid = surface_map(slices, cfg.surface);
    ordered_json j = surface_to_json(grid);
    j["version"] = kVersion;
    j["patient"] = patient;
    j["config"] = ordered_json{{"angular_resolution", cfg.surface.angular_resolution},
                               {"axial_resolution", cfg.surface.axial_resolution},
                               {"slice_z", cfg.surface.slice_z}};
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path);
    out << j.dump() << "\n";
    if (!svg_path.empty()) emit_svg_surface(grid, svg_path, "TOS surface " + patient);
    std::printf("surface grid for %s -> %s\n", patient.c_str(), out_path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TOS estimation pipeline: phantom data, multi-task CNN, snake baseline"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "TOML run configuration (flags override)");

    RunConfig cfg;

    auto* gen = app.add_subcommand("gen", "generate a synthetic phantom dataset");
    std::size_t patients = 57;
    std::string gen_out = "data.jsonl";
    double scar_prob = -1.0;
    std::int64_t gen_seed = -1;
    gen->add_option("--patients", patients, "number of patients (4 slices each)");
    gen->add_option("--seed", gen_seed, "phantom RNG seed");
    gen->add_option("--scar-prob", scar_prob, "scar probability per patient");
    gen->add_option("--out", gen_out, "output JSONL path");

    auto* tr = app.add_subcommand("train", "train the MTL or regression-only model");
    std::string train_data, train_out = "model.ckpt", task = "mtl", dump_augmented;
    std::size_t test_count = 0;
    double lr = -1.0, lambda_cls = -1.0, reg_l1 = -1.0;
    std::int64_t batch = -1, epochs = -1, patience = -1, train_seed = -1;
    tr->add_option("--data", train_data, "dataset JSONL")->required();
    tr->add_option("--task", task, "mtl | reg")->check(CLI::IsMember({"mtl", "reg"}));
    tr->add_option("--out", train_out, "checkpoint output path");
    tr->add_option("--lr", lr, "learning rate");
    tr->add_option("--batch", batch, "batch size");
    tr->add_option("--lambda-cls", lambda_cls, "classification loss weight");
    tr->add_option("--reg-l1", reg_l1, "L1 regularizer weight");
    tr->add_option("--epochs", epochs, "max epochs");
    tr->add_option("--patience", patience, "early-stop patience");
    tr->add_option("--seed", train_seed, "training seed");
    tr->add_option("--test-count", test_count, "patients held out as test split");
    tr->add_option("--dump-augmented", dump_augmented, "write the augmented training set JSONL");

    auto* pr = app.add_subcommand("predict", "run a trained model over a dataset");
    std::string pred_data, pred_ckpt, pred_out = "predictions.jsonl", pred_method;
    pr->add_option("--data", pred_data, "dataset JSONL")->required();
    pr->add_option("--ckpt", pred_ckpt, "checkpoint path")->required();
    pr->add_option("--out", pred_out, "prediction JSONL output");
    pr->add_option("--method", pred_method, "method tag override (default from checkpoint)");

    auto* sn = app.add_subcommand("snake", "active-contour baseline TOS estimation");
    std::string snake_data, snake_out = "snake.jsonl";
    double s_lambda = -1.0, s_beta = -1.0, s_gamma = -1.0;
    sn->add_option("--data", snake_data, "dataset JSONL")->required();
    sn->add_option("--out", snake_out, "prediction JSONL output");
    sn->add_option("--lambda", s_lambda, "tension weight");
    sn->add_option("--beta", s_beta, "rigidity weight");
    sn->add_option("--gamma", s_gamma, "descent step");

    auto* gc = app.add_subcommand("gradcam", "regression Grad-CAM for one record");
    std::string gc_data, gc_ckpt, gc_record, gc_sector = "auto", gc_layer, gc_out = "gradcam.json",
                               gc_svg;
    bool gc_gt_center = false;
    gc->add_option("--data", gc_data, "dataset JSONL")->required();
    gc->add_option("--ckpt", gc_ckpt, "checkpoint path")->required();
    gc->add_option("--record", gc_record, "record id")->required();
    gc->add_option("--sector", gc_sector, "target sector index or 'auto'");
    gc->add_option("--layer", gc_layer, "target layer (default: last joint conv)");
    gc->add_flag("--use-gt-center", gc_gt_center, "with --sector auto, center on ground truth");
    gc->add_option("--out", gc_out, "map JSON output");
    gc->add_option("--svg", gc_svg, "optional SVG overlay output");

    auto* ev = app.add_subcommand("eval", "scar-stratified comparison report");
    std::string eval_data, eval_out = "report.json", eval_csv, eval_svg_dir;
    std::vector<std::string> eval_preds;
    ev->add_option("--data", eval_data, "dataset JSONL")->required();
    ev->add_option("--pred", eval_preds, "prediction JSONL (repeatable)")->required();
    ev->add_option("--out", eval_out, "report JSON output");
    ev->add_option("--csv", eval_csv, "report CSV output");
    ev->add_option("--svg-dir", eval_svg_dir, "per-record SVG directory");

    auto* su = app.add_subcommand("surface", "3-D activation surface for one patient");
    std::string su_data, su_pred, su_patient, su_method, su_out = "surface.json", su_svg;
    su->add_option("--data", su_data, "dataset JSONL")->required();
    su->add_option("--pred", su_pred, "prediction JSONL")->required();
    su->add_option("--patient", su_patient, "patient id")->required();
    su->add_option("--method", su_method, "restrict to one method tag");
    su->add_option("--out", su_out, "grid JSON output");
    su->add_option("--svg", su_svg, "optional SVG output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints --help / --version / the error
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*tr) {
            cfg.train =
                task == "reg" ? TrainConfig::regression_defaults() : TrainConfig::mtl_defaults();
        }
        if (!config_path.empty()) cfg.load(config_path);

        if (*gen) {
            if (gen_seed >= 0) cfg.phantom.rng_seed = static_cast<std::uint64_t>(gen_seed);
            if (scar_prob >= 0.0) cfg.phantom.scar_probability = scar_prob;
            return cmd_gen(cfg, patients, gen_out);
        }
        if (*tr) {
            if (lr >= 0.0) cfg.train.learning_rate = lr;
            if (batch > 0) cfg.train.batch_size = static_cast<std::size_t>(batch);
            if (lambda_cls >= 0.0) cfg.train.lambda_cls = lambda_cls;
            if (reg_l1 >= 0.0) cfg.train.l1_weight = reg_l1;
            if (epochs > 0) cfg.train.max_epochs = static_cast<std::size_t>(epochs);
            if (patience > 0) cfg.train.patience = static_cast<std::size_t>(patience);
            if (train_seed >= 0) cfg.train.rng_seed = static_cast<std::uint64_t>(train_seed);
            return cmd_train(cfg, train_data, task, train_out, test_count, dump_augmented);
        }
        if (*pr) return cmd_predict(cfg, pred_data, pred_ckpt, pred_out, pred_method);
        if (*sn) {
            if (s_lambda > 0.0) cfg.snake.lambda = s_lambda;
            if (s_beta > 0.0) cfg.snake.beta = s_beta;
            if (s_gamma >= 0.0) cfg.snake.gamma = s_gamma;
            return cmd_snake(cfg, snake_data, snake_out);
        }
        if (*gc) {
            return cmd_gradcam(cfg, gc_data, gc_ckpt, gc_record, gc_sector, gc_layer, gc_gt_center,
                               gc_out, gc_svg);
        }
        if (*ev) return cmd_eval(eval_data, eval_preds, eval_out, eval_csv, eval_svg_dir);
        if (*su) return cmd_surface(cfg, su_data, su_pred, su_patient, su_method, su_out, su_svg);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitSchema;
    }
    return kExitUsage;
}
