// bedrec: subglacial bed reconstruction pipeline driver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bedrec/baselines.hpp"
#include "bedrec/digest.hpp"
#include "bedrec/errors.hpp"
#include "bedrec/metrics.hpp"
#include "bedrec/raster.hpp"
#include "bedrec/synth.hpp"
#include "bedrec/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ManifestBuilder {
    json inputs = json::object();
    json outputs = json::array();
    json notes = json::object();

    void input(const std::string& path) { inputs[path] = bedrec::digest_hex(bedrec::fnv1a64_file(path)); }
    void output(const std::string& name) { outputs.push_back(name); }

    void write(const std::string& dir, const std::string& command, std::uint64_t seed,
               const json& config) const {
        json m = {{"tool", "bedrec"}, {"version", kVersion}, {"command", command},
                  {"seed", seed},     {"config", config},    {"inputs", inputs},
                  {"outputs", outputs}};
        if (!notes.empty()) m["notes"] = notes;
        std::ofstream out(fs::path(dir) / "run_manifest.json", std::ios::trunc);
        if (!out) throw bedrec::IoError("cannot write run manifest in " + dir);
        out << m.dump(2) << "\n";
    }
};

json train_config_json(const bedrec::TrainConfig& c) {
    return json{{"patch_size", c.patch_size},   {"stride", c.stride},
                {"batch_size", c.batch_size},   {"lr", c.lr},
                {"max_epochs", c.max_epochs},   {"patience", c.patience},
                {"mc_passes", c.mc_passes},     {"dropout_rate", c.dropout_rate},
                {"sigma_cells", c.sigma_cells}, {"split_fraction", c.split_fraction},
                {"seed", c.seed},               {"use_gradients", c.use_gradients},
                {"use_trend", c.use_trend},     {"use_ref_loss", c.use_ref_loss},
                {"band_mode", c.band_mode},     {"bands", c.bands},
                {"trend_degree", c.trend_degree}, {"hidden", c.hidden},
                {"dilate_radius", c.dilate_radius},
                {"normalize_targets", c.normalize_targets}, {"threads", c.threads}};
}

struct TrainCliOptions {
    bedrec::TrainConfig config;
    bool no_gradients = false;
    bool no_trend = false;
    bool no_ref_loss = false;
    bool raw_targets = false;
    bool paper_settings = false;
    CLI::Option* max_epochs_opt = nullptr;
    CLI::Option* patience_opt = nullptr;

    void resolve() {
        if (paper_settings) {
            if (max_epochs_opt->count() == 0) config.max_epochs = 20000;
            if (patience_opt->count() == 0) config.patience = 5000;
        }
        config.use_gradients = !no_gradients;
        config.use_trend = !no_trend;
        config.use_ref_loss = !no_ref_loss;
        config.normalize_targets = !raw_targets;
        if (config.patience > config.max_epochs) config.patience = config.max_epochs;
    }
};

void add_train_options(CLI::App* cmd, TrainCliOptions& o) {
    bedrec::TrainConfig& c = o.config;
    cmd->add_option("--patch-size", c.patch_size, "Patch side length");
    cmd->add_option("--stride", c.stride, "Patch stride");
    cmd->add_option("--batch-size", c.batch_size, "Patches per optimizer step");
    cmd->add_option("--lr", c.lr, "Adam learning rate");
    o.max_epochs_opt = cmd->add_option("--max-epochs", c.max_epochs, "Epoch cap");
    o.patience_opt = cmd->add_option("--patience", c.patience, "Early-stopping patience");
    cmd->add_option("--mc-passes", c.mc_passes, "Monte Carlo dropout passes");
    cmd->add_option("--dropout-rate", c.dropout_rate, "Dropout probability");
    cmd->add_option("--sigma-cells", c.sigma_cells, "Confidence decay scale (cells)");
    cmd->add_option("--split-fraction", c.split_fraction, "Train fraction of patches");
    cmd->add_option("--seed", c.seed, "RNG seed");
    cmd->add_option("--bands", c.bands, "Horizontal bands for partition mode");
    cmd->add_option("--trend-degree", c.trend_degree, "Trend surface degree");
    cmd->add_option("--hidden", c.hidden, "GCN hidden units");
    cmd->add_option("--dilate-radius", c.dilate_radius,
                    "Extend radar supervision within this distance (cells, 0 = off)");
    cmd->add_option("--threads", c.threads, "Worker threads (0 = auto)");
    cmd->add_flag("--no-gradients", o.no_gradients, "Drop gradient channels");
    cmd->add_flag("--no-trend", o.no_trend, "Drop trend-surface channels");
    cmd->add_flag("--no-ref-loss", o.no_ref_loss, "Drop the reference-bed loss term");
    cmd->add_flag("--band-mode", c.band_mode, "Restrict supervision to odd bands");
    cmd->add_flag("--raw-targets", o.raw_targets, "Train on raw elevations (no target scaling)");
    cmd->add_flag("--paper-settings", o.paper_settings,
                  "Published training budget (20000 epochs, patience 5000)");
}

// 8-bit PGM heatmap; returns (min, max) used for scaling.
std::pair<double, double> write_pgm(const bedrec::RasterGrid& grid, const std::string& path) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        if (!grid.valid_mask[i]) continue;
        lo = std::min(lo, grid.values[i]);
        hi = std::max(hi, grid.values[i]);
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw bedrec::IoError("cannot write heatmap: " + path);
    out << "P5\n" << grid.width << " " << grid.height << "\n255\n";
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        const double v = grid.valid_mask[i] ? (grid.values[i] - lo) / span : 0.0;
        out.put(static_cast<char>(std::clamp(static_cast<int>(v * 255.0 + 0.5), 0, 255)));
    }
    return {lo, hi};
}

struct EvalTarget {
    bedrec::RasterGrid reference;
    std::vector<std::uint8_t> mask;
    std::string name;
};

EvalTarget resolve_eval_target(const bedrec::RegionDataset& region,
                               const std::string& against, const std::string& truth_path) {
    EvalTarget t;
    if (!truth_path.empty()) {
        t.reference = bedrec::read_raster(truth_path);
        t.mask = t.reference.valid_mask;
        t.name = "truth:" + truth_path;
    } else if (against == "radar") {
        t.reference = region.radar_values;
        t.mask = region.radar_mask;
        t.name = "radar";
    } else if (against == "ref") {
        t.reference = region.ref_bed;
        t.mask = region.ref_bed.valid_mask;
        t.name = "ref_bed";
    } else {
        throw bedrec::ConfigError("--against must be 'ref' or 'radar'");
    }
    return t;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw bedrec::IoError("cannot write: " + path);
    out << text;
}

// ---------------------------------------------------------------------------
// Subcommand runners
// ---------------------------------------------------------------------------

int run_synth(const bedrec::SynthConfig& config, const std::string& out_dir) {
    bedrec::SynthRegion synth = bedrec::generate_region(config);
    const std::string manifest = bedrec::write_region_dir(out_dir, synth);
    ManifestBuilder mb;
    for (const char* name : bedrec::RegionDataset::kFeatureNames) {
        mb.output(std::string(name) + ".npy");
    }
    mb.output("ref_bed.npy");
    mb.output("true_bed.npy");
    mb.output("radar.csv");
    mb.output("manifest.json");
    mb.notes["pick_count"] = synth.region.picks.picks.size();
    json cfg = {{"height", config.height},       {"width", config.width},
                {"seed", config.seed},           {"n_bumps", config.n_bumps},
                {"bump_amp_min", config.bump_amp_min}, {"bump_amp_max", config.bump_amp_max},
                {"track_count", config.track_count},   {"track_spacing", config.track_spacing},
                {"noise_std", config.noise_std}, {"ref_bias_std", config.ref_bias_std},
                {"cell_size", config.cell_size}};
    mb.write(out_dir, "synth", config.seed, cfg);
    std::cout << "wrote region to " << manifest << " (" << synth.region.picks.picks.size()
              << " picks, " << synth.region.dropped_pick_count << " dropped)\n";
    return 0;
}

int run_train(const std::string& region_path, const std::string& out_dir,
              TrainCliOptions& opts) {
    opts.resolve();
    const bedrec::RegionDataset region = bedrec::load_region(region_path);
    fs::create_directories(out_dir);
    try {
        bedrec::TrainOutput output = bedrec::train_model(region, opts.config);
        bedrec::save_checkpoint(out_dir, output);
        ManifestBuilder mb;
        mb.input(region_path);
        mb.output("params.manifest.json");
        mb.output("report.json");
        mb.write(out_dir, "train", opts.config.seed, train_config_json(opts.config));
        std::cout << "best epoch " << output.report.best_epoch << " (val total "
                  << output.report.best_val_total << ", " << output.report.stop_reason
                  << ")\n";
        return 0;
    } catch (const bedrec::TrainingDivergence& err) {
        if (err.last_good) {
            bedrec::save_checkpoint(out_dir, *err.last_good);
            std::cerr << "error: " << err.what() << "; last good checkpoint saved to "
                      << out_dir << "\n";
        } else {
            std::cerr << "error: " << err.what() << " (no usable checkpoint)\n";
        }
        return 1;
    }
}

int run_predict(const std::string& region_path, const std::string& checkpoint_dir,
                const std::string& out_dir, bool deterministic, std::uint64_t seed,
                bool seed_given, const std::string& against, const std::string& truth_path,
                const std::string& heatmap) {
    const bedrec::RegionDataset region = bedrec::load_region(region_path);
    bedrec::Checkpoint ck = bedrec::load_checkpoint(checkpoint_dir);
    if (seed_given) ck.config.seed = seed;
    bedrec::PredictionResult result = bedrec::predict_full(
        ck.params, region, ck.config, deterministic, ck.target_mean, ck.target_std);

    fs::create_directories(out_dir);
    const fs::path base(out_dir);
    bedrec::write_raster(result.mean, (base / "mean.npy").string());
    bedrec::write_raster(result.std, (base / "std.npy").string());

    const EvalTarget target = resolve_eval_target(region, against, truth_path);
    const bedrec::MetricsReport report =
        bedrec::compute_report(result.mean, target.reference, target.mask);
    write_text((base / "metrics.json").string(), bedrec::metrics_to_json(report));

    ManifestBuilder mb;
    mb.input(region_path);
    mb.input((fs::path(checkpoint_dir) / "params.manifest.json").string());
    mb.output("mean.npy");
    mb.output("std.npy");
    mb.output("metrics.json");
    mb.notes["deterministic"] = deterministic;
    mb.notes["against"] = target.name;
    if (!heatmap.empty()) {
        const auto [lo, hi] = write_pgm(result.mean, heatmap);
        mb.notes["heatmap"] = {{"path", heatmap}, {"min", lo}, {"max", hi}};
    }
    mb.write(out_dir, "predict", ck.config.seed, train_config_json(ck.config));
    std::cout << bedrec::metrics_to_json(report);
    return 0;
}

int run_evaluate(const std::string& pred_path, const std::string& region_path,
                 const std::string& out_dir, const std::string& against,
                 const std::string& truth_path) {
    const bedrec::RegionDataset region = bedrec::load_region(region_path);
    const bedrec::RasterGrid pred = bedrec::read_raster(pred_path);
    const EvalTarget target = resolve_eval_target(region, against, truth_path);
    std::vector<std::uint8_t> mask = target.mask;
    if (pred.height != target.reference.height || pred.width != target.reference.width) {
        throw bedrec::ShapeError("prediction and reference shapes differ");
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = mask[i] && pred.valid_mask[i];
    }
    const bedrec::MetricsReport report = bedrec::compute_report(pred, target.reference, mask);

    fs::create_directories(out_dir);
    write_text((fs::path(out_dir) / "metrics.json").string(), bedrec::metrics_to_json(report));
    ManifestBuilder mb;
    mb.input(pred_path);
    mb.input(region_path);
    if (!truth_path.empty()) mb.input(truth_path);
    mb.output("metrics.json");
    mb.notes["against"] = target.name;
    mb.write(out_dir, "evaluate", 0, json::object());
    std::cout << bedrec::metrics_to_json(report);
    return 0;
}

int run_baseline(const std::string& method, const std::string& region_path,
                 const std::string& out_dir, double power, std::size_t k_idw,
                 std::size_t k_knn, double blur_sigma, const std::string& against,
                 const std::string& truth_path, const std::string& heatmap) {
    const bedrec::RegionDataset region = bedrec::load_region(region_path);
    bedrec::RasterGrid pred;
    if (method == "idw") {
        pred = bedrec::idw_predict(region.picks, region.geometry(), power, k_idw);
    } else if (method == "knn") {
        pred = bedrec::knn_weighted(region.picks, region.geometry(), k_knn);
    } else {
        pred = bedrec::gsgi(region.picks, region.geometry(), blur_sigma);
    }

    fs::create_directories(out_dir);
    const fs::path base(out_dir);
    bedrec::write_raster(pred, (base / "pred.npy").string());
    const EvalTarget target = resolve_eval_target(region, against, truth_path);
    const bedrec::MetricsReport report = bedrec::compute_report(pred, target.reference, target.mask);
    write_text((base / "metrics.json").string(), bedrec::metrics_to_json(report));

    ManifestBuilder mb;
    mb.input(region_path);
    mb.output("pred.npy");
    mb.output("metrics.json");
    mb.notes["method"] = method;
    mb.notes["against"] = target.name;
    if (!heatmap.empty()) {
        const auto [lo, hi] = write_pgm(pred, heatmap);
        mb.notes["heatmap"] = {{"path", heatmap}, {"min", lo}, {"max", hi}};
    }
    json cfg = {{"method", method}, {"power", power}, {"k_idw", k_idw},
                {"k_knn", k_knn},   {"blur_sigma", blur_sigma}};
    mb.write(out_dir, "baseline", 0, cfg);
    std::cout << bedrec::metrics_to_json(report);
    return 0;
}

int run_partition_eval(const std::string& region_path, const std::string& out_dir,
                       TrainCliOptions& opts, const std::string& truth_path) {
    opts.config.band_mode = true;
    opts.resolve();
    const bedrec::RegionDataset region = bedrec::load_region(region_path);
    bedrec::TrainOutput output = bedrec::train_model(region, opts.config);
    fs::create_directories(out_dir);
    const fs::path base(out_dir);
    bedrec::save_checkpoint((base / "checkpoint").string(), output);

    bedrec::PredictionResult result = bedrec::predict_full(
        output.params, region, output.config, false, output.target_mean, output.target_std);
    bedrec::write_raster(result.mean, (base / "mean.npy").string());
    bedrec::write_raster(result.std, (base / "std.npy").string());

    const bedrec::RasterGrid truth =
        truth_path.empty() ? region.ref_bed : bedrec::read_raster(truth_path);
    const bedrec::BandPartition bands =
        bedrec::band_partition(region.height(), opts.config.bands);
    auto band_mask = [&](const std::vector<std::uint8_t>& rows) {
        std::vector<std::uint8_t> mask(truth.cell_count(), 0);
        for (int r = 0; r < region.height(); ++r) {
            for (int c = 0; c < region.width(); ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * region.width() + c;
                mask[i] = rows[static_cast<std::size_t>(r)] && truth.valid_mask[i];
            }
        }
        return mask;
    };
    const bedrec::MetricsReport train_report =
        bedrec::compute_report(result.mean, truth, band_mask(bands.train_rows));
    const bedrec::MetricsReport test_report =
        bedrec::compute_report(result.mean, truth, band_mask(bands.test_rows));

    json both = {{"train_band", json::parse(bedrec::metrics_to_json(train_report))},
                 {"test_band", json::parse(bedrec::metrics_to_json(test_report))}};
    write_text((base / "band_metrics.json").string(), both.dump(2) + "\n");

    ManifestBuilder mb;
    mb.input(region_path);
    if (!truth_path.empty()) mb.input(truth_path);
    mb.output("checkpoint/params.manifest.json");
    mb.output("mean.npy");
    mb.output("std.npy");
    mb.output("band_metrics.json");
    mb.write(out_dir, "partition-eval", opts.config.seed, train_config_json(opts.config));
    std::cout << both.dump(2) << "\n";
    return 0;
}

int run_ablate(const std::string& variant, const std::string& region_path,
               const std::string& out_dir, TrainCliOptions& opts,
               const std::string& truth_path) {
    if (variant == "no-grad") {
        opts.no_gradients = true;
    } else if (variant == "no-trend") {
        opts.no_trend = true;
    } else if (variant == "no-both") {
        opts.no_gradients = true;
        opts.no_trend = true;
    } else if (variant == "no-ref") {
        opts.no_ref_loss = true;
    } else {
        throw bedrec::ConfigError("unknown ablation variant: " + variant);
    }
    opts.resolve();
    const bedrec::RegionDataset region = bedrec::load_region(region_path);
    bedrec::TrainOutput output = bedrec::train_model(region, opts.config);
    fs::create_directories(out_dir);
    const fs::path base(out_dir);
    bedrec::save_checkpoint((base / "checkpoint").string(), output);
    bedrec::PredictionResult result = bedrec::predict_full(
        output.params, region, output.config, false, output.target_mean, output.target_std);
    bedrec::write_raster(result.mean, (base / "mean.npy").string());

    const EvalTarget target = resolve_eval_target(region, "ref", truth_path);
    const bedrec::MetricsReport report =
        bedrec::compute_report(result.mean, target.reference, target.mask);
    write_text((base / "metrics.json").string(), bedrec::metrics_to_json(report));

    ManifestBuilder mb;
    mb.input(region_path);
    if (!truth_path.empty()) mb.input(truth_path);
    mb.output("checkpoint/params.manifest.json");
    mb.output("mean.npy");
    mb.output("metrics.json");
    mb.notes["variant"] = variant;
    mb.notes["against"] = target.name;
    mb.write(out_dir, "ablate", opts.config.seed, train_config_json(opts.config));
    std::cout << bedrec::metrics_to_json(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bedrec: graph-learned subglacial bed reconstruction"};
    app.set_version_flag("--version", std::string("bedrec ") + kVersion);
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic region");
    bedrec::SynthConfig synth_cfg;
    std::string synth_out;
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--height", synth_cfg.height, "Grid rows");
    synth_cmd->add_option("--width", synth_cfg.width, "Grid columns");
    synth_cmd->add_option("--seed", synth_cfg.seed, "RNG seed");
    synth_cmd->add_option("--n-bumps", synth_cfg.n_bumps, "Gaussian hills/troughs");
    synth_cmd->add_option("--amp-min", synth_cfg.bump_amp_min, "Min bump amplitude (m)");
    synth_cmd->add_option("--amp-max", synth_cfg.bump_amp_max, "Max bump amplitude (m)");
    synth_cmd->add_option("--track-count", synth_cfg.track_count, "Radar flight lines");
    synth_cmd->add_option("--track-spacing", synth_cfg.track_spacing, "Line spacing (cells)");
    synth_cmd->add_option("--noise-std", synth_cfg.noise_std, "Pick noise (m)");
    synth_cmd->add_option("--ref-bias-std", synth_cfg.ref_bias_std, "Reference bias (m)");
    synth_cmd->add_option("--cell-size", synth_cfg.cell_size, "Meters per cell");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the GCN regressor");
    std::string train_region, train_out;
    TrainCliOptions train_opts;
    train_cmd->add_option("--region", train_region, "Region manifest JSON")->required();
    train_cmd->add_option("--out", train_out, "Checkpoint directory")->required();
    add_train_options(train_cmd, train_opts);

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Full-grid inference from a checkpoint");
    std::string pr_region, pr_ckpt, pr_out, pr_against = "ref", pr_truth, pr_heatmap;
    bool pr_deterministic = false;
    std::uint64_t pr_seed = 0;
    predict_cmd->add_option("--region", pr_region, "Region manifest JSON")->required();
    predict_cmd->add_option("--checkpoint", pr_ckpt, "Checkpoint directory")->required();
    predict_cmd->add_option("--out", pr_out, "Output directory")->required();
    predict_cmd->add_flag("--deterministic", pr_deterministic, "Single dropout-free pass");
    auto* pr_seed_opt = predict_cmd->add_option("--seed", pr_seed, "Override inference seed");
    predict_cmd->add_option("--against", pr_against, "Metrics reference: ref|radar");
    predict_cmd->add_option("--truth", pr_truth, "Raster to score against instead");
    predict_cmd->add_option("--heatmap", pr_heatmap, "Write mean prediction as PGM");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a prediction raster");
    std::string ev_pred, ev_region, ev_out, ev_against = "ref", ev_truth;
    eval_cmd->add_option("--pred", ev_pred, "Prediction raster (.npy)")->required();
    eval_cmd->add_option("--region", ev_region, "Region manifest JSON")->required();
    eval_cmd->add_option("--out", ev_out, "Output directory")->required();
    eval_cmd->add_option("--against", ev_against, "Metrics reference: ref|radar");
    eval_cmd->add_option("--truth", ev_truth, "Raster to score against instead");

    // baseline
    auto* base_cmd = app.add_subcommand("baseline", "Classical interpolation baselines");
    std::string bl_method, bl_region, bl_out, bl_against = "ref", bl_truth, bl_heatmap;
    double bl_power = 2.0, bl_blur = 5.0;
    std::size_t bl_k_idw = 4000, bl_k_knn = 10000;
    base_cmd->add_option("method", bl_method, "idw|knn|gsgi")
        ->required()
        ->check(CLI::IsMember({"idw", "knn", "gsgi"}));
    base_cmd->add_option("--region", bl_region, "Region manifest JSON")->required();
    base_cmd->add_option("--out", bl_out, "Output directory")->required();
    base_cmd->add_option("--power", bl_power, "IDW power");
    base_cmd->add_option("--k-idw", bl_k_idw, "IDW neighbor count");
    base_cmd->add_option("--k-knn", bl_k_knn, "kNN neighbor count");
    base_cmd->add_option("--blur-sigma", bl_blur, "GSGI blur sigma (cells)");
    base_cmd->add_option("--against", bl_against, "Metrics reference: ref|radar");
    base_cmd->add_option("--truth", bl_truth, "Raster to score against instead");
    base_cmd->add_option("--heatmap", bl_heatmap, "Write prediction as PGM");

    // partition-eval
    auto* part_cmd = app.add_subcommand(
        "partition-eval", "Band-partition training with train/test band metrics");
    std::string pe_region, pe_out, pe_truth;
    TrainCliOptions part_opts;
    part_cmd->add_option("--region", pe_region, "Region manifest JSON")->required();
    part_cmd->add_option("--out", pe_out, "Output directory")->required();
    part_cmd->add_option("--truth", pe_truth, "Raster to score against instead of ref_bed");
    add_train_options(part_cmd, part_opts);

    // ablate
    auto* abl_cmd = app.add_subcommand("ablate", "Train and score one ablation variant");
    std::string ab_variant, ab_region, ab_out, ab_truth;
    TrainCliOptions abl_opts;
    abl_cmd->add_option("variant", ab_variant, "no-grad|no-trend|no-both|no-ref")
        ->required()
        ->check(CLI::IsMember({"no-grad", "no-trend", "no-both", "no-ref"}));
    abl_cmd->add_option("--region", ab_region, "Region manifest JSON")->required();
    abl_cmd->add_option("--out", ab_out, "Output directory")->required();
    abl_cmd->add_option("--truth", ab_truth, "Raster to score against instead of ref_bed");
    add_train_options(abl_cmd, abl_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*synth_cmd) return run_synth(synth_cfg, synth_out);
        if (*train_cmd) return run_train(train_region, train_out, train_opts);
        if (*predict_cmd) {
            return run_predict(pr_region, pr_ckpt, pr_out, pr_deterministic, pr_seed,
                               pr_seed_opt->count() > 0, pr_against, pr_truth, pr_heatmap);
        }
        if (*eval_cmd) return run_evaluate(ev_pred, ev_region, ev_out, ev_against, ev_truth);
        if (*base_cmd) {
            return run_baseline(bl_method, bl_region, bl_out, bl_power, bl_k_idw, bl_k_knn,
                                bl_blur, bl_against, bl_truth, bl_heatmap);
        }
        if (*part_cmd) return run_partition_eval(pe_region, pe_out, part_opts, pe_truth);
        if (*abl_cmd) return run_ablate(ab_variant, ab_region, ab_out, abl_opts, ab_truth);
    } catch (const bedrec::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 2;
}
