#include "bedrec/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "bedrec/errors.hpp"
#include "bedrec/features.hpp"
#include "bedrec/parallel.hpp"
#include "bedrec/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bedrec {

namespace {

constexpr std::uint64_t kSplitSalt = 0x53504C49;
constexpr std::uint64_t kInitSalt = 0x494E4954;
constexpr std::uint64_t kOrderSalt = 0x4F524452;
constexpr std::uint64_t kDropSalt = 0x44524F50;
constexpr std::uint64_t kValSalt = 0x56414C53;
constexpr std::uint64_t kPredictSalt = 0x50524544;

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::max(1u, std::min(hw, 8u)));
}

struct PatchData {
    Patch patch;
    std::size_t id = 0;
    Matrix features;
    PatchSupervision sup;
    bool trainable = false;  // has at least one supervised cell
};

struct Workspace {
    FeatureStack stack;
    GridGraph graph;
    std::vector<Patch> patches;
    std::vector<PatchData> data;  // indexed by patch id
    std::vector<std::uint8_t> eval_mask;
    double target_mean = 0.0;
    double target_std = 1.0;
};

Workspace assemble(const RegionDataset& region, const TrainConfig& config) {
    Workspace ws;
    ws.stack = build_feature_stack(region, config.use_gradients, config.use_trend,
                                   config.trend_degree);
    const int h = region.height();
    const int w = region.width();
    const std::size_t cells = static_cast<std::size_t>(h) * w;

    ws.eval_mask.assign(cells, 1);
    std::vector<std::uint8_t> radar_mask = region.radar_mask;
    if (config.band_mode) {
        const BandPartition bands = band_partition(h, config.bands);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * w + c;
                ws.eval_mask[i] = bands.train_rows[static_cast<std::size_t>(r)];
                // All supervision is band-restricted, picks included.
                if (!ws.eval_mask[i]) radar_mask[i] = 0;
            }
        }
    }

    // Target scaling from the reference bed over supervised-area cells.
    if (config.normalize_targets) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < cells; ++i) {
            if (region.ref_bed.valid_mask[i] && ws.eval_mask[i]) {
                sum += region.ref_bed.values[i];
                ++n;
            }
        }
        if (n > 0) {
            ws.target_mean = sum / static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < cells; ++i) {
                if (region.ref_bed.valid_mask[i] && ws.eval_mask[i]) {
                    const double d = region.ref_bed.values[i] - ws.target_mean;
                    var += d * d;
                }
            }
            ws.target_std = std::sqrt(var / static_cast<double>(n));
            if (ws.target_std < 1e-12) ws.target_std = 1.0;
        }
    }

    std::vector<double> radar_norm(cells, 0.0);
    std::vector<double> ref_norm(cells, 0.0);
    for (std::size_t i = 0; i < cells; ++i) {
        radar_norm[i] = (region.radar_values.values[i] - ws.target_mean) / ws.target_std;
        ref_norm[i] = (region.ref_bed.values[i] - ws.target_mean) / ws.target_std;
    }

    std::vector<double> confidences;
    if (config.dilate_radius > 0.0) {
        DilatedSupervision dil = dilate_radar(radar_norm, radar_mask, h, w,
                                              config.dilate_radius, config.sigma_cells);
        radar_norm = std::move(dil.values);
        radar_mask = std::move(dil.mask);
        confidences = std::move(dil.confidences);
    } else {
        const std::vector<double> dist = euclidean_distance_transform(radar_mask, h, w);
        confidences = confidence_from_distance(dist, config.sigma_cells).confidences;
    }

    // Joint validity of features and reference supervision.
    std::vector<std::uint8_t> valid(cells, 1);
    for (std::size_t i = 0; i < cells; ++i) {
        valid[i] = ws.stack.valid_mask[i] && region.ref_bed.valid_mask[i];
    }

    ws.graph = normalize_adjacency(build_grid_edges(config.patch_size, config.patch_size));
    ws.patches = extract_patches(h, w, config.patch_size, config.stride);

    const int f_count = ws.stack.channel_count();
    const int size = config.patch_size;
    ws.data.resize(ws.patches.size());
    for (std::size_t id = 0; id < ws.patches.size(); ++id) {
        const Patch patch = ws.patches[id];
        PatchData& pd = ws.data[id];
        pd.patch = patch;
        pd.id = id;
        pd.features = Matrix(size * size, f_count);
        pd.sup.use_ref_loss = config.use_ref_loss;
        const std::size_t nodes = static_cast<std::size_t>(size) * size;
        pd.sup.radar_values.resize(nodes);
        pd.sup.confidences.resize(nodes);
        pd.sup.ref_values.resize(nodes);
        pd.sup.radar_mask.resize(nodes);
        pd.sup.valid_mask.resize(nodes);
        pd.sup.eval_mask.resize(nodes);
        for (int r = 0; r < size; ++r) {
            const std::size_t src = static_cast<std::size_t>(patch.row0 + r) * w + patch.col0;
            const std::size_t dst = static_cast<std::size_t>(r) * size;
            for (int c = 0; c < size; ++c) {
                for (int ch = 0; ch < f_count; ++ch) {
                    pd.features(static_cast<int>(dst + c), ch) =
                        ws.stack.data[static_cast<std::size_t>(ch)][src + c];
                }
                pd.sup.radar_values[dst + c] = radar_norm[src + c];
                pd.sup.confidences[dst + c] = confidences[src + c];
                pd.sup.ref_values[dst + c] = ref_norm[src + c];
                pd.sup.radar_mask[dst + c] = radar_mask[src + c];
                pd.sup.valid_mask[dst + c] = valid[src + c];
                pd.sup.eval_mask[dst + c] = ws.eval_mask[src + c];
                if (ws.eval_mask[src + c] && valid[src + c]) pd.trainable = true;
            }
        }
    }
    return ws;
}

TrainOutput snapshot_output(const GcnParams& params, const BalancerState& balancer,
                            const TrainReport& report, const Workspace& ws,
                            const TrainConfig& config) {
    TrainOutput out;
    out.params = params;
    out.balancer = balancer;
    out.report = report;
    out.target_mean = ws.target_mean;
    out.target_std = ws.target_std;
    out.config = config;
    return out;
}

json config_to_json(const TrainConfig& c) {
    return json{{"patch_size", c.patch_size},
                {"stride", c.stride},
                {"batch_size", c.batch_size},
                {"lr", c.lr},
                {"max_epochs", c.max_epochs},
                {"patience", c.patience},
                {"mc_passes", c.mc_passes},
                {"dropout_rate", c.dropout_rate},
                {"sigma_cells", c.sigma_cells},
                {"split_fraction", c.split_fraction},
                {"seed", c.seed},
                {"use_gradients", c.use_gradients},
                {"use_trend", c.use_trend},
                {"use_ref_loss", c.use_ref_loss},
                {"band_mode", c.band_mode},
                {"bands", c.bands},
                {"trend_degree", c.trend_degree},
                {"hidden", c.hidden},
                {"dilate_radius", c.dilate_radius},
                {"normalize_targets", c.normalize_targets},
                {"threads", c.threads}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.patch_size = j.at("patch_size").get<int>();
    c.stride = j.at("stride").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.lr = j.at("lr").get<double>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.patience = j.at("patience").get<int>();
    c.mc_passes = j.at("mc_passes").get<int>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.sigma_cells = j.at("sigma_cells").get<double>();
    c.split_fraction = j.at("split_fraction").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.use_gradients = j.at("use_gradients").get<bool>();
    c.use_trend = j.at("use_trend").get<bool>();
    c.use_ref_loss = j.at("use_ref_loss").get<bool>();
    c.band_mode = j.at("band_mode").get<bool>();
    c.bands = j.at("bands").get<int>();
    c.trend_degree = j.at("trend_degree").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.dilate_radius = j.at("dilate_radius").get<double>();
    c.normalize_targets = j.at("normalize_targets").get<bool>();
    c.threads = j.at("threads").get<int>();
    return c;
}

}  // namespace

std::pair<std::vector<Patch>, std::vector<Patch>> split_patches(
    const std::vector<Patch>& patches, double fraction, std::uint64_t seed) {
    if (patches.size() < 2) throw ConfigError("split_patches: need at least 2 patches");
    if (fraction <= 0.0 || fraction >= 1.0) {
        throw ConfigError("split_patches: fraction must be in (0, 1)");
    }
    std::vector<Patch> shuffled = patches;
    Rng rng(mix_seed(seed, {kSplitSalt}));
    rng.shuffle(shuffled);
    const std::size_t train_count = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(patches.size())));
    std::vector<Patch> train(shuffled.begin(), shuffled.begin() + train_count);
    std::vector<Patch> val(shuffled.begin() + train_count, shuffled.end());
    return {std::move(train), std::move(val)};
}

BandPartition band_partition(int height, int bands) {
    if (bands < 1) throw ConfigError("band_partition: bands must be >= 1");
    if (bands > height) throw ConfigError("band_partition: more bands than rows");
    BandPartition out;
    out.train_rows.assign(static_cast<std::size_t>(height), 0);
    out.test_rows.assign(static_cast<std::size_t>(height), 0);
    const int band_height = height / bands;
    for (int r = 0; r < height; ++r) {
        int band = r / band_height + 1;      // 1-indexed
        if (band > bands) band = bands;      // remainder joins the last band
        if (band % 2 == 1) {
            out.train_rows[static_cast<std::size_t>(r)] = 1;
        } else {
            out.test_rows[static_cast<std::size_t>(r)] = 1;
        }
    }
    return out;
}

TrainOutput train_model(const RegionDataset& region, const TrainConfig& config) {
    if (config.split_fraction <= 0.0 || config.split_fraction >= 1.0) {
        throw ConfigError("train_model: split_fraction must be in (0, 1)");
    }
    if (config.patience > config.max_epochs) {
        throw ConfigError("train_model: patience must not exceed max_epochs");
    }
    Workspace ws = assemble(region, config);

    const auto [train_patches, val_patches] =
        split_patches(ws.patches, config.split_fraction, config.seed);
    std::unordered_map<std::int64_t, std::size_t> patch_index;
    for (std::size_t id = 0; id < ws.patches.size(); ++id) {
        patch_index[static_cast<std::int64_t>(ws.patches[id].row0) * region.width() +
                    ws.patches[id].col0] = id;
    }
    auto ids_of = [&](const std::vector<Patch>& list) {
        std::vector<std::size_t> ids;
        ids.reserve(list.size());
        for (const Patch& p : list) {
            const std::size_t id =
                patch_index.at(static_cast<std::int64_t>(p.row0) * region.width() + p.col0);
            if (ws.data[id].trainable) ids.push_back(id);
        }
        return ids;
    };
    std::vector<std::size_t> train_ids = ids_of(train_patches);
    std::vector<std::size_t> val_ids = ids_of(val_patches);
    if (train_ids.empty() || val_ids.empty()) {
        throw ConfigError("train_model: no supervised patches on one side of the split");
    }

    const int f_count = ws.stack.channel_count();
    GcnParams params = init_params(f_count, mix_seed(config.seed, {kInitSalt}), config.hidden);
    BalancerState balancer;
    AdamState adam = AdamState::init(params, config.lr);
    WorkerPool pool(resolve_threads(config.threads));

    TrainReport report;
    report.best_val_total = std::numeric_limits<double>::infinity();
    GcnParams best_params = params;
    BalancerState best_balancer = balancer;
    int bad_streak = 0;

    auto validation_pass = [&](EpochStats& stats) {
        std::vector<LossEvaluation> evals(val_ids.size());
        pool.run(val_ids.size(), [&](std::size_t i) {
            const PatchData& pd = ws.data[val_ids[i]];
            const DropoutConfig dropout{config.dropout_rate, config.mc_passes,
                                        mix_seed(config.seed, {kValSalt, pd.id})};
            evals[i] = evaluate_loss(params, ws.graph, pd.features, pd.sup, dropout, balancer);
        });
        double total = 0.0, radar = 0.0, ref = 0.0, unc = 0.0;
        for (const LossEvaluation& ev : evals) {
            total += ev.total;
            radar += ev.terms.radar;
            ref += ev.terms.ref;
            unc += ev.terms.unc;
        }
        const double inv = 1.0 / static_cast<double>(evals.size());
        stats.val_total = total * inv;
        stats.val_radar = radar * inv;
        stats.val_ref = ref * inv;
        stats.val_unc = unc * inv;
    };

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::vector<std::size_t> order = train_ids;
        Rng order_rng(mix_seed(config.seed, {kOrderSalt, static_cast<std::uint64_t>(epoch)}));
        order_rng.shuffle(order);

        double epoch_train_total = 0.0;
        EpochStats stats;
        try {
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t count =
                    std::min<std::size_t>(config.batch_size, order.size() - start);
                std::vector<LossGradients> slots(count);
                pool.run(count, [&](std::size_t i) {
                    const PatchData& pd = ws.data[order[start + i]];
                    const DropoutConfig dropout{
                        config.dropout_rate, config.mc_passes,
                        mix_seed(config.seed,
                                 {kDropSalt, static_cast<std::uint64_t>(epoch), pd.id})};
                    slots[i] = loss_and_gradients(params, ws.graph, pd.features, pd.sup,
                                                  dropout, balancer);
                });
                ParamTensors batch_grads = std::move(slots[0].grads);
                double batch_total = slots[0].total;
                for (std::size_t i = 1; i < count; ++i) {
                    batch_grads.accumulate(slots[i].grads);
                    batch_total += slots[i].total;
                }
                batch_grads.scale(1.0 / static_cast<double>(count));
                epoch_train_total += batch_total;
                if (!std::isfinite(batch_total)) {
                    throw NumericalError("non-finite batch total");
                }
                adam_step(params, balancer, batch_grads, adam);
            }
            stats.train_total = epoch_train_total / static_cast<double>(order.size());
            validation_pass(stats);
        } catch (const NumericalError& err) {
            std::shared_ptr<TrainOutput> last;
            if (report.best_epoch > 0) {
                TrainReport partial = report;
                partial.stop_reason = "numerical_divergence";
                last = std::make_shared<TrainOutput>(
                    snapshot_output(best_params, best_balancer, partial, ws, config));
            }
            throw TrainingDivergence(std::string("training diverged at epoch ") +
                                         std::to_string(epoch) + ": " + err.what(),
                                     std::move(last));
        }
        for (std::size_t k = 0; k < 3; ++k) stats.sigma[k] = std::exp(balancer.log_sigma[k]);
        report.epochs.push_back(stats);

        if (stats.val_total < report.best_val_total) {
            report.best_val_total = stats.val_total;
            report.best_epoch = epoch;
            best_params = params;
            best_balancer = balancer;
            bad_streak = 0;
        } else {
            ++bad_streak;
        }
        if (bad_streak >= config.patience) {
            report.stop_reason = "patience";
            break;
        }
        if (epoch == config.max_epochs) {
            report.stop_reason = "max_epochs";
        }
    }
    return snapshot_output(best_params, best_balancer, report, ws, config);
}

double revalidate(const RegionDataset& region, const TrainOutput& output) {
    const TrainConfig& config = output.config;
    Workspace ws = assemble(region, config);
    const auto [train_patches, val_patches] =
        split_patches(ws.patches, config.split_fraction, config.seed);
    (void)train_patches;
    std::unordered_map<std::int64_t, std::size_t> patch_index;
    for (std::size_t id = 0; id < ws.patches.size(); ++id) {
        patch_index[static_cast<std::int64_t>(ws.patches[id].row0) * region.width() +
                    ws.patches[id].col0] = id;
    }
    double total = 0.0;
    std::size_t count = 0;
    for (const Patch& p : val_patches) {
        const std::size_t id =
            patch_index.at(static_cast<std::int64_t>(p.row0) * region.width() + p.col0);
        const PatchData& pd = ws.data[id];
        if (!pd.trainable) continue;
        const DropoutConfig dropout{config.dropout_rate, config.mc_passes,
                                    mix_seed(config.seed, {kValSalt, pd.id})};
        total += evaluate_loss(output.params, ws.graph, pd.features, pd.sup, dropout,
                               output.balancer)
                     .total;
        ++count;
    }
    // Same reduction form as the trainer's validation pass so the result
    // is bit-identical.
    return total * (1.0 / static_cast<double>(count));
}

PredictionResult predict_full(const GcnParams& params, const RegionDataset& region,
                              const TrainConfig& config, bool deterministic,
                              double target_mean, double target_std) {
    FeatureStack stack = build_feature_stack(region, config.use_gradients, config.use_trend,
                                             config.trend_degree);
    if (stack.channel_count() != params.feature_count) {
        throw ShapeError("predict_full: model expects " +
                         std::to_string(params.feature_count) + " channels, stack has " +
                         std::to_string(stack.channel_count()));
    }
    const int h = region.height();
    const int w = region.width();
    const GridGraph graph =
        normalize_adjacency(build_grid_edges(config.patch_size, config.patch_size));
    const std::vector<Patch> patches = extract_patches(h, w, config.patch_size, config.stride);
    const int f_count = stack.channel_count();
    const int size = config.patch_size;
    const int n_passes = deterministic ? 1 : config.mc_passes;
    WorkerPool pool(resolve_threads(config.threads));

    std::vector<std::vector<std::vector<double>>> outputs(patches.size());
    pool.run(patches.size(), [&](std::size_t id) {
        const Patch patch = patches[id];
        Matrix X(size * size, f_count);
        for (int r = 0; r < size; ++r) {
            const std::size_t src = static_cast<std::size_t>(patch.row0 + r) * w + patch.col0;
            for (int c = 0; c < size; ++c) {
                for (int ch = 0; ch < f_count; ++ch) {
                    X(r * size + c, ch) = stack.data[static_cast<std::size_t>(ch)][src + c];
                }
            }
        }
        const DropoutConfig dropout{config.dropout_rate, config.mc_passes,
                                    mix_seed(config.seed, {kPredictSalt, id})};
        outputs[id] = forward(params, graph, X, dropout, !deterministic);
    });

    std::vector<RasterGrid> stitched;
    stitched.reserve(static_cast<std::size_t>(n_passes));
    for (int p = 0; p < n_passes; ++p) {
        std::vector<std::pair<Patch, std::vector<double>>> pairs;
        pairs.reserve(patches.size());
        for (std::size_t id = 0; id < patches.size(); ++id) {
            pairs.emplace_back(patches[id], outputs[id][static_cast<std::size_t>(p)]);
        }
        stitched.push_back(stitch_predictions(pairs, h, w));
    }

    PredictionResult result;
    result.mean = RasterGrid(h, w, 0.0);
    result.mean.set_geometry(region.geometry());
    result.std = result.mean;
    const std::size_t cells = result.mean.cell_count();
    const double inv = 1.0 / static_cast<double>(n_passes);
    for (std::size_t i = 0; i < cells; ++i) {
        // Statistics around the first pass: exact when dropout is disabled
        // and the stitched maps coincide bitwise.
        const double base = stitched[0].values[i];
        double dev_mean = 0.0;
        for (const RasterGrid& g : stitched) dev_mean += g.values[i] - base;
        dev_mean *= inv;
        double var = 0.0;
        for (const RasterGrid& g : stitched) {
            const double d = (g.values[i] - base) - dev_mean;
            var += d * d;
        }
        var *= inv;
        result.mean.values[i] = target_mean + target_std * (base + dev_mean);
        result.std.values[i] = target_std * std::sqrt(var);
    }
    result.metrics = compute_report(result.mean, region.ref_bed, region.ref_bed.valid_mask);
    return result;
}

void save_checkpoint(const std::string& dir, const TrainOutput& output) {
    fs::create_directories(dir);
    const fs::path base(dir);
    const GcnParams& p = output.params;
    auto shape2 = [](const Matrix& m) {
        return std::vector<std::size_t>{static_cast<std::size_t>(m.rows),
                                        static_cast<std::size_t>(m.cols)};
    };
    write_npy((base / "w1.npy").string(), shape2(p.w1), p.w1.a);
    write_npy((base / "w2.npy").string(), shape2(p.w2), p.w2.a);
    write_npy((base / "w3.npy").string(), shape2(p.w3), p.w3.a);
    write_npy((base / "b1.npy").string(), {p.b1.size()}, p.b1);
    write_npy((base / "b2.npy").string(), {p.b2.size()}, p.b2);
    write_npy((base / "b3.npy").string(), {p.b3.size()}, p.b3);

    json manifest = {
        {"format_version", 1},
        {"feature_count", p.feature_count},
        {"hidden", p.hidden},
        {"target_mean", output.target_mean},
        {"target_std", output.target_std},
        {"balancer_log_sigma", output.balancer.log_sigma},
        {"best_epoch", output.report.best_epoch},
        {"stop_reason", output.report.stop_reason},
        {"config", config_to_json(output.config)},
        {"tensors",
         {{"w1", "w1.npy"},
          {"w2", "w2.npy"},
          {"w3", "w3.npy"},
          {"b1", "b1.npy"},
          {"b2", "b2.npy"},
          {"b3", "b3.npy"}}}};
    std::ofstream out(base / "params.manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint manifest in " + dir);
    out << manifest.dump(2) << "\n";

    std::ofstream rep(base / "report.json", std::ios::trunc);
    if (!rep) throw IoError("cannot write report.json in " + dir);
    rep << train_report_to_json(output.report);
}

Checkpoint load_checkpoint(const std::string& dir) {
    const fs::path base(dir);
    std::ifstream in(base / "params.manifest.json");
    if (!in) throw IoError("cannot open checkpoint manifest in " + dir);
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded()) throw FormatError("invalid checkpoint manifest in " + dir);

    Checkpoint ck;
    ck.config = config_from_json(manifest.at("config"));
    ck.target_mean = manifest.at("target_mean").get<double>();
    ck.target_std = manifest.at("target_std").get<double>();
    const auto ls = manifest.at("balancer_log_sigma");
    for (std::size_t k = 0; k < 3; ++k) ck.balancer.log_sigma[k] = ls.at(k).get<double>();

    GcnParams& p = ck.params;
    p.feature_count = manifest.at("feature_count").get<int>();
    p.hidden = manifest.at("hidden").get<int>();
    auto load_matrix = [&](const char* key, int rows, int cols) {
        const std::string file = manifest.at("tensors").at(key).get<std::string>();
        NpyArray arr = read_npy((base / file).string());
        if (arr.shape.size() != 2 || arr.shape[0] != static_cast<std::size_t>(rows) ||
            arr.shape[1] != static_cast<std::size_t>(cols)) {
            throw CorruptError(std::string("checkpoint tensor '") + key + "' has wrong shape");
        }
        Matrix m(rows, cols);
        m.a = std::move(arr.data);
        return m;
    };
    auto load_vector = [&](const char* key, std::size_t n) {
        const std::string file = manifest.at("tensors").at(key).get<std::string>();
        NpyArray arr = read_npy((base / file).string());
        if (arr.data.size() != n) {
            throw CorruptError(std::string("checkpoint tensor '") + key + "' has wrong size");
        }
        return arr.data;
    };
    p.w1 = load_matrix("w1", p.feature_count, p.hidden);
    p.w2 = load_matrix("w2", p.hidden, p.hidden);
    p.w3 = load_matrix("w3", p.hidden, 1);
    p.b1 = load_vector("b1", static_cast<std::size_t>(p.hidden));
    p.b2 = load_vector("b2", static_cast<std::size_t>(p.hidden));
    p.b3 = load_vector("b3", 1);
    return ck;
}

std::string train_report_to_json(const TrainReport& report) {
    json epochs = json::array();
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        const EpochStats& s = report.epochs[e];
        epochs.push_back({{"epoch", e + 1},
                          {"train_total", s.train_total},
                          {"val_total", s.val_total},
                          {"val_radar", s.val_radar},
                          {"val_ref", s.val_ref},
                          {"val_unc", s.val_unc},
                          {"sigma", s.sigma}});
    }
    json j = {{"best_epoch", report.best_epoch},
              {"best_val_total", report.best_val_total},
              {"stop_reason", report.stop_reason},
              {"epochs", std::move(epochs)}};
    return j.dump(2) + "\n";
}

}  // namespace bedrec
