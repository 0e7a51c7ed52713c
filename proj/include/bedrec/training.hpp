#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bedrec/errors.hpp"
#include "bedrec/gcn.hpp"
#include "bedrec/graph.hpp"
#include "bedrec/metrics.hpp"
#include "bedrec/raster.hpp"
#include "bedrec/supervision.hpp"

namespace bedrec {

/// Full training configuration. Desk-scale epoch defaults; use
/// apply_paper_settings() to restore the published training budget.
struct TrainConfig {
    int patch_size = 16;
    int stride = 8;
    int batch_size = 16;
    double lr = 1e-4;
    int max_epochs = 500;
    int patience = 50;
    int mc_passes = 10;
    double dropout_rate = 0.2;
    double sigma_cells = 10.0;
    double split_fraction = 0.8;
    std::uint64_t seed = 0;
    bool use_gradients = true;
    bool use_trend = true;
    bool use_ref_loss = true;
    bool band_mode = false;
    int bands = 30;
    int trend_degree = 2;
    int hidden = 128;
    double dilate_radius = 0.0;
    bool normalize_targets = true;
    int threads = 0;  // 0 = hardware concurrency

    void apply_paper_settings() {
        max_epochs = 20000;
        patience = 5000;
    }
};

struct EpochStats {
    double train_total = 0.0;
    double val_total = 0.0;
    double val_radar = 0.0;
    double val_ref = 0.0;
    double val_unc = 0.0;
    std::array<double, 3> sigma{1.0, 1.0, 1.0};
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;  // 1-based
    double best_val_total = 0.0;
    std::string stop_reason;
};

struct TrainOutput {
    GcnParams params;
    BalancerState balancer;
    TrainReport report;
    double target_mean = 0.0;
    double target_std = 1.0;
    TrainConfig config;
};

/// Raised when the loss goes non-finite mid-training; carries the best
/// checkpoint reached before divergence (null when none exists).
class TrainingDivergence : public NumericalError {
public:
    TrainingDivergence(const std::string& msg, std::shared_ptr<TrainOutput> last)
        : NumericalError(msg), last_good(std::move(last)) {}

    std::shared_ptr<TrainOutput> last_good;
};

/// Uniform shuffle by seed; train size = floor(fraction * N).
std::pair<std::vector<Patch>, std::vector<Patch>> split_patches(
    const std::vector<Patch>& patches, double fraction, std::uint64_t seed);

/// 1-indexed horizontal bands; odd bands train, even bands test. The
/// remainder of height / bands is assigned to the last band.
struct BandPartition {
    std::vector<std::uint8_t> train_rows;
    std::vector<std::uint8_t> test_rows;
};
BandPartition band_partition(int height, int bands);

TrainOutput train_model(const RegionDataset& region, const TrainConfig& config);

/// Recomputes the validation total of a trained model with the same patch
/// split and per-patch seed schedule used during training; reproduces
/// report.best_val_total exactly.
double revalidate(const RegionDataset& region, const TrainOutput& output);

struct PredictionResult {
    RasterGrid mean;
    RasterGrid std;
    MetricsReport metrics;  // against the reference bed over valid cells
};

/// Stitched full-grid inference: N stochastic passes (std = cross-pass
/// population std of the stitched maps) or one deterministic pass
/// (std identically zero).
PredictionResult predict_full(const GcnParams& params, const RegionDataset& region,
                              const TrainConfig& config, bool deterministic,
                              double target_mean, double target_std);

// ---------------------------------------------------------------------------
// Checkpoints: params.manifest.json + one NPY per tensor (+ report.json
// written by the trainer CLI).
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& dir, const TrainOutput& output);

struct Checkpoint {
    GcnParams params;
    BalancerState balancer;
    TrainConfig config;
    double target_mean = 0.0;
    double target_std = 1.0;
};
Checkpoint load_checkpoint(const std::string& dir);

std::string train_report_to_json(const TrainReport& report);

}  // namespace bedrec
