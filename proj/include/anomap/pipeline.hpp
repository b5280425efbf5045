#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "anomap/autoencoder.hpp"
#include "anomap/features.hpp"
#include "anomap/image_io.hpp"
#include "anomap/ocsvm.hpp"
#include "anomap/platt.hpp"
#include "anomap/tensor.hpp"

namespace anomap {

// Image-level labels: +1 malignant, -1 normal.
struct LabeledImage {
    Tensor pixels;  // {H,W} grayscale in [0,1] after preprocess()
    int label = 0;
    std::string id;
};

struct ManifestEntry {
    std::string path;  // resolved against the manifest's directory on read
    int label = 0;
    std::string id;
};

// Delimited text, header "path,label,id", label in {normal, malignant}.
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

// read_manifest + read_image + preprocess for every entry.
std::vector<LabeledImage> load_dataset(const std::string& manifest_path);

// Gray-world channel equalization (stand-in for illuminant normalization),
// then 0.299R + 0.587G + 0.114B, rescaled to [0,1]. RGB input only.
Tensor preprocess(const Image8& raw);

struct PatchRef {
    Tensor patch;
    int x0 = 0;
    int y0 = 0;
};

// Near-uniform cover: count is factored into cols x rows matching the image
// aspect, offsets evenly spaced with both borders anchored.
std::vector<PatchRef> extract_training_patches(const Tensor& gray, int count = 35,
                                               int size = 256);
// Offsets 0, stride, 2*stride, ... plus an edge-anchored final offset, both
// axes, so the patches cover every pixel.
std::vector<PatchRef> extract_test_patches(const Tensor& gray, int size = 256, int stride = 16);

// Overlap-averaged per-pixel probabilities.
class ProbabilityMap {
public:
    ProbabilityMap(int h, int w);
    void accumulate(int y0, int x0, int size, double p);
    // sum/count per covered pixel; uncovered pixels are 0.
    Tensor finalize() const;

private:
    int h_, w_;
    std::vector<double> sum_;
    std::vector<int> count_;
};

// Calibration over a full training set needs more travel than fit_platt's
// default budget: Adam moves each scalar by at most lr per step, and the
// fitted slope is typically several units.
inline PlattTrainConfig pipeline_platt_defaults() {
    PlattTrainConfig p;
    p.epochs = 200;
    p.adam.lr = 0.01;
    return p;
}

struct PipelineConfig {
    int patch_size = 256;
    int train_patch_count = 35;
    int stride = 16;
    int bins = 32;
    double threshold = 0.5;
    TrainConfig ae;  // its seed is derived from the pipeline seed
    PlattTrainConfig platt = pipeline_platt_defaults();  // its seed likewise
    std::vector<double> nu_grid = kDefaultNuGrid;
    std::vector<double> c_multipliers = kDefaultCMultipliers;
    uint64_t seed = 0;
};

// Everything classify_image needs, as trained by train_pipeline.
struct Bundle {
    AutoencoderModel ae;
    FeatureStats stats;
    OcSvmModel svm;
    PlattModel platt;
    int patch_size = 256;
    int stride = 16;
    int bins = 32;
    double threshold = 0.5;
    uint64_t seed = 0;
};

void save_bundle(const std::string& path, const Bundle& bundle);
Bundle load_bundle(const std::string& path);

// Three phases: the autoencoder trains on patches of normal images only;
// the SVM grid is selected by image-level accuracy over all training images;
// the calibrator fits on decision values of every training patch, targets
// -1 for normal-image patches and the SVM's own labels for the rest.
// Failures surface with a [phaseN] prefix. `log` gets progress lines.
Bundle train_pipeline(const std::vector<LabeledImage>& images, const PipelineConfig& cfg,
                      std::ostream* log = nullptr);
// Same, restricted to a subset of image indices (cross-validation trains on
// folds without copying images).
Bundle train_pipeline(const std::vector<LabeledImage>& images,
                      const std::vector<std::size_t>& subset, const PipelineConfig& cfg,
                      std::ostream* log = nullptr);

struct ClassifyResult {
    int label = -1;  // +1 iff at least one patch probability exceeds threshold
    double max_prob = 0.0;
    int abnormal_patches = 0;
    Tensor map;
};

ClassifyResult classify_image(const Bundle& bundle, const Tensor& gray);

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Per-class seeded shuffle, round-robin deal. Every index lands in exactly
// one test fold; class proportions match within one image.
std::vector<FoldSplit> stratified_kfold(const std::vector<int>& labels, int k, uint64_t seed);

struct ConfusionCounts {
    long long tp = 0, fp = 0, tn = 0, fn = 0;
    long long total() const { return tp + fp + tn + fn; }
};

// A metric with a zero denominator is undefined and stays empty.
struct Metrics {
    std::optional<double> acc, f1, sensitivity, specificity, lr_pos, lr_neg, dor;
};

Metrics metrics(const ConfusionCounts& counts);

struct ImageRecord {
    std::string id;
    int true_label = 0;
    int predicted = 0;
    double max_prob = 0.0;
};

struct FoldResult {
    ConfusionCounts counts;
    Metrics scores;
};

struct CrossvalReport {
    std::vector<FoldResult> folds;
    ConfusionCounts pooled;
    Metrics pooled_scores;        // micro average: counts pooled, then scored
    Metrics mean_of_fold_scores;  // macro average over folds where defined
    std::vector<ImageRecord> records;
};

// `on_test`, when set, receives every held-out classification (image index
// into `images` plus the result) as folds complete; maps are not retained in
// the report, so this is the hook for map-level scoring.
CrossvalReport run_crossval(const std::vector<LabeledImage>& images, const PipelineConfig& cfg,
                            int k, std::ostream* log = nullptr,
                            const std::function<void(std::size_t, const ClassifyResult&)>&
                                on_test = {});

void write_records_csv(const std::string& path, const std::vector<ImageRecord>& records);
std::string format_metrics(const Metrics& m);

}  // namespace anomap
