#include "anomap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "anomap/error.hpp"
#include "anomap/serialize.hpp"

namespace anomap {

namespace {

constexpr char kBundleMagic[4] = {'A', 'B', 'D', 'L'};
constexpr uint32_t kBundleVersion = 1;

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int parse_label(const std::string& s, const std::string& path) {
    if (s == "normal") return -1;
    if (s == "malignant") return +1;
    throw DataError("manifest label must be normal or malignant, got \"" + s + "\" in " + path);
}

std::string label_name(int label) { return label > 0 ? "malignant" : "normal"; }

// Offsets evenly spaced over [0, dim-size], both endpoints included.
std::vector<int> spread_offsets(int dim, int size, int n) {
    std::vector<int> off;
    if (n == 1) {
        off.push_back(0);
        return off;
    }
    long long span = dim - size;
    for (int i = 0; i < n; ++i)
        off.push_back(static_cast<int>(span * i / (n - 1)));
    return off;
}

std::vector<int> tile_offsets(int dim, int size, int stride) {
    std::vector<int> off;
    for (int o = 0; o + size <= dim; o += stride) off.push_back(o);
    if (off.back() != dim - size) off.push_back(dim - size);
    return off;
}

Tensor cut_patch(const Tensor& gray, int y0, int x0, int size) {
    Tensor p({size, size});
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) p.at(y, x) = gray.at(y0 + y, x0 + x);
    return p;
}

void check_image_fits(const Tensor& gray, int size, const char* who) {
    if (gray.rank() != 2)
        throw std::invalid_argument(std::string(who) + ": expected {H,W}, got " +
                                    shape_str(gray.shape));
    if (gray.dim(0) < size || gray.dim(1) < size)
        throw std::invalid_argument(std::string(who) + ": image " + shape_str(gray.shape) +
                                    " smaller than patch size " + std::to_string(size));
}

template <typename Fn>
auto run_phase(const char* tag, Fn&& fn) {
    try {
        return fn();
    } catch (ConfigError& e) {
        throw ConfigError(std::string(tag) + e.what());
    } catch (IoError& e) {
        throw IoError(std::string(tag) + e.what());
    } catch (DataError& e) {
        throw DataError(std::string(tag) + e.what());
    } catch (VersionError& e) {
        throw VersionError(std::string(tag) + e.what());
    } catch (std::exception& e) {
        throw std::runtime_error(std::string(tag) + e.what());
    }
}

std::optional<double> ratio(double num, double den) {
    if (den == 0.0) return std::nullopt;
    return num / den;
}

void append_defined(std::vector<double>& acc, const std::optional<double>& v) {
    if (v) acc.push_back(*v);
}

std::optional<double> mean_or_empty(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::filesystem::path base = std::filesystem::path(path).parent_path();

    std::vector<ManifestEntry> entries;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line == "path,label,id") continue;  // header optional
        }
        std::istringstream row(line);
        std::string p, l, id;
        if (!std::getline(row, p, ',') || !std::getline(row, l, ',') || !std::getline(row, id))
            throw DataError("manifest row needs path,label,id: \"" + line + "\" in " + path);
        ManifestEntry e;
        std::filesystem::path img(trim(p));
        e.path = img.is_absolute() ? img.string() : (base / img).string();
        e.label = parse_label(trim(l), path);
        e.id = trim(id);
        if (e.id.empty()) throw DataError("manifest row missing id: \"" + line + "\" in " + path);
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw DataError("manifest has no entries: " + path);
    return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "path,label,id\n";
    for (const ManifestEntry& e : entries)
        out << e.path << ',' << label_name(e.label) << ',' << e.id << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::vector<LabeledImage> load_dataset(const std::string& manifest_path) {
    std::vector<LabeledImage> images;
    for (const ManifestEntry& e : read_manifest(manifest_path)) {
        LabeledImage img;
        img.pixels = preprocess(read_image(e.path));
        img.label = e.label;
        img.id = e.id;
        images.push_back(std::move(img));
    }
    return images;
}

Tensor preprocess(const Image8& raw) {
    if (raw.channels != 3)
        throw std::invalid_argument("preprocess: expected RGB input, got " +
                                    std::to_string(raw.channels) + " channel(s)");
    const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
    double mean[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) mean[c] += raw.data[3 * i + c];
    for (double& m : mean) m /= static_cast<double>(n);
    const double grand = (mean[0] + mean[1] + mean[2]) / 3.0;

    // Equal channel means: equalization is the identity, skip it so the
    // already-gray case stays exact.
    const bool balanced = mean[0] == mean[1] && mean[1] == mean[2];
    double scale[3];
    for (int c = 0; c < 3; ++c) scale[c] = mean[c] > 0.0 ? grand / mean[c] : 0.0;

    Tensor gray({raw.height, raw.width});
    const double wr = 0.299, wg = 0.587, wb = 0.114;
    for (std::size_t i = 0; i < n; ++i) {
        double v[3];
        for (int c = 0; c < 3; ++c) {
            double x = raw.data[3 * i + c];
            if (!balanced) {
                // A channel with zero mean carries no signal; gray-world
                // scaling cannot lift it, so it takes the grand mean.
                x = mean[c] > 0.0 ? std::clamp(x * scale[c], 0.0, 255.0) : grand;
            }
            v[c] = x;
        }
        gray.data[i] = (wr * v[0] + wg * v[1] + wb * v[2]) / 255.0;
    }
    return gray;
}

std::vector<PatchRef> extract_training_patches(const Tensor& gray, int count, int size) {
    check_image_fits(gray, size, "extract_training_patches");
    if (count < 1) throw std::invalid_argument("extract_training_patches: count must be >= 1");
    const int h = gray.dim(0), w = gray.dim(1);

    // Factor count into cols x rows matching the aspect ratio; ties go to
    // the wider grid.
    int best_cols = count, best_rows = 1;
    double target = std::log(static_cast<double>(w) / h);
    double best_score = std::abs(std::log(static_cast<double>(count)) - target);
    for (int cols = 1; cols <= count; ++cols) {
        if (count % cols != 0) continue;
        int rows = count / cols;
        double score = std::abs(std::log(static_cast<double>(cols) / rows) - target);
        if (score < best_score - 1e-12 ||
            (std::abs(score - best_score) <= 1e-12 && cols > best_cols)) {
            best_score = score;
            best_cols = cols;
            best_rows = rows;
        }
    }

    std::vector<int> xs = spread_offsets(w, size, best_cols);
    std::vector<int> ys = spread_offsets(h, size, best_rows);
    std::vector<PatchRef> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int y0 : ys)
        for (int x0 : xs) out.push_back({cut_patch(gray, y0, x0, size), x0, y0});
    return out;
}

std::vector<PatchRef> extract_test_patches(const Tensor& gray, int size, int stride) {
    check_image_fits(gray, size, "extract_test_patches");
    if (stride < 1) throw std::invalid_argument("extract_test_patches: stride must be >= 1");
    std::vector<int> xs = tile_offsets(gray.dim(1), size, stride);
    std::vector<int> ys = tile_offsets(gray.dim(0), size, stride);
    std::vector<PatchRef> out;
    out.reserve(xs.size() * ys.size());
    for (int y0 : ys)
        for (int x0 : xs) out.push_back({cut_patch(gray, y0, x0, size), x0, y0});
    return out;
}

ProbabilityMap::ProbabilityMap(int h, int w) : h_(h), w_(w) {
    if (h < 1 || w < 1) throw std::invalid_argument("ProbabilityMap: empty grid");
    sum_.assign(static_cast<std::size_t>(h) * w, 0.0);
    count_.assign(static_cast<std::size_t>(h) * w, 0);
}

void ProbabilityMap::accumulate(int y0, int x0, int size, double p) {
    if (y0 < 0 || x0 < 0 || y0 + size > h_ || x0 + size > w_)
        throw std::invalid_argument("ProbabilityMap: patch outside the grid");
    for (int y = y0; y < y0 + size; ++y) {
        std::size_t row = static_cast<std::size_t>(y) * w_;
        for (int x = x0; x < x0 + size; ++x) {
            sum_[row + x] += p;
            count_[row + x] += 1;
        }
    }
}

Tensor ProbabilityMap::finalize() const {
    Tensor map({h_, w_});
    for (std::size_t i = 0; i < map.size(); ++i)
        map.data[i] = count_[i] > 0 ? sum_[i] / count_[i] : 0.0;
    return map;
}

Bundle train_pipeline(const std::vector<LabeledImage>& images, const PipelineConfig& cfg,
                      std::ostream* log) {
    std::vector<std::size_t> all(images.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return train_pipeline(images, all, cfg, log);
}

Bundle train_pipeline(const std::vector<LabeledImage>& images,
                      const std::vector<std::size_t>& subset, const PipelineConfig& cfg,
                      std::ostream* log) {
    if (subset.empty()) throw std::invalid_argument("train_pipeline: empty training set");
    if (cfg.patch_size < 8 || cfg.patch_size % 8 != 0)
        throw std::invalid_argument("train_pipeline: patch_size must be a positive multiple of 8");
    bool has_normal = false, has_malignant = false;
    for (std::size_t i : subset) {
        int l = images.at(i).label;
        if (l < 0) has_normal = true;
        else has_malignant = true;
    }
    if (!has_normal || !has_malignant)
        throw std::invalid_argument("train_pipeline: training set needs both classes");

    Rng root(cfg.seed);

    // Phase 1: autoencoder on patches of normal images.
    AutoencoderModel ae = run_phase("[phase1] ", [&] {
        std::vector<Tensor> normal_patches;
        for (std::size_t i : subset) {
            if (images[i].label >= 0) continue;
            for (PatchRef& p :
                 extract_training_patches(images[i].pixels, cfg.train_patch_count, cfg.patch_size))
                normal_patches.push_back(std::move(p.patch));
        }
        if (log)
            *log << "[phase1] training reconstruction model on " << normal_patches.size()
                 << " true-normal patches\n";
        AutoencoderModel model = build_model(root.fork(1).seed());
        TrainConfig tc = cfg.ae;
        tc.seed = root.fork(2).seed();
        TrainReport report = train(model, normal_patches, tc);
        if (log)
            *log << "[phase1] best epoch " << report.best_epoch << " of " << tc.epochs
                 << ", validation loss "
                 << report.val_loss[static_cast<std::size_t>(report.best_epoch - 1)] << "\n";
        return model;
    });

    // Phase 2: residue features, standardization, SVM grid selection.
    struct Phase2 {
        FeatureStats stats;
        OcSvmModel svm;
        std::vector<ImagePatchFeatures> per_image;
        double acc_img = 0.0;
    };
    Phase2 p2 = run_phase("[phase2] ", [&] {
        Phase2 r;
        std::vector<FeatureVector> normal_raw;
        std::vector<std::vector<FeatureVector>> raw_per_image;
        for (std::size_t i : subset) {
            std::vector<FeatureVector> raws;
            for (const PatchRef& p :
                 extract_training_patches(images[i].pixels, cfg.train_patch_count, cfg.patch_size))
                raws.push_back(first_order_stats(residue(ae, p.patch), cfg.bins));
            if (images[i].label < 0)
                normal_raw.insert(normal_raw.end(), raws.begin(), raws.end());
            raw_per_image.push_back(std::move(raws));
        }
        r.stats = compute_feature_stats(normal_raw);

        std::vector<FeatureVector> normal_std = standardize(normal_raw, r.stats);
        double med = median_pairwise_sq_dist(normal_std);
        if (med <= 0.0) med = 1.0;  // identical features; any width works
        std::vector<double> c_grid;
        for (double m : cfg.c_multipliers) c_grid.push_back(m * med);

        std::size_t row = 0;
        for (std::size_t i : subset) {
            ImagePatchFeatures ipf;
            ipf.image_id = images[i].id;
            ipf.label = images[i].label;
            ipf.patches = standardize(raw_per_image[row++], r.stats);
            r.per_image.push_back(std::move(ipf));
        }
        SelectionResult sel = select_hyperparameters(r.per_image, cfg.nu_grid, c_grid);
        r.svm = std::move(sel.model);
        for (const GridCell& cell : sel.table)
            if (cell.feasible && cell.nu == sel.best.nu && cell.c == sel.best.c)
                r.acc_img = cell.acc_img;
        if (log)
            *log << "[phase2] selected nu=" << sel.best.nu << " c=" << sel.best.c
                 << " with training image accuracy " << r.acc_img << "\n";
        return r;
    });

    // Phase 3: calibration on every training patch. Normal-image patches
    // keep their ground-truth -1; the rest take the SVM's labels.
    PlattModel platt = run_phase("[phase3] ", [&] {
        std::vector<double> decisions;
        std::vector<int> labels;
        for (const ImagePatchFeatures& img : p2.per_image) {
            for (const FeatureVector& z : img.patches) {
                double g = decision(p2.svm, z);
                decisions.push_back(g);
                labels.push_back(img.label < 0 ? -1 : patch_label(p2.svm, z));
            }
        }
        PlattTrainConfig pc = cfg.platt;
        pc.seed = root.fork(3).seed();
        PlattFit fit = fit_platt(decisions, labels, pc);
        if (log)
            *log << "[phase3] calibration a=" << fit.model.a << " b=" << fit.model.b
                 << " best epoch " << fit.best_epoch << "\n";
        return fit.model;
    });

    Bundle bundle;
    bundle.ae = std::move(ae);
    bundle.stats = p2.stats;
    bundle.svm = std::move(p2.svm);
    bundle.platt = platt;
    bundle.patch_size = cfg.patch_size;
    bundle.stride = cfg.stride;
    bundle.bins = cfg.bins;
    bundle.threshold = cfg.threshold;
    bundle.seed = cfg.seed;
    return bundle;
}

ClassifyResult classify_image(const Bundle& bundle, const Tensor& gray) {
    check_image_fits(gray, bundle.patch_size, "classify_image");
    ProbabilityMap map(gray.dim(0), gray.dim(1));
    ClassifyResult result;
    for (const PatchRef& p : extract_test_patches(gray, bundle.patch_size, bundle.stride)) {
        FeatureVector z =
            standardize(first_order_stats(residue(bundle.ae, p.patch), bundle.bins), bundle.stats);
        double prob = probability(bundle.platt, decision(bundle.svm, z));
        if (prob > bundle.threshold) {
            result.label = +1;
            ++result.abnormal_patches;
        }
        result.max_prob = std::max(result.max_prob, prob);
        map.accumulate(p.y0, p.x0, bundle.patch_size, prob);
    }
    result.map = map.finalize();
    return result;
}

std::vector<FoldSplit> stratified_kfold(const std::vector<int>& labels, int k, uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
    std::vector<std::size_t> neg, pos;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) neg.push_back(i);
        else pos.push_back(i);
    }
    if (neg.size() < static_cast<std::size_t>(k) || pos.size() < static_cast<std::size_t>(k))
        throw std::invalid_argument("stratified_kfold: each class needs at least k images, got " +
                                    std::to_string(neg.size()) + " normal and " +
                                    std::to_string(pos.size()) + " malignant for k=" +
                                    std::to_string(k));
    Rng rng(seed);
    rng.shuffle(neg);
    rng.shuffle(pos);

    std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < neg.size(); ++i)
        folds[i % static_cast<std::size_t>(k)].test.push_back(neg[i]);
    for (std::size_t i = 0; i < pos.size(); ++i)
        folds[i % static_cast<std::size_t>(k)].test.push_back(pos[i]);
    for (FoldSplit& f : folds) {
        std::sort(f.test.begin(), f.test.end());
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (!std::binary_search(f.test.begin(), f.test.end(), i)) f.train.push_back(i);
    }
    return folds;
}

Metrics metrics(const ConfusionCounts& c) {
    Metrics m;
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    m.acc = ratio(tp + tn, tp + tn + fp + fn);
    m.sensitivity = ratio(tp, tp + fn);
    m.specificity = ratio(tn, tn + fp);
    std::optional<double> precision = ratio(tp, tp + fp);
    if (precision && m.sensitivity)
        m.f1 = ratio(2.0 * *precision * *m.sensitivity, *precision + *m.sensitivity);
    if (m.sensitivity && m.specificity) {
        m.lr_pos = ratio(*m.sensitivity, 1.0 - *m.specificity);
        m.lr_neg = ratio(1.0 - *m.sensitivity, *m.specificity);
    }
    if (m.lr_pos && m.lr_neg && *m.lr_neg != 0.0) m.dor = *m.lr_pos / *m.lr_neg;
    return m;
}

CrossvalReport run_crossval(const std::vector<LabeledImage>& images, const PipelineConfig& cfg,
                            int k, std::ostream* log,
                            const std::function<void(std::size_t, const ClassifyResult&)>&
                                on_test) {
    std::vector<int> labels;
    for (const LabeledImage& img : images) labels.push_back(img.label);
    std::vector<FoldSplit> folds = stratified_kfold(labels, k, cfg.seed);

    Rng root(cfg.seed);
    CrossvalReport report;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        if (log) *log << "[fold " << (f + 1) << "/" << folds.size() << "] training\n";
        PipelineConfig fold_cfg = cfg;
        fold_cfg.seed = root.fork(f + 1).seed();
        Bundle bundle = train_pipeline(images, folds[f].train, fold_cfg, log);

        FoldResult fr;
        for (std::size_t i : folds[f].test) {
            ClassifyResult r = classify_image(bundle, images[i].pixels);
            if (on_test) on_test(i, r);
            report.records.push_back({images[i].id, images[i].label, r.label, r.max_prob});
            if (images[i].label > 0) {
                if (r.label > 0) ++fr.counts.tp;
                else ++fr.counts.fn;
            } else {
                if (r.label > 0) ++fr.counts.fp;
                else ++fr.counts.tn;
            }
        }
        fr.scores = metrics(fr.counts);
        if (log)
            *log << "[fold " << (f + 1) << "/" << folds.size() << "] "
                 << format_metrics(fr.scores) << "\n";
        report.pooled.tp += fr.counts.tp;
        report.pooled.fp += fr.counts.fp;
        report.pooled.tn += fr.counts.tn;
        report.pooled.fn += fr.counts.fn;
        report.folds.push_back(std::move(fr));
    }
    report.pooled_scores = metrics(report.pooled);

    std::vector<double> acc, f1, sens, spec, lrp, lrn, dor;
    for (const FoldResult& fr : report.folds) {
        append_defined(acc, fr.scores.acc);
        append_defined(f1, fr.scores.f1);
        append_defined(sens, fr.scores.sensitivity);
        append_defined(spec, fr.scores.specificity);
        append_defined(lrp, fr.scores.lr_pos);
        append_defined(lrn, fr.scores.lr_neg);
        append_defined(dor, fr.scores.dor);
    }
    report.mean_of_fold_scores.acc = mean_or_empty(acc);
    report.mean_of_fold_scores.f1 = mean_or_empty(f1);
    report.mean_of_fold_scores.sensitivity = mean_or_empty(sens);
    report.mean_of_fold_scores.specificity = mean_or_empty(spec);
    report.mean_of_fold_scores.lr_pos = mean_or_empty(lrp);
    report.mean_of_fold_scores.lr_neg = mean_or_empty(lrn);
    report.mean_of_fold_scores.dor = mean_or_empty(dor);
    return report;
}

void save_bundle(const std::string& path, const Bundle& bundle) {
    BinaryWriter w(path);
    w.magic(kBundleMagic);
    w.u32(kBundleVersion);
    w.u32(static_cast<uint32_t>(bundle.patch_size));
    w.u32(static_cast<uint32_t>(bundle.stride));
    w.u32(static_cast<uint32_t>(bundle.bins));
    w.f64(bundle.threshold);
    w.u64(bundle.seed);
    write_model(w, bundle.ae);
    for (double v : bundle.stats.mean) w.f64(v);
    for (double v : bundle.stats.sd) w.f64(v);
    for (bool b : bundle.stats.degenerate) w.u32(b ? 1 : 0);
    w.u64(bundle.svm.support_vectors.size());
    for (const FeatureVector& sv : bundle.svm.support_vectors)
        for (double v : sv.v) w.f64(v);
    w.doubles(bundle.svm.multipliers);
    w.f64(bundle.svm.rho);
    w.f64(bundle.svm.nu);
    w.f64(bundle.svm.c);
    w.u32(static_cast<uint32_t>(bundle.svm.training_size));
    w.f64(bundle.svm.kkt_residual);
    w.u64(static_cast<uint64_t>(bundle.svm.pair_updates));
    w.f64(bundle.platt.a);
    w.f64(bundle.platt.b);
    w.close();
}

Bundle load_bundle(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kBundleMagic);
    uint32_t version = r.u32();
    if (version != kBundleVersion)
        throw VersionError("unsupported bundle version " + std::to_string(version) + " in " +
                           path);
    Bundle b;
    b.patch_size = static_cast<int>(r.u32());
    b.stride = static_cast<int>(r.u32());
    b.bins = static_cast<int>(r.u32());
    b.threshold = r.f64();
    b.seed = r.u64();
    if (b.patch_size < 8 || b.patch_size % 8 != 0 || b.stride < 1 || b.bins < 1)
        throw DataError("implausible bundle geometry in " + path);
    b.ae = read_model(r);
    for (double& v : b.stats.mean) v = r.f64();
    for (double& v : b.stats.sd) v = r.f64();
    for (auto& flag : b.stats.degenerate) flag = r.u32() != 0;
    uint64_t sv_count = r.u64();
    if (sv_count == 0 || sv_count > (1ull << 24))
        throw DataError("implausible support vector count in " + path);
    b.svm.support_vectors.resize(sv_count);
    for (FeatureVector& sv : b.svm.support_vectors)
        for (double& v : sv.v) v = r.f64();
    b.svm.multipliers = r.doubles();
    if (b.svm.multipliers.size() != sv_count)
        throw DataError("support vector/multiplier count mismatch in " + path);
    b.svm.rho = r.f64();
    b.svm.nu = r.f64();
    b.svm.c = r.f64();
    b.svm.training_size = static_cast<int>(r.u32());
    b.svm.kkt_residual = r.f64();
    b.svm.pair_updates = static_cast<long long>(r.u64());
    if (!(b.svm.nu > 0.0 && b.svm.nu <= 1.0) || !(b.svm.c > 0.0))
        throw DataError("implausible svm parameters in " + path);
    b.platt.a = r.f64();
    b.platt.b = r.f64();
    return b;
}

void write_records_csv(const std::string& path, const std::vector<ImageRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "id,true_label,predicted_label,max_patch_probability\n";
    out.precision(17);
    for (const ImageRecord& r : records)
        out << r.id << ',' << label_name(r.true_label) << ',' << label_name(r.predicted) << ','
            << r.max_prob << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::string format_metrics(const Metrics& m) {
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("undefined");
        std::ostringstream os;
        os.precision(4);
        os << std::fixed << *v;
        return os.str();
    };
    std::ostringstream os;
    os << "acc=" << fmt(m.acc) << " f1=" << fmt(m.f1) << " sensitivity=" << fmt(m.sensitivity)
       << " specificity=" << fmt(m.specificity) << " lr+=" << fmt(m.lr_pos)
       << " lr-=" << fmt(m.lr_neg) << " dor=" << fmt(m.dor);
    return os.str();
}

}  // namespace anomap
