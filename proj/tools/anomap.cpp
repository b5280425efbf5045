#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anomap/error.hpp"
#include "anomap/pipeline.hpp"
#include "anomap/synth.hpp"

namespace {

using namespace anomap;

std::string default_out_dir() {
    const char* env = std::getenv("ANOMAP_OUT_DIR");
    return env && *env ? env : ".";
}

// Overrides shared by the subcommands that train.
struct TrainFlags {
    PipelineConfig cfg;
    void attach(CLI::App* app) {
        app->add_option("--seed", cfg.seed, "Root seed for every random choice");
        app->add_option("--epochs", cfg.ae.epochs, "Reconstruction training epochs")
            ->check(CLI::PositiveNumber);
        app->add_option("--patch-size", cfg.patch_size, "Square patch side, multiple of 8")
            ->check(CLI::PositiveNumber);
        app->add_option("--train-patches", cfg.train_patch_count,
                        "Patches sampled per training image")
            ->check(CLI::PositiveNumber);
        app->add_option("--stride", cfg.stride, "Test-time tiling stride")
            ->check(CLI::PositiveNumber);
        app->add_option("--bins", cfg.bins, "Histogram bins for the residue features")
            ->check(CLI::PositiveNumber);
        app->add_option("--threshold", cfg.threshold,
                        "Patch probability above which an image is flagged")
            ->check(CLI::Range(0.0, 1.0));
        app->add_option("--nu-grid", cfg.nu_grid, "Candidate nu values")->delimiter(',');
        app->add_option("--c-grid", cfg.c_multipliers,
                        "Kernel width multipliers of the median pairwise distance")
            ->delimiter(',');
    }
    void validate() const {
        if (cfg.patch_size % 8 != 0)
            throw ConfigError("--patch-size must be a multiple of 8");
        for (double nu : cfg.nu_grid)
            if (!(nu > 0.0 && nu <= 1.0)) throw ConfigError("--nu-grid values must be in (0,1]");
        for (double m : cfg.c_multipliers)
            if (!(m > 0.0)) throw ConfigError("--c-grid multipliers must be positive");
    }
};

void print_report(const CrossvalReport& report) {
    for (std::size_t f = 0; f < report.folds.size(); ++f)
        std::cout << "fold " << (f + 1) << ": " << format_metrics(report.folds[f].scores)
                  << "\n";
    std::cout << "pooled: " << format_metrics(report.pooled_scores) << "\n";
    std::cout << "mean-of-folds: " << format_metrics(report.mean_of_fold_scores) << "\n";
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Texture anomaly screening pipeline"};
    app.require_subcommand(1);

    std::string out_dir = default_out_dir();
    std::string manifest, bundle_path, image_path;

    // synth
    SyntheticSpec spec;
    CLI::App* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
    synth->add_option("--out-dir", out_dir, "Output directory");
    synth->add_option("--seed", spec.seed, "Root seed");
    synth->add_option("--count", spec.images_per_class, "Images per class")
        ->check(CLI::PositiveNumber);
    synth->add_option("--size", spec.image_size, "Image side in pixels")
        ->check(CLI::PositiveNumber);
    synth->add_option("--noise", spec.noise, "Pixel noise level")->check(CLI::NonNegativeNumber);
    synth->add_option("--min-clusters", spec.min_clusters)->check(CLI::PositiveNumber);
    synth->add_option("--max-clusters", spec.max_clusters)->check(CLI::PositiveNumber);
    synth->add_option("--min-cluster-size", spec.min_cluster_size)->check(CLI::PositiveNumber);
    synth->add_option("--max-cluster-size", spec.max_cluster_size)->check(CLI::PositiveNumber);

    // train
    TrainFlags train_flags;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a bundle from a manifest");
    train_cmd->add_option("--manifest", manifest, "Dataset manifest")->required();
    train_cmd->add_option("--bundle", bundle_path, "Bundle file to write")->required();
    std::string loss = "ssim";
    train_cmd->add_option("--loss", loss, "Reconstruction loss")
        ->check(CLI::IsMember({"ssim", "mse"}));
    train_flags.attach(train_cmd);

    // evaluate
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score a manifest with a trained bundle");
    eval_cmd->add_option("--manifest", manifest, "Dataset manifest")->required();
    eval_cmd->add_option("--bundle", bundle_path, "Trained bundle")->required();
    eval_cmd->add_option("--out-dir", out_dir, "Where records.csv goes");

    // map
    CLI::App* map_cmd = app.add_subcommand("map", "Probability map for one image");
    map_cmd->add_option("image", image_path, "Input image")->required();
    map_cmd->add_option("--bundle", bundle_path, "Trained bundle")->required();
    map_cmd->add_option("--out-dir", out_dir, "Where the map files go");
    bool raw = false;
    map_cmd->add_flag("--raw", raw, "Also dump the float map for exact comparison");

    // crossval
    TrainFlags cv_flags;
    int k = 10;
    CLI::App* cv_cmd = app.add_subcommand("crossval", "Stratified k-fold cross-validation");
    cv_cmd->add_option("--manifest", manifest, "Dataset manifest")->required();
    cv_cmd->add_option("--k", k, "Fold count")->check(CLI::Range(2, 1000));
    cv_cmd->add_option("--out-dir", out_dir, "Where records.csv goes");
    cv_flags.attach(cv_cmd);

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        SyntheticResult r = generate_synthetic(spec, out_dir);
        std::cout << "wrote " << r.entries.size() << " images and " << r.manifest_path << "\n";
        return 0;
    }

    if (train_cmd->parsed()) {
        train_flags.cfg.ae.loss = loss == "mse" ? LossKind::Mse : LossKind::Ssim;
        train_flags.validate();
        std::vector<LabeledImage> images = load_dataset(manifest);
        Bundle bundle = train_pipeline(images, train_flags.cfg, &std::cerr);
        save_bundle(bundle_path, bundle);
        std::cout << "wrote " << bundle_path << "\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        Bundle bundle = load_bundle(bundle_path);
        std::vector<LabeledImage> images = load_dataset(manifest);
        ConfusionCounts counts;
        std::vector<ImageRecord> records;
        for (const LabeledImage& img : images) {
            ClassifyResult r = classify_image(bundle, img.pixels);
            records.push_back({img.id, img.label, r.label, r.max_prob});
            if (img.label > 0)
                (r.label > 0 ? counts.tp : counts.fn)++;
            else
                (r.label > 0 ? counts.fp : counts.tn)++;
        }
        std::filesystem::create_directories(out_dir);
        std::string records_path = (std::filesystem::path(out_dir) / "records.csv").string();
        write_records_csv(records_path, records);
        std::cout << format_metrics(metrics(counts)) << "\n";
        std::cout << "wrote " << records_path << "\n";
        return 0;
    }

    if (map_cmd->parsed()) {
        Bundle bundle = load_bundle(bundle_path);
        Tensor gray = preprocess(read_image(image_path));
        ClassifyResult r = classify_image(bundle, gray);
        std::filesystem::create_directories(out_dir);
        std::string stem = std::filesystem::path(image_path).stem().string();
        std::filesystem::path base = std::filesystem::path(out_dir) / (stem + "_map");
        write_image(base.string() + ".png", map_to_image(r.map));
        if (raw) write_map(base.string() + ".bin", r.map);
        double max_p = 0.0;
        for (double v : r.map.data) max_p = std::max(max_p, v);
        std::cout << std::fixed << std::setprecision(4)
                  << (r.label > 0 ? "malignant" : "normal") << " max_patch_probability="
                  << r.max_prob << " max_map_value=" << max_p << "\n";
        std::cout << "wrote " << base.string() << ".png\n";
        return 0;
    }

    cv_flags.validate();
    std::vector<LabeledImage> images = load_dataset(manifest);
    CrossvalReport report = run_crossval(images, cv_flags.cfg, k, &std::cerr);
    print_report(report);
    std::filesystem::create_directories(out_dir);
    std::string records_path = (std::filesystem::path(out_dir) / "records.csv").string();
    write_records_csv(records_path, report.records);
    std::cout << "wrote " << records_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 4;
    } catch (const VersionError& e) {
        std::cerr << "version error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
