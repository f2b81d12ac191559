#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <set>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include "report.hpp"
#include "signcraft/checkpoint.hpp"
#include "signcraft/dataset.hpp"
#include "signcraft/errors.hpp"
#include "signcraft/image.hpp"
#include "signcraft/model.hpp"
#include "signcraft/synth.hpp"
#include "signcraft/train.hpp"
#include "signcraft/transfer.hpp"

namespace fs = std::filesystem;

namespace signcraft::cli {

namespace {

/// Bad invocation that is not a CLI11 parse error (mismatched class sets, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct TrainFlags {
    std::string data;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double lr = 0.001;
    std::uint64_t seed = 42;
    double val_fraction = 0.2;
    std::string out;
    std::string metrics;
};

void add_training_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--data", f.data, "Dataset root (<root>/<class>/<file>.ppm)")->required();
    cmd->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch-size", f.batch_size, "Mini-batch size")->capture_default_str();
    cmd->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--seed", f.seed, "Seed for init, split, shuffling and dropout")->capture_default_str();
    cmd->add_option("--val-fraction", f.val_fraction, "Per-class validation fraction")
        ->capture_default_str();
    cmd->add_option("--metrics", f.metrics, "Per-epoch metrics CSV")->capture_default_str();
}

TrainConfig to_config(const TrainFlags& f) {
    TrainConfig config;
    config.epochs = f.epochs;
    config.batch_size = f.batch_size;
    config.learning_rate = f.lr;
    config.seed = f.seed;
    config.val_fraction = f.val_fraction;
    config.validate();
    return config;
}

Dataset load_dataset(const std::string& dir, std::ostream& out) {
    if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir);
    Dataset ds = load_directory_dataset(dir);
    out << "loaded " << ds.size() << " images in " << ds.class_count() << " classes from " << dir << '\n';
    return ds;
}

void print_history(const History& history, std::ostream& out) {
    for (const EpochMetrics& m : history) {
        out << "epoch " << m.epoch << ": train_loss=" << fixed6(m.train_loss)
            << " train_acc=" << fixed6(m.train_acc);
        if (m.val_loss) out << " val_loss=" << fixed6(*m.val_loss) << " val_acc=" << fixed6(*m.val_acc);
        out << '\n';
    }
}

void finish_run(const TrainingRun& run, const TrainFlags& f, std::ostream& out, std::ostream& err) {
    for (const auto& w : run.warnings) err << "warning: " << w << '\n';
    print_history(run.history, out);
    save_checkpoint(run.checkpoint, f.out);
    write_metrics_csv(run.history, f.metrics);
    out << "wrote " << f.out << " and " << f.metrics << '\n';
}

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
    out << "seed: " << f.seed << '\n';
    const TrainConfig config = to_config(f);
    const Dataset data = load_dataset(f.data, out);
    const TrainingRun run = train_from_scratch(data, config);
    finish_run(run, f, out, err);
    return kSuccess;
}

int cmd_finetune(const TrainFlags& f, const std::string& base, const std::string& freeze,
                 std::ostream& out, std::ostream& err) {
    out << "seed: " << f.seed << '\n';
    const TrainConfig config = to_config(f);
    const FreezeMode mode = parse_freeze_mode(freeze);
    const Checkpoint base_ckpt = load_checkpoint(base);
    const Dataset data = load_dataset(f.data, out);
    if (base_ckpt.normalization_id != kNormalizationId)
        throw UsageError("base checkpoint uses normalization '" + base_ckpt.normalization_id +
                         "', this build expects '" + kNormalizationId + "'");
    const TrainingRun run = fine_tune(base_ckpt, data, config, mode);
    out << "fine-tuning " << base_ckpt.class_names.size() << "-class base into a "
        << run.checkpoint.model.class_count() << "-class head (freeze: " << to_string(mode) << ")\n"
        << format_summary(model_summary(run.checkpoint.model));
    finish_run(run, f, out, err);
    return kSuccess;
}

std::string class_name_diff(const std::vector<std::string>& model, const std::vector<std::string>& data) {
    const std::set<std::string> a(model.begin(), model.end()), b(data.begin(), data.end());
    std::string msg = "class names differ between checkpoint and dataset";
    std::vector<std::string> only_model, only_data;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_model));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_data));
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
        return s.empty() ? std::string("(none)") : s;
    };
    msg += "\n  only in checkpoint: " + join(only_model);
    msg += "\n  only in dataset: " + join(only_data);
    if (only_model.empty() && only_data.empty()) msg += "\n  (same names, different order)";
    return msg;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_dir, const std::string& report,
                 std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(model_path);
    const Dataset data = load_dataset(data_dir, out);
    if (ckpt.class_names != data.class_names) throw UsageError(class_name_diff(ckpt.class_names, data.class_names));
    const Evaluation eval = evaluate(ckpt.model, data);
    out << "loss: " << fixed6(eval.loss) << '\n' << "accuracy: " << fixed6(eval.accuracy) << '\n';
    if (!report.empty()) {
        std::vector<PredictionRecord> records;
        for (std::size_t i = 0; i < eval.predictions.size(); ++i) {
            const auto& p = eval.predictions[i];
            records.push_back({data.sample_paths[i], data.class_names[p.true_label],
                               data.class_names[p.predicted_label], p.confidence,
                               p.true_label == p.predicted_label});
        }
        const std::string confusion_path = report + "_confusion.csv";
        const std::string predictions_path = report + "_predictions.csv";
        write_text_file(confusion_path, format_confusion_csv(eval.confusion, data.class_names));
        write_prediction_report(records, predictions_path);
        out << "wrote " << confusion_path << " and " << predictions_path << '\n';
    }
    return kSuccess;
}

int cmd_predict(const std::string& model_path, const std::string& image, std::size_t top_k,
                std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(model_path);
    if (!fs::is_regular_file(image)) throw IoError("image not found: " + image);
    const Tensor sample = load_image_tensor(image);
    const Tensor probs = ckpt.model.predict(sample.reshaped({1, 3, kImageSide, kImageSide}));

    const std::size_t k = ckpt.model.class_count();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    const std::size_t rows = std::min(std::max<std::size_t>(top_k, 1), k);
    for (std::size_t r = 0; r < rows; ++r)
        out << r + 1 << '\t' << ckpt.class_names[order[r]] << '\t' << fixed6(probs[order[r]]) << '\n';
    return kSuccess;
}

int cmd_summary(const std::string& model_path, std::size_t classes, std::ostream& out) {
    if (!model_path.empty()) {
        const Checkpoint ckpt = load_checkpoint(model_path);
        out << format_summary(model_summary(ckpt.model));
    } else {
        out << format_summary(model_summary(canonical_architecture(classes)));
    }
    return kSuccess;
}

int cmd_synth(const std::string& out_dir, const std::string& preset, std::size_t per_class,
              std::uint64_t seed, std::ostream& out) {
    std::vector<SynthClass> classes;
    if (preset == "a") classes = synth_preset_a();
    else if (preset == "b") classes = synth_preset_b();
    else throw InvalidArgument("preset must be 'a' or 'b'");
    Rng rng(seed);
    synth_generate(classes, per_class, rng, out_dir);
    out << "wrote " << classes.size() * per_class << " images in " << classes.size()
        << " classes to " << out_dir << '\n';
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"signcraft: train, fine-tune and evaluate traffic-sign CNNs"};
    app.require_subcommand(1);

    TrainFlags train_flags;
    train_flags.out = "model.ckpt";
    train_flags.metrics = "metrics.csv";
    auto* train = app.add_subcommand("train", "Train the canonical CNN from scratch");
    add_training_flags(train, train_flags);
    train->add_option("--out", train_flags.out, "Output checkpoint")->capture_default_str();

    TrainFlags ft_flags;
    ft_flags.out = "finetuned.ckpt";
    ft_flags.metrics = "finetune_metrics.csv";
    std::string base, freeze = "none";
    auto* finetune = app.add_subcommand("finetune", "Fine-tune a checkpoint on a new dataset");
    add_training_flags(finetune, ft_flags);
    finetune->add_option("--base", base, "Pretrained checkpoint")->required();
    finetune->add_option("--freeze", freeze, "Layers to freeze: none or conv")
        ->check(CLI::IsMember({"none", "conv"}))
        ->capture_default_str();
    finetune->add_option("--out", ft_flags.out, "Output checkpoint")->capture_default_str();

    std::string eval_model, eval_data, report;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
    evaluate_cmd->add_option("--model", eval_model, "Checkpoint")->required();
    evaluate_cmd->add_option("--data", eval_data, "Dataset root")->required();
    evaluate_cmd->add_option("--report", report, "Write PREFIX_confusion.csv and PREFIX_predictions.csv");

    std::string pred_model, image;
    std::size_t top_k = 3;
    auto* predict = app.add_subcommand("predict", "Classify a single PPM image");
    predict->add_option("--model", pred_model, "Checkpoint")->required();
    predict->add_option("--image", image, "PPM image")->required();
    predict->add_option("--top-k", top_k, "Rows to print")->capture_default_str();

    std::string summary_model;
    std::size_t arch_classes = 0;
    auto* summary = app.add_subcommand("summary", "Print a per-layer parameter table");
    auto* model_opt = summary->add_option("--model", summary_model, "Checkpoint");
    auto* arch_opt = summary->add_option("--arch-for-classes", arch_classes,
                                         "Canonical architecture with K classes")
                         ->check(CLI::PositiveNumber);
    model_opt->excludes(arch_opt);
    summary->require_option(1);

    std::string synth_out, preset = "a";
    std::size_t per_class = 50;
    std::uint64_t synth_seed = 42;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic sign dataset");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--preset", preset, "Class preset: a (6 classes) or b (4 classes)")
        ->check(CLI::IsMember({"a", "b"}))
        ->capture_default_str();
    synth->add_option("--per-class", per_class, "Images per class")->capture_default_str();
    synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();

    std::vector<std::string> argv_storage{"signcraft"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUserError;
    }

    try {
        if (*train) return cmd_train(train_flags, out, err);
        if (*finetune) return cmd_finetune(ft_flags, base, freeze, out, err);
        if (*evaluate_cmd) return cmd_evaluate(eval_model, eval_data, report, out);
        if (*predict) return cmd_predict(pred_model, image, top_k, out);
        if (*summary) return cmd_summary(summary_model, arch_classes, out);
        if (*synth) return cmd_synth(synth_out, preset, per_class, synth_seed, out);
    } catch (const ChecksumError& e) {
        err << "error: corrupt checkpoint: " << e.what() << '\n';
        return kUserError;
    } catch (const CorruptError& e) {
        err << "error: corrupt input: " << e.what() << '\n';
        return kUserError;
    } catch (const FormatError& e) {
        err << "error: format error: " << e.what() << '\n';
        return kUserError;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kUserError;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUserError;
    } catch (const UnsupportedError& e) {
        err << "error: unsupported input: " << e.what() << '\n';
        return kUserError;
    } catch (const InvalidArgument& e) {
        err << "error: invalid argument: " << e.what() << '\n';
        return kUserError;
    } catch (const IndexError& e) {
        err << "error: " << e.what() << '\n';
        return kUserError;
    } catch (const EmptyDatasetError& e) {
        err << "error: " << e.what() << '\n';
        return kUserError;
    } catch (const InvalidArchitecture& e) {
        err << "error: incompatible model: " << e.what() << '\n';
        return kUserError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kInternalError;
}

}  // namespace signcraft::cli
