#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "signcraft/train.hpp"

namespace signcraft::cli {

struct PredictionRecord {
    std::string sample_path;
    std::string true_label;
    std::string predicted_label;
    double confidence = 0.0;
    bool correct = false;
};

/// `epoch,train_loss,train_acc,val_loss,val_acc`, reals with six decimals,
/// empty validation cells when the split was empty, one trailing newline.
std::string format_metrics_csv(const History& history);
void write_metrics_csv(const History& history, const std::filesystem::path& path);
History parse_metrics_csv(const std::string& text);

/// `sample,true,predicted,confidence,correct`.
std::string format_prediction_report(const std::vector<PredictionRecord>& records);
void write_prediction_report(const std::vector<PredictionRecord>& records,
                             const std::filesystem::path& path);
std::vector<PredictionRecord> parse_prediction_report(const std::string& text);

/// Header `true\predicted,<names...>`, then one row per true class.
std::string format_confusion_csv(const std::vector<std::vector<std::size_t>>& confusion,
                                 const std::vector<std::string>& class_names);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace signcraft::cli
