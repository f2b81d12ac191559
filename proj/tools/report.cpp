#include "report.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "signcraft/errors.hpp"

namespace signcraft::cli {

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// Quotes a field only when it contains a separator, quote or newline.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

double parse_real(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw FormatError("bad number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw FormatError("bad number '" + s + "'");
    }
}

const char* const kMetricsHeader = "epoch,train_loss,train_acc,val_loss,val_acc";
const char* const kPredictionHeader = "sample,true,predicted,confidence,correct";

}  // namespace

std::string format_metrics_csv(const History& history) {
    std::string out = std::string(kMetricsHeader) + "\n";
    for (const EpochMetrics& m : history) {
        out += std::to_string(m.epoch) + "," + fixed6(m.train_loss) + "," + fixed6(m.train_acc) + "," +
               (m.val_loss ? fixed6(*m.val_loss) : "") + "," + (m.val_acc ? fixed6(*m.val_acc) : "") +
               "\n";
    }
    return out;
}

void write_metrics_csv(const History& history, const std::filesystem::path& path) {
    if (history.empty()) throw InvalidArgument("refusing to write an empty metrics history");
    write_text_file(path, format_metrics_csv(history));
}

History parse_metrics_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != kMetricsHeader) throw FormatError("not a metrics CSV");
    History history;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_csv_line(lines[i]);
        if (f.size() != 5) throw FormatError("metrics row " + std::to_string(i) + " has wrong arity");
        EpochMetrics m;
        m.epoch = static_cast<std::size_t>(std::stoul(f[0]));
        m.train_loss = parse_real(f[1]);
        m.train_acc = parse_real(f[2]);
        if (!f[3].empty()) m.val_loss = parse_real(f[3]);
        if (!f[4].empty()) m.val_acc = parse_real(f[4]);
        history.push_back(m);
    }
    return history;
}

std::string format_prediction_report(const std::vector<PredictionRecord>& records) {
    std::string out = std::string(kPredictionHeader) + "\n";
    for (const auto& r : records)
        out += csv_field(r.sample_path) + "," + csv_field(r.true_label) + "," +
               csv_field(r.predicted_label) + "," + fixed6(r.confidence) + "," +
               (r.correct ? "true" : "false") + "\n";
    return out;
}

void write_prediction_report(const std::vector<PredictionRecord>& records,
                             const std::filesystem::path& path) {
    write_text_file(path, format_prediction_report(records));
}

std::vector<PredictionRecord> parse_prediction_report(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != kPredictionHeader) throw FormatError("not a prediction report");
    std::vector<PredictionRecord> records;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_csv_line(lines[i]);
        if (f.size() != 5) throw FormatError("prediction row " + std::to_string(i) + " has wrong arity");
        if (f[4] != "true" && f[4] != "false") throw FormatError("bad correct flag '" + f[4] + "'");
        records.push_back({f[0], f[1], f[2], parse_real(f[3]), f[4] == "true"});
    }
    return records;
}

std::string format_confusion_csv(const std::vector<std::vector<std::size_t>>& confusion,
                                 const std::vector<std::string>& class_names) {
    std::string out = "true\\predicted";
    for (const auto& name : class_names) out += "," + csv_field(name);
    out += "\n";
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        out += csv_field(class_names.at(i));
        for (std::size_t v : confusion[i]) out += "," + std::to_string(v);
        out += "\n";
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace signcraft::cli
