// End-to-end acceptance suite. Prints one PASS/FAIL/SKIP line per criterion
// and exits non-zero if any criterion fails.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cli.hpp"
#include "report.hpp"
#include "signcraft/checkpoint.hpp"
#include "signcraft/errors.hpp"
#include "signcraft/layers.hpp"
#include "signcraft/train.hpp"
#include "signcraft/transfer.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace signcraft;
using namespace signcraft::testing;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances and reference values ------------------------------

constexpr double kGradRelTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr int kGradConfigs = 25;  // per layer, >= 20 required
constexpr double kGradBudgetSeconds = 120.0;

constexpr int kConvOracleConfigs = 100;
constexpr double kConvOracleAbsTol = 1e-6;

constexpr double kSyntheticMinValAcc = 0.95;
constexpr double kSyntheticBudgetSeconds = 300.0;
// CRC32 of the metrics CSV and checkpoint written by the first synthetic run.
constexpr std::uint32_t kPinnedMetricsCrc = 0xb4567b58u;
constexpr std::uint32_t kPinnedCheckpointCrc = 0x2144df1cu;

constexpr std::size_t kTransferEpochs = 10;
constexpr std::size_t kTransferPerClass = 10;
constexpr std::uint64_t kTransferDataSeed = 11;

constexpr double kLnKTol = 1e-9;
constexpr double kOverfitLoss = 0.05;
constexpr int kOverfitMaxSteps = 200;

// ---- reporting -----------------------------------------------------------

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
    if (!pass) ++g_failures;
}

void skip(int id, const std::string& name, const std::string& why) {
    std::cout << "SKIP [" << id << "] " << name << ": " << why << std::endl;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Runs a criterion body, turning any escaped exception into a FAIL line.
void guarded(int id, const std::string& name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

struct CliResult {
    int code;
    std::string out, err;
};

CliResult cli_run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string file_bytes(const fs::path& p) { return cli::read_text_file(p); }

std::uint32_t file_crc(const fs::path& p) {
    const std::string s = file_bytes(p);
    return crc32({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

// ---- 1: finite differences -------------------------------------------------

void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1001);
    double worst_conv = 0, worst_dense = 0, worst_relu = 0, worst_pool = 0, worst_ce = 0;

    for (int cfg = 0; cfg < kGradConfigs; ++cfg) {
        const std::size_t n = 1 + rng.below(2), c = 1 + rng.below(3), o = 1 + rng.below(4);
        const std::size_t kh = 1 + rng.below(3), kw = 1 + rng.below(3);
        const std::size_t h = kh + rng.below(5), w = kw + rng.below(5);
        TensorD in = random_tensor({n, c, h, w}, rng), wt = random_tensor({o, c, kh, kw}, rng);
        TensorD b = random_tensor({o}, rng);
        const TensorD probe = random_tensor({n, o, h - kh + 1, w - kw + 1}, rng);
        auto loss = [&] { return dot(ops::conv2d_forward(in, wt, b), probe); };
        const auto g = ops::conv2d_backward(in, wt, probe);
        worst_conv = std::max({worst_conv, max_relative_error(as_vector(g.input), numeric_gradient(in, loss, kFdStep)),
                               max_relative_error(as_vector(g.weights), numeric_gradient(wt, loss, kFdStep)),
                               max_relative_error(as_vector(g.bias), numeric_gradient(b, loss, kFdStep))});
    }
    for (int cfg = 0; cfg < kGradConfigs; ++cfg) {
        const std::size_t n = 1 + rng.below(5), f = 1 + rng.below(16), m = 1 + rng.below(8);
        TensorD x = random_tensor({n, f}, rng), w = random_tensor({f, m}, rng), b = random_tensor({m}, rng);
        const TensorD probe = random_tensor({n, m}, rng);
        auto loss = [&] { return dot(ops::dense_forward(x, w, b), probe); };
        const auto g = ops::dense_backward(x, w, probe);
        worst_dense = std::max({worst_dense, max_relative_error(as_vector(g.input), numeric_gradient(x, loss, kFdStep)),
                                max_relative_error(as_vector(g.weights), numeric_gradient(w, loss, kFdStep)),
                                max_relative_error(as_vector(g.bias), numeric_gradient(b, loss, kFdStep))});
    }
    for (int cfg = 0; cfg < kGradConfigs; ++cfg) {
        TensorD x = random_tensor({1 + rng.below(3), 1 + rng.below(30)}, rng);
        for (auto& v : x.data())
            if (std::abs(v) < 1e-2) v = 0.5;  // keep the probe off the kink
        const TensorD probe = random_tensor(x.shape(), rng);
        auto loss = [&] { return dot(ops::relu_forward(x), probe); };
        worst_relu = std::max(worst_relu, max_relative_error(as_vector(ops::relu_backward(x, probe)),
                                                             numeric_gradient(x, loss, kFdStep)));
    }
    for (int cfg = 0; cfg < kGradConfigs; ++cfg) {
        const std::size_t n = 1 + rng.below(2), c = 1 + rng.below(3);
        const std::size_t h = 2 + rng.below(6), w = 2 + rng.below(6);
        // distinct values spaced far beyond the step, so no argmax flips
        const auto perm = shuffle_indices(rng, n * c * h * w);
        TensorD in({n, c, h, w});
        for (std::size_t i = 0; i < perm.size(); ++i) in[i] = 0.01 * static_cast<double>(perm[i]);
        const auto fwd = ops::maxpool2x2_forward(in);
        const TensorD probe = random_tensor(fwd.output.shape(), rng);
        auto loss = [&] { return dot(ops::maxpool2x2_forward(in).output, probe); };
        worst_pool = std::max(worst_pool, max_relative_error(as_vector(ops::maxpool2x2_backward(probe, fwd.argmax, in.shape())),
                                                             numeric_gradient(in, loss, kFdStep)));
    }
    for (int cfg = 0; cfg < kGradConfigs; ++cfg) {
        const std::size_t n = 1 + rng.below(6), k = 2 + rng.below(10);
        TensorD z = random_tensor({n, k}, rng, -3.0, 3.0);
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) l = rng.below(k);
        auto loss = [&] { return cross_entropy(ops::softmax(z), std::span<const std::size_t>(labels)).loss; };
        const auto analytic = cross_entropy(ops::softmax(z), std::span<const std::size_t>(labels)).logits_grad;
        worst_ce = std::max(worst_ce, max_relative_error(as_vector(analytic), numeric_gradient(z, loss, kFdStep)));
    }

    const double elapsed = seconds_since(t0);
    const double worst = std::max({worst_conv, worst_dense, worst_relu, worst_pool, worst_ce});
    std::ostringstream d;
    d << kGradConfigs << " configs/layer, max rel err conv=" << fmt("%.2e", worst_conv)
      << " dense=" << fmt("%.2e", worst_dense) << " relu=" << fmt("%.2e", worst_relu)
      << " maxpool=" << fmt("%.2e", worst_pool) << " softmax+ce=" << fmt("%.2e", worst_ce)
      << " (tol " << fmt("%.0e", kGradRelTol) << "), " << fmt("%.2f", elapsed) << " s";
    report(1, "finite-difference gradients", worst < kGradRelTol && elapsed < kGradBudgetSeconds, d.str());
}

// ---- 2: convolution oracle ---------------------------------------------------

void criterion_conv_oracle() {
    Rng rng(2002);
    double worst = 0.0;
    for (int cfg = 0; cfg < kConvOracleConfigs; ++cfg) {
        const std::size_t n = 1 + rng.below(2), c = 1 + rng.below(4), o = 1 + rng.below(8);
        const std::size_t kh = 1 + rng.below(5), kw = 1 + rng.below(5);
        const std::size_t h = kh + rng.below(17 - kh), w = kw + rng.below(17 - kw);
        const TensorD in = random_tensor({n, c, h, w}, rng), wt = random_tensor({o, c, kh, kw}, rng);
        const TensorD b = random_tensor({o}, rng);
        const TensorD got = ops::conv2d_forward(in, wt, b), want = naive_conv2d(in, wt, b);
        if (got.shape() != want.shape()) {
            worst = INFINITY;
            break;
        }
        for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
    report(2, "conv2d vs direct oracle", worst <= kConvOracleAbsTol,
           std::to_string(kConvOracleConfigs) + " configs, max abs err " + fmt("%.3e", worst) + " (tol " +
               fmt("%.0e", kConvOracleAbsTol) + ")");
}

// ---- 3: synthetic end-to-end ---------------------------------------------------

struct Workspace {
    TempDir dir{"signcraft-acceptance"};
    std::string p(const std::string& name) const { return (dir.path() / name).string(); }
};

std::vector<std::string> train_args(const Workspace& ws, const std::string& tag) {
    return {"train", "--data", ws.p("domain_a"), "--out", ws.p(tag + ".ckpt"), "--metrics", ws.p(tag + ".csv")};
}

void criterion_synthetic(const Workspace& ws) {
    const CliResult gen = cli_run({"synth", "--out", ws.p("domain_a"), "--preset", "a", "--per-class", "50", "--seed", "7"});
    if (gen.code != 0) throw std::runtime_error("synth failed: " + gen.err);

    const auto t0 = std::chrono::steady_clock::now();
    const CliResult r = cli_run(train_args(ws, "synthetic_1"));  // all training flags at their defaults
    const double elapsed = seconds_since(t0);
    if (r.code != 0) throw std::runtime_error("train failed: " + r.err);

    const History h = cli::parse_metrics_csv(file_bytes(ws.p("synthetic_1.csv")));
    const double acc = h.empty() || !h.back().val_acc ? 0.0 : *h.back().val_acc;
    const std::uint32_t metrics_crc = file_crc(ws.p("synthetic_1.csv"));
    const std::uint32_t ckpt_crc = file_crc(ws.p("synthetic_1.ckpt"));
    const bool pinned = metrics_crc == kPinnedMetricsCrc && ckpt_crc == kPinnedCheckpointCrc;

    std::ostringstream d;
    d << h.size() << " epochs, final val_acc " << fmt("%.4f", acc) << " (min " << kSyntheticMinValAcc << "), "
      << fmt("%.1f", elapsed) << " s; metrics crc " << hex32(metrics_crc) << " checkpoint crc " << hex32(ckpt_crc)
      << (pinned ? " match pins" : " DIFFER from pins " + hex32(kPinnedMetricsCrc) + "/" + hex32(kPinnedCheckpointCrc));
    report(3, "synthetic training accuracy", h.size() == 30 && acc >= kSyntheticMinValAcc &&
                                                 elapsed < kSyntheticBudgetSeconds && pinned,
           d.str());
}

// ---- 4: transfer vs scratch ------------------------------------------------------

void criterion_transfer(const Workspace& ws) {
    const Checkpoint pretrained = load_checkpoint(ws.p("synthetic_1.ckpt"));
    const Dataset domain_b = synth_dataset(synth_preset_b(), kTransferPerClass, kTransferDataSeed);

    double sum_ft = 0.0, sum_scratch = 0.0;
    std::ostringstream per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        TrainConfig cfg;
        cfg.epochs = kTransferEpochs;
        cfg.seed = seed;
        const TrainingRun ft = fine_tune(pretrained, domain_b, cfg, FreezeMode::None);
        const TrainingRun scratch = train_from_scratch(domain_b, cfg);
        const double a = ft.history.back().val_acc.value_or(0.0);
        const double s = scratch.history.back().val_acc.value_or(0.0);
        sum_ft += a;
        sum_scratch += s;
        per_seed << " s" << seed << "=" << fmt("%.3f", a) << "/" << fmt("%.3f", s);
    }
    const double mean_ft = sum_ft / 5.0, mean_scratch = sum_scratch / 5.0;
    report(4, "transfer beats scratch", mean_ft >= mean_scratch,
           "epoch-" + std::to_string(kTransferEpochs) + " mean val_acc fine-tuned " + fmt("%.4f", mean_ft) +
               " vs scratch " + fmt("%.4f", mean_scratch) + " (per seed ft/scratch:" + per_seed.str() + ")");
}

// ---- 5: parameter anchors ----------------------------------------------------------

void criterion_summary() {
    const CliResult r = cli_run({"summary", "--arch-for-classes", "37"});
    if (r.code != 0) throw std::runtime_error("summary failed: " + r.err);
    std::map<std::string, std::size_t> params;
    std::istringstream lines(r.out);
    std::string line;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        std::string name, last, tok;
        fields >> name;
        while (fields >> tok) last = tok;
        if (!last.empty() && std::all_of(last.begin(), last.end(), ::isdigit) && name.find('_') != std::string::npos)
            params[name] = std::stoull(last);
    }
    bool zeros = true;
    std::size_t zero_rows = 0;
    for (const auto& [name, count] : params)
        if (name.starts_with("max_pooling2d") || name.starts_with("dropout") || name.starts_with("flatten")) {
            zeros = zeros && count == 0;
            ++zero_rows;
        }
    const bool ok = params["conv2d_1"] == 896 && params["conv2d_2"] == 18496 && zeros && zero_rows == 5;
    report(5, "summary parameter anchors", ok,
           "conv2d_1=" + std::to_string(params["conv2d_1"]) + " conv2d_2=" + std::to_string(params["conv2d_2"]) +
               ", " + std::to_string(zero_rows) + " pool/dropout/flatten rows " + (zeros ? "all 0" : "NOT all 0"));
}

// ---- 6: determinism -------------------------------------------------------------------

void criterion_determinism(const Workspace& ws) {
    const CliResult again = cli_run(train_args(ws, "synthetic_2"));
    if (again.code != 0) throw std::runtime_error("train rerun failed: " + again.err);
    const bool train_same = file_bytes(ws.p("synthetic_1.ckpt")) == file_bytes(ws.p("synthetic_2.ckpt")) &&
                            file_bytes(ws.p("synthetic_1.csv")) == file_bytes(ws.p("synthetic_2.csv"));

    const CliResult gen = cli_run({"synth", "--out", ws.p("domain_b"), "--preset", "b", "--per-class", "10", "--seed", "11"});
    if (gen.code != 0) throw std::runtime_error("synth failed: " + gen.err);
    bool ft_same = true;
    for (const char* tag : {"ft_1", "ft_2"}) {
        const CliResult r = cli_run({"finetune", "--base", ws.p("synthetic_1.ckpt"), "--data", ws.p("domain_b"),
                                     "--out", ws.p(std::string(tag) + ".ckpt"), "--metrics", ws.p(std::string(tag) + ".csv")});
        if (r.code != 0) throw std::runtime_error("finetune failed: " + r.err);
    }
    ft_same = file_bytes(ws.p("ft_1.ckpt")) == file_bytes(ws.p("ft_2.ckpt")) &&
              file_bytes(ws.p("ft_1.csv")) == file_bytes(ws.p("ft_2.csv"));
    report(6, "byte-identical reruns", train_same && ft_same,
           std::string("train artifacts ") + (train_same ? "identical" : "DIFFER") + ", finetune artifacts " +
               (ft_same ? "identical" : "DIFFER"));
}

// ---- 7: checkpoint integrity ----------------------------------------------------------

/// Name of the most specific error class raised by decoding `bytes`.
std::string decode_outcome(const std::vector<std::uint8_t>& bytes) {
    try {
        decode_checkpoint(bytes);
        return "ok";
    } catch (const ChecksumError&) {
        return "ChecksumError";
    } catch (const CorruptError&) {
        return "CorruptError";
    } catch (const FormatError&) {
        return "FormatError";
    } catch (const std::exception& e) {
        return std::string("other(") + e.what() + ")";
    }
}

void reseal(std::vector<std::uint8_t>& bytes) {
    const std::uint32_t crc = crc32(std::span(bytes).first(bytes.size() - 4));
    for (int i = 0; i < 4; ++i) bytes[bytes.size() - 4 + i] = static_cast<std::uint8_t>(crc >> (8 * i));
}

void criterion_checkpoint(const Workspace& ws) {
    const Checkpoint loaded = load_checkpoint(ws.p("synthetic_1.ckpt"));
    save_checkpoint(loaded, ws.p("resaved.ckpt"));
    const bool stable = file_bytes(ws.p("synthetic_1.ckpt")) == file_bytes(ws.p("resaved.ckpt"));

    const std::string raw = file_bytes(ws.p("synthetic_1.ckpt"));
    const std::vector<std::uint8_t> good(raw.begin(), raw.end());

    auto bad_magic = good;
    bad_magic[3] ^= 0xff;
    auto truncated = std::vector<std::uint8_t>(good.begin(), good.begin() + static_cast<long>(good.size() / 3));
    auto shape = good;
    const std::string needle = "[32,3,3,3]";
    const auto at = std::search(shape.begin(), shape.end(), needle.begin(), needle.end());
    if (at == shape.end()) throw std::runtime_error("conv1 manifest entry not found");
    at[1] = '1';  // [12,3,3,3]
    reseal(shape);
    auto crc = good;
    crc[good.size() / 2] ^= 0x01;

    const std::vector<std::tuple<std::string, std::vector<std::uint8_t>*, std::string>> cases = {
        {"bad magic", &bad_magic, "FormatError"},
        {"truncation", &truncated, "CorruptError"},
        {"shape mismatch", &shape, "CorruptError"},
        {"crc failure", &crc, "ChecksumError"},
    };
    bool all = true;
    std::string detail = std::string("save-load-save ") + (stable ? "identical" : "DIFFERS");
    for (const auto& [name, bytes, want] : cases) {
        const std::string got = decode_outcome(*bytes);
        all = all && got == want;
        detail += "; " + name + " -> " + got;
    }
    report(7, "checkpoint integrity", stable && all, detail);
}

// ---- 8: loss analytics ---------------------------------------------------------------

void criterion_loss() {
    double worst = 0.0;
    for (std::size_t k : {2u, 37u, 43u}) {
        TensorD uniform({4, k}, 1.0 / static_cast<double>(k));
        const std::vector<std::size_t> labels = {0, k - 1, k / 2, 1};
        const double loss = cross_entropy(uniform, std::span<const std::size_t>(labels)).loss;
        worst = std::max(worst, std::abs(loss - std::log(static_cast<double>(k))));
    }

    const Dataset batch = synth_dataset(synth_preset_a(), 6, 8);  // 36 images, one batch
    Rng init(5);
    Model model = Model::initialize(canonical_architecture(6), init);
    TrainConfig cfg;
    Rng rng(6);
    const std::span<const std::size_t> labels(batch.labels);
    int steps = 0;
    double loss = cross_entropy(model.predict(batch.images), labels).loss;
    while (loss >= kOverfitLoss && steps < kOverfitMaxSteps) {
        const ForwardCache cache = model.forward(batch.images, Phase::Train, rng);
        const auto ce = cross_entropy(cache.probabilities, labels);
        const Gradients grads = model.backward(cache, ce.logits_grad);
        model.set_step(model.step() + 1);
        for (std::size_t l = 0; l < model.states().size(); ++l)
            adam_step(model.state(l), grads.layers[l], model.step(), cfg);
        ++steps;
        loss = cross_entropy(model.predict(batch.images), labels).loss;
    }
    report(8, "loss analytics", worst <= kLnKTol && loss < kOverfitLoss,
           "max |loss - ln K| " + fmt("%.2e", worst) + " for K in {2,37,43}; one batch of 36 reached loss " +
               fmt("%.4f", loss) + " after " + std::to_string(steps) + " steps (limit " +
               std::to_string(kOverfitMaxSteps) + ")");
}

// ---- 9: GTSRB (optional) -----------------------------------------------------------------

void criterion_gtsrb() {
    const char* root = std::getenv("SIGNCRAFT_GTSRB_DIR");
    if (!root || !*root) {
        skip(9, "GTSRB held-out accuracy", "SIGNCRAFT_GTSRB_DIR not set (expects <dir>/train and <dir>/test)");
        return;
    }
    const Dataset train = load_directory_dataset(fs::path(root) / "train");
    const Dataset test = load_directory_dataset(fs::path(root) / "test");
    TrainConfig cfg;
    cfg.val_fraction = 0.0;
    Rng init = seed_stream(cfg.seed, SeedStream::Init);
    Model model = Model::initialize(canonical_architecture(train.class_count()), init);
    fit(model, train, Dataset{}, cfg);
    const Evaluation eval = evaluate(model, test);
    report(9, "GTSRB held-out accuracy", train.class_count() == 43 && eval.accuracy >= 0.90,
           std::to_string(train.size()) + " train / " + std::to_string(test.size()) + " test images, accuracy " +
               fmt("%.4f", eval.accuracy) + " (min 0.90)");
}

}  // namespace

int main() {
    std::cout << "signcraft acceptance suite" << std::endl;
    Workspace ws;
    guarded(1, "finite-difference gradients", criterion_gradients);
    guarded(2, "conv2d vs direct oracle", criterion_conv_oracle);
    guarded(3, "synthetic training accuracy", [&] { criterion_synthetic(ws); });
    guarded(4, "transfer beats scratch", [&] { criterion_transfer(ws); });
    guarded(5, "summary parameter anchors", criterion_summary);
    guarded(6, "byte-identical reruns", [&] { criterion_determinism(ws); });
    guarded(7, "checkpoint integrity", [&] { criterion_checkpoint(ws); });
    guarded(8, "loss analytics", criterion_loss);
    guarded(9, "GTSRB held-out accuracy", criterion_gtsrb);
    std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : std::to_string(g_failures) + " CRITERIA FAILED")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
