// Command-line front end for the bi-modal first-impressions pipeline:
// audio feature extraction, synthetic data generation, training, stochastic
// prediction, metric evaluation and gradient checking.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "impress/audio_features.hpp"
#include "impress/checkpoint.hpp"
#include "impress/csv.hpp"
#include "impress/dataset.hpp"
#include "impress/errors.hpp"
#include "impress/gradcheck_suite.hpp"
#include "impress/metrics.hpp"
#include "impress/models.hpp"
#include "impress/trainer.hpp"

namespace {

using json = nlohmann::ordered_json;

// Exit codes: 0 success, 1 gradcheck tolerance failure, 64 usage error,
// 65 corrupt data, 66 missing input, 70 internal error.
constexpr int kExitOk = 0;
constexpr int kExitGradFail = 1;
constexpr int kExitUsage = 64;
constexpr int kExitDataErr = 65;
constexpr int kExitNoInput = 66;
constexpr int kExitInternal = 70;

// Every run prints its resolved configuration on stderr so results can be
// reproduced from logs alone.
void echo_config(const json& cfg) { std::cerr << "config " << cfg.dump() << "\n"; }

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json trainer_config_json(const impress::TrainerConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"weight_decay", c.weight_decay},
                {"momentum", c.momentum},
                {"lr_decay", c.lr_decay},
                {"batch_size", c.batch_size},
                {"epochs", c.epochs},
                {"n_partitions", c.n_partitions},
                {"base_seed", c.base_seed},
                {"architecture", c.architecture},
                {"checkpoint_interval", c.checkpoint_interval},
                {"decay_biases", c.decay_biases}};
}

// JSON document mirroring TrainerConfig field names; unknown keys rejected.
void apply_config_file(impress::TrainerConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw impress::MissingInputError("cannot open config: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw impress::DataFormatError(path + ": " + e.what());
    }
    if (!doc.is_object()) throw impress::DataFormatError(path + ": config must be a JSON object");
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "learning_rate") cfg.learning_rate = value.get<double>();
            else if (key == "weight_decay") cfg.weight_decay = value.get<double>();
            else if (key == "momentum") cfg.momentum = value.get<double>();
            else if (key == "lr_decay") cfg.lr_decay = value.get<double>();
            else if (key == "batch_size") cfg.batch_size = value.get<int>();
            else if (key == "epochs") cfg.epochs = value.get<int>();
            else if (key == "n_partitions") cfg.n_partitions = value.get<int>();
            else if (key == "base_seed") cfg.base_seed = value.get<uint64_t>();
            else if (key == "architecture") cfg.architecture = value.get<std::string>();
            else if (key == "checkpoint_interval") cfg.checkpoint_interval = value.get<int>();
            else if (key == "decay_biases") cfg.decay_biases = value.get<bool>();
            else throw impress::DataFormatError(path + ": unknown config key '" + key + "'");
        }
    } catch (const json::type_error& e) {
        throw impress::DataFormatError(path + ": " + e.what());
    }
}

impress::FeatureConfig feature_config(int n_partitions) {
    impress::FeatureConfig fc;
    fc.n_partitions = n_partitions;
    return fc;
}

// ---------------------------------------------------------------------------
// extract-audio-features
// ---------------------------------------------------------------------------

int cmd_extract(const std::string& audio_path, const std::string& out_path, int partitions) {
    echo_config({{"subcommand", "extract-audio-features"},
                 {"audio", audio_path},
                 {"out", out_path.empty() ? "-" : out_path},
                 {"n_partitions", partitions}});
    const auto clip = impress::load_wav<double>(audio_path);
    const auto features = impress::extract_features(clip, feature_config(partitions));
    if (out_path.empty()) {
        impress::write_features_csv(std::cout, features);
    } else {
        std::ofstream out(out_path);
        if (!out) throw impress::MissingInputError("cannot create output: " + out_path);
        impress::write_features_csv(out, features);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// synth-data
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& out_dir, int videos, uint64_t seed) {
    echo_config({{"subcommand", "synth-data"}, {"out", out_dir}, {"videos", videos}, {"seed", seed}});
    const std::string manifest = impress::generate_synthetic_dataset(videos, seed, out_dir);
    std::cout << manifest << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const std::string& manifest, const std::string& out_dir,
              const impress::TrainerConfig& cfg) {
    cfg.validate();
    json echo = trainer_config_json(cfg);
    echo["subcommand"] = "train";
    echo["manifest"] = manifest;
    echo["out"] = out_dir;
    echo_config(echo);

    const auto data = impress::load_dataset<float>(manifest, feature_config(cfg.n_partitions));
    impress::TrainResult result;
    if (cfg.architecture == "conv3d") {
        impress::Conv3dModel<float> model;
        result = impress::train(model, data, cfg, out_dir);
    } else {
        impress::LstmModel<float> model;
        result = impress::train(model, data, cfg, out_dir);
    }
    std::cout << json{{"checkpoint", result.final_checkpoint},
                      {"final_mse", result.epoch_mse.back()},
                      {"epochs", result.epoch_mse.size()}}
                     .dump()
              << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

template <typename Model>
void predict_with(const std::string& checkpoint, const std::string& manifest,
                  const std::string& out_path, int k, uint64_t seed, int n_partitions) {
    Model model;
    impress::load_checkpoint<float>(checkpoint, model);
    const auto data = impress::load_dataset<float>(manifest, feature_config(n_partitions));
    std::ofstream out(out_path);
    if (!out) throw impress::MissingInputError("cannot create output: " + out_path);
    out << "video_id,e,a,c,n,o\n";
    for (const auto& s : data.samples) {
        const auto y = impress::predict_stochastic(model, s.frames, s.audio_features, k,
                                                   impress::seed_combine(seed, s.video_hash));
        out << s.video_id;
        for (size_t j = 0; j < y.numel(); ++j) out << "," << fmt17(y[j]);
        out << "\n";
    }
}

int cmd_predict(const std::string& checkpoint, const std::string& manifest,
                const std::string& out_path, const std::string& arch_flag, int k, uint64_t seed,
                int n_partitions) {
    // The checkpoint's architecture tag picks the model unless --arch forces
    // one (a mismatch then fails the strict load).
    std::string arch = arch_flag;
    if (arch.empty()) {
        const uint8_t tag = impress::read_checkpoint_tag(checkpoint);
        if (tag == impress::Conv3dModel<float>::kArchTag) arch = "conv3d";
        else if (tag == impress::LstmModel<float>::kArchTag) arch = "lstm";
        else
            throw impress::DataFormatError(checkpoint + ": unknown architecture tag " +
                                           std::to_string(tag));
    }
    echo_config({{"subcommand", "predict"},
                 {"checkpoint", checkpoint},
                 {"manifest", manifest},
                 {"out", out_path},
                 {"arch", arch},
                 {"k_combinations", k},
                 {"seed", seed},
                 {"n_partitions", n_partitions}});
    if (arch == "conv3d")
        predict_with<impress::Conv3dModel<float>>(checkpoint, manifest, out_path, k, seed,
                                                  n_partitions);
    else if (arch == "lstm")
        predict_with<impress::LstmModel<float>>(checkpoint, manifest, out_path, k, seed,
                                                n_partitions);
    else
        throw impress::DataFormatError("unknown architecture '" + arch + "'");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

std::map<std::string, std::array<double, 5>> read_score_csv(const std::string& path,
                                                            std::vector<std::string>* order) {
    const auto lines = impress::read_lines(path);
    if (lines.empty() || lines[0] != "video_id,e,a,c,n,o")
        throw impress::DataFormatError(path + ": expected header video_id,e,a,c,n,o");
    std::map<std::string, std::array<double, 5>> rows;
    for (size_t i = 1; i < lines.size(); ++i) {
        const auto fields = impress::split_csv_line(lines[i]);
        const std::string where = path + " row " + std::to_string(i + 1);
        if (fields.size() != 6)
            throw impress::DataFormatError(where + ": expected 6 fields, got " +
                                           std::to_string(fields.size()));
        std::array<double, 5> vals{};
        for (int j = 0; j < 5; ++j) {
            vals[j] = impress::parse_double_field(fields[j + 1], where);
            if (!(vals[j] >= 0.0 && vals[j] <= 1.0))
                throw impress::DataFormatError(where + ": value " + fields[j + 1] +
                                               " outside [0,1]");
        }
        if (!rows.emplace(fields[0], vals).second)
            throw impress::DataFormatError(path + ": duplicate video_id '" + fields[0] + "'");
        if (order) order->push_back(fields[0]);
    }
    if (rows.empty()) throw impress::DataFormatError(path + ": no data rows");
    return rows;
}

int cmd_evaluate(const std::string& targets_path, const std::string& predictions_path) {
    echo_config({{"subcommand", "evaluate"},
                 {"targets", targets_path},
                 {"predictions", predictions_path}});
    std::vector<std::string> order;
    const auto targets = read_score_csv(targets_path, &order);
    const auto preds = read_score_csv(predictions_path, nullptr);
    if (targets.size() != preds.size())
        throw impress::DataFormatError("target and prediction row counts differ (" +
                                       std::to_string(targets.size()) + " vs " +
                                       std::to_string(preds.size()) + ")");
    impress::Tensor<double> t({static_cast<int>(order.size()), 5});
    impress::Tensor<double> p({static_cast<int>(order.size()), 5});
    for (size_t i = 0; i < order.size(); ++i) {
        const auto it = preds.find(order[i]);
        if (it == preds.end())
            throw impress::DataFormatError(predictions_path + ": missing video_id '" + order[i] +
                                           "'");
        for (int j = 0; j < 5; ++j) {
            t[i * 5 + j] = targets.at(order[i])[j];
            p[i * 5 + j] = it->second[j];
        }
    }
    const impress::MetricReport rep = impress::mean_average_accuracy(t, p);
    const char* names[5] = {"extraversion", "agreeableness", "conscientiousness", "neuroticism",
                            "openness"};
    json out{{"videos", rep.videos}};
    json acc;
    for (int j = 0; j < 5; ++j) acc[names[j]] = rep.average_accuracy[j];
    out["average_accuracy"] = acc;
    out["mean_average_accuracy"] = rep.mean_average_accuracy;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

int cmd_gradcheck(int seeds, int model_seeds, double eps, double tol) {
    echo_config({{"subcommand", "gradcheck"},
                 {"seeds", seeds},
                 {"model_seeds", model_seeds},
                 {"eps", eps},
                 {"tol", tol}});
    std::vector<impress::GradCheckCase> cases = impress::run_layer_gradchecks(seeds, eps);
    {
        impress::Conv3dModel<double> m(impress::Conv3dArch::tiny());
        cases.push_back(impress::run_model_gradcheck("model_conv3d", m, model_seeds, eps, tol));
    }
    {
        impress::LstmModel<double> m(impress::LstmArch::tiny());
        cases.push_back(impress::run_model_gradcheck("model_lstm", m, model_seeds, eps, tol));
    }
    bool ok = true;
    for (const auto& c : cases) {
        const bool pass = c.report.within(tol);
        ok = ok && pass;
        std::printf("%-14s %-4s max_rel_err %.3e over %zu entries%s%s\n", c.name.c_str(),
                    pass ? "ok" : "FAIL", c.report.max_rel_error, c.report.checked,
                    pass ? "" : " worst at ", pass ? "" : c.report.worst_param.c_str());
    }
    return ok ? kExitOk : kExitGradFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bi-modal first-impressions pipeline"};
    app.require_subcommand(1);

    std::string audio_path, out_path, manifest, checkpoint, config_path, arch;
    std::string targets_path, predictions_path;
    int partitions = 6, videos = 20, k = 10, seeds = 20, model_seeds = 3;
    uint64_t seed = 0;
    double eps = 1e-5, tol = 1e-4;
    impress::TrainerConfig tc;

    auto* extract = app.add_subcommand("extract-audio-features",
                                       "write the N x 68 partition feature matrix as CSV");
    extract->add_option("audio", audio_path, "input WAV (PCM-16)")->required();
    extract->add_option("--out", out_path, "output CSV path (default: stdout)");
    extract->add_option("--partitions", partitions, "partition count")->capture_default_str();

    auto* synth = app.add_subcommand("synth-data", "generate a synthetic trait-encoded dataset");
    synth->add_option("--out", out_path, "output directory")->required();
    synth->add_option("--videos", videos, "number of videos")->capture_default_str();
    synth->add_option("--seed", seed, "generator seed")->capture_default_str();

    auto* train = app.add_subcommand("train", "train a model on a manifest");
    train->add_option("--manifest", manifest, "dataset manifest CSV")->required();
    train->add_option("--out", out_path, "output directory for checkpoints and the MSE curve")
        ->required();
    auto* train_arch = train->add_option("--arch", arch, "conv3d or lstm");
    auto* train_epochs = train->add_option("--epochs", tc.epochs, "training epochs");
    auto* train_seed = train->add_option("--seed", seed, "base seed");
    train->add_option("--config", config_path, "JSON file mirroring the trainer config fields");

    auto* predict = app.add_subcommand("predict", "write stochastic averaged predictions as CSV");
    predict->add_option("--manifest", manifest, "dataset manifest CSV")->required();
    predict->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    predict->add_option("--out", out_path, "output CSV path")->required();
    predict->add_option("--arch", arch, "conv3d or lstm (default: from the checkpoint)");
    predict->add_option("--k-combinations", k, "frame combinations averaged per video")->capture_default_str();
    predict->add_option("--seed", seed, "sampling seed")->capture_default_str();
    predict->add_option("--partitions", partitions, "partition count")->capture_default_str();

    auto* evaluate = app.add_subcommand("evaluate", "score predictions against targets");
    evaluate->add_option("--targets", targets_path, "ground-truth CSV (video_id,e,a,c,n,o)")
        ->required();
    evaluate->add_option("--predictions", predictions_path, "prediction CSV (same schema)")
        ->required();

    auto* gradcheck = app.add_subcommand("gradcheck",
                                         "finite-difference check of every layer and both models");
    gradcheck->add_option("--seeds", seeds, "random seeds per layer")->capture_default_str();
    gradcheck->add_option("--model-seeds", model_seeds, "seeds for the downsized full models")->capture_default_str();
    gradcheck->add_option("--eps", eps, "central-difference step")->capture_default_str();
    gradcheck->add_option("--tol", tol, "relative-error tolerance")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (extract->parsed()) return cmd_extract(audio_path, out_path, partitions);
        if (synth->parsed()) return cmd_synth(out_path, videos, seed);
        if (train->parsed()) {
            if (!config_path.empty()) apply_config_file(tc, config_path);
            if (train_arch->count()) tc.architecture = arch;
            if (train_epochs->count()) tc.epochs = static_cast<int>(train_epochs->as<int>());
            if (train_seed->count()) tc.base_seed = seed;
            return cmd_train(manifest, out_path, tc);
        }
        if (predict->parsed())
            return cmd_predict(checkpoint, manifest, out_path, arch, k, seed, partitions);
        if (evaluate->parsed()) return cmd_evaluate(targets_path, predictions_path);
        if (gradcheck->parsed()) return cmd_gradcheck(seeds, model_seeds, eps, tol);
    } catch (const impress::MissingInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoInput;
    } catch (const impress::DataFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataErr;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
