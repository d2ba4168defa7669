// Command line front end: synth | train | generate | evaluate | align.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssmp/align.hpp"
#include "ssmp/corpus.hpp"
#include "ssmp/decoder.hpp"
#include "ssmp/metrics.hpp"
#include "ssmp/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t default_seed() {
    if (const char* env = std::getenv("SSMP_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

void write_snapshot(const fs::path& dir, const std::string& command, const json& resolved) {
    json j{{"command", command}, {"config", resolved}};
    std::ofstream os(dir / "run_config.json");
    ssmp::require(static_cast<bool>(os), "cannot write run_config.json in " + dir.string());
    os << j.dump(2) << "\n";
}

std::string pair_stem(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "pair_%04d", index);
    return buf;
}

int run_synth(int pairs, ssmp::SynthConfig scfg, uint64_t seed, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<ssmp::ManifestEntry> manifest;
    for (int p = 0; p < pairs; ++p) {
        const ssmp::MovieTrailerPair pair = ssmp::synth_pair(scfg, seed + static_cast<uint64_t>(p));
        const std::string stem = pair_stem(p);
        ssmp::ManifestEntry e;
        e.id = stem;
        e.movie_path = stem + "_movie.feat";
        e.trailer_path = stem + "_trailer.feat";
        ssmp::save_features((fs::path(out_dir) / e.movie_path).string(), pair.movie);
        ssmp::save_features((fs::path(out_dir) / e.trailer_path).string(), pair.trailer);
        manifest.push_back(std::move(e));
    }
    ssmp::save_manifest((fs::path(out_dir) / "manifest.json").string(), manifest);
    write_snapshot(out_dir, "synth",
                   {{"pairs", pairs},
                    {"seed", seed},
                    {"movie_shots", scfg.movie_shots},
                    {"trailer_shots", scfg.trailer_shots},
                    {"dim", scfg.dim},
                    {"noise", scfg.noise},
                    {"clusters", scfg.clusters},
                    {"rule_seed", scfg.rule_seed}});
    std::cout << "wrote " << pairs << " pairs to " << out_dir << "\n";
    return 0;
}

std::vector<ssmp::MovieTrailerPair> load_corpus(const std::string& manifest_path) {
    const fs::path base = fs::path(manifest_path).parent_path();
    std::vector<ssmp::MovieTrailerPair> corpus;
    for (const auto& e : ssmp::load_manifest(manifest_path)) {
        ssmp::MovieTrailerPair pair;
        pair.id = e.id;
        pair.movie = ssmp::load_features((base / e.movie_path).string());
        pair.trailer = ssmp::load_features((base / e.trailer_path).string());
        ssmp::require(pair.movie.cols == pair.trailer.cols,
                      "corpus pair " + e.id + ": feature width mismatch");
        pair.truth = ssmp::ground_truth(pair.movie, pair.trailer);
        corpus.push_back(std::move(pair));
    }
    ssmp::require(!corpus.empty(), "empty corpus manifest: " + manifest_path);
    return corpus;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SSMP: masked-prediction trailer sequence assembler"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    int pairs = 10;
    uint64_t seed = default_seed();
    std::string out_dir = "corpus";
    ssmp::SynthConfig scfg;
    synth->add_option("--pairs", pairs, "number of movie/trailer pairs");
    synth->add_option("--seed", seed, "base seed");
    synth->add_option("--out", out_dir, "output directory");
    synth->add_option("--movie-shots", scfg.movie_shots, "shots per movie (I)");
    synth->add_option("--trailer-shots", scfg.trailer_shots, "shots per trailer (J)");
    synth->add_option("--dim", scfg.dim, "feature dimension (D)");
    synth->add_option("--noise", scfg.noise, "trailer perturbation sigma");
    synth->add_option("--clusters", scfg.clusters, "latent event clusters");
    synth->add_option("--rule-seed", scfg.rule_seed, "corpus-wide planted rule seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model on a corpus");
    std::string manifest_path, train_out = "run";
    ssmp::EncoderConfig ecfg;
    ssmp::TrainConfig tcfg;
    std::string loss_name = "ce", sched_name = "self_paced";
    uint64_t train_seed = default_seed();
    bool no_monotone = false;
    train_cmd->add_option("--manifest", manifest_path, "corpus manifest")->required();
    train_cmd->add_option("--out", train_out, "output directory");
    train_cmd->add_option("--layers", ecfg.layers, "encoder layers");
    train_cmd->add_option("--heads", ecfg.heads, "attention heads");
    train_cmd->add_option("--dim", ecfg.dim, "model width");
    train_cmd->add_option("--ffn-width", ecfg.ffn_width, "feed-forward width");
    train_cmd->add_option("--epochs", tcfg.epochs, "training epochs");
    train_cmd->add_option("--batch", tcfg.batch_size, "batch size");
    train_cmd->add_option("--max-steps", tcfg.max_steps, "hard step cap (0 = off)");
    train_cmd->add_option("--lr", tcfg.lr, "peak learning rate");
    train_cmd->add_option("--weight-decay", tcfg.weight_decay, "decoupled weight decay");
    train_cmd->add_option("--warmup", tcfg.warmup_ratio, "warmup ratio");
    train_cmd->add_option("--lr-schedule", tcfg.lr_schedule, "cosine | constant");
    train_cmd->add_option("--loss", loss_name, "ce | mse");
    train_cmd->add_option("--scheduler", sched_name,
                          "self_paced | random | linear_inc | linear_dec");
    train_cmd->add_flag("--no-monotone", no_monotone, "disable the monotonicity constraint");
    train_cmd->add_option("--mu-a", tcfg.sched_hyper.mu_a, "accuracy momentum");
    train_cmd->add_option("--mu-t", tcfg.sched_hyper.mu_t, "ratio momentum");
    train_cmd->add_option("--beta", tcfg.sched_hyper.beta, "sigmoid sharpness");
    train_cmd->add_option("--t-min", tcfg.sched_hyper.t_min, "minimum mask ratio");
    train_cmd->add_option("--t-max", tcfg.sched_hyper.t_max, "maximum mask ratio");
    train_cmd->add_option("--seed", train_seed, "training seed");

    // generate
    auto* gen = app.add_subcommand("generate", "decode trailers from a trained model");
    std::string ckpt_path, gen_manifest, gen_movie, gen_out = "decode";
    int gen_j = 0, k_max = 64;
    std::string gen_mode = "self_corrective";
    uint64_t gen_seed = default_seed();
    gen->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    gen->add_option("--manifest", gen_manifest, "decode every pair of a manifest");
    gen->add_option("--movie", gen_movie, "decode a single movie feature file");
    gen->add_option("--j", gen_j, "trailer length override");
    gen->add_option("--mode", gen_mode, "self_corrective | greedy");
    gen->add_option("--seed", gen_seed, "decode seed");
    gen->add_option("--k-max", k_max, "iteration guard");
    gen->add_option("--out", gen_out, "output directory");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "decode and score against ground truth");
    std::string eval_ckpt, eval_manifest, eval_out = "eval";
    std::string eval_mode = "self_corrective";
    int radius = 0, eval_kmax = 64;
    uint64_t eval_seed = default_seed();
    eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    eval->add_option("--manifest", eval_manifest, "corpus manifest")->required();
    eval->add_option("--out", eval_out, "output directory");
    eval->add_option("--mode", eval_mode, "self_corrective | greedy");
    eval->add_option("--radius", radius, "allowable positional deviation R");
    eval->add_option("--seed", eval_seed, "decode seed");
    eval->add_option("--k-max", eval_kmax, "iteration guard");

    // align
    auto* align_cmd = app.add_subcommand("align", "narration-to-shot alignment DP");
    std::string problem_path, align_out = "alignment.json";
    align_cmd->add_option("--problem", problem_path, "problem JSON")->required();
    align_cmd->add_option("--out", align_out, "output JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return run_synth(pairs, scfg, seed, out_dir);

        if (*train_cmd) {
            tcfg.loss = ssmp::loss_mode_from_string(loss_name);
            tcfg.scheduler = ssmp::scheduler_mode_from_string(sched_name);
            tcfg.monotone = !no_monotone;
            tcfg.seed = train_seed;
            const auto corpus = load_corpus(manifest_path);
            fs::create_directories(train_out);
            const ssmp::TrainResult result = ssmp::train(corpus, ecfg, tcfg);
            ssmp::save_checkpoint((fs::path(train_out) / "checkpoint.ssmp").string(),
                                  result.params);
            ssmp::save_curves((fs::path(train_out) / "curves.csv").string(), result.curves);
            ssmp::save_scheduler_trajectory((fs::path(train_out) / "scheduler.csv").string(),
                                            result.curves);
            write_snapshot(train_out, "train",
                           {{"manifest", manifest_path}, {"layers", ecfg.layers},
                            {"heads", ecfg.heads}, {"dim", ecfg.dim},
                            {"ffn_width", ecfg.ffn_width}, {"epochs", tcfg.epochs},
                            {"batch", tcfg.batch_size}, {"max_steps", tcfg.max_steps},
                            {"lr", tcfg.lr}, {"weight_decay", tcfg.weight_decay},
                            {"warmup", tcfg.warmup_ratio}, {"lr_schedule", tcfg.lr_schedule},
                            {"loss", loss_name}, {"scheduler", sched_name},
                            {"monotone", tcfg.monotone}, {"seed", train_seed}});
            const auto& last = result.curves.rows.back();
            std::cout << "trained " << result.curves.rows.size() << " steps, final loss "
                      << last.loss << ", accuracy " << last.accuracy << ", mask ratio "
                      << last.mask_ratio << "\n";
            return 0;
        }

        if (*gen) {
            ssmp::require(gen_manifest.empty() != gen_movie.empty(),
                          "generate: pass exactly one of --manifest or --movie");
            const ssmp::ModelParams params = ssmp::load_checkpoint(ckpt_path);
            const ssmp::DecodeMode mode = ssmp::decode_mode_from_string(gen_mode);
            fs::create_directories(gen_out);
            auto decode_one = [&](const std::string& id, const ssmp::Matrix& movie, int J) {
                const ssmp::DecodeResult r = ssmp::decode(params, movie, J, mode, gen_seed, k_max);
                ssmp::DecodeOutput out;
                out.movie_id = id;
                out.trailer_shots = J;
                out.mode = mode;
                out.seed = gen_seed;
                for (int z : r.indices) out.indices.push_back(z + 1);
                out.filled_after_iter = r.filled_after_iter;
                ssmp::save_decode_output((fs::path(gen_out) / (id + "_decode.json")).string(),
                                         out);
            };
            if (!gen_movie.empty()) {
                ssmp::require(gen_j >= 1, "generate: --movie requires --j");
                decode_one(fs::path(gen_movie).stem().string(),
                           ssmp::load_features(gen_movie), gen_j);
            } else {
                const fs::path base = fs::path(gen_manifest).parent_path();
                for (const auto& e : ssmp::load_manifest(gen_manifest)) {
                    const ssmp::Matrix movie =
                        ssmp::load_features((base / e.movie_path).string());
                    int J = gen_j;
                    if (J < 1 && !e.music_boundaries.empty())
                        J = ssmp::trailer_length_from_segments(e.music_boundaries);
                    if (J < 1)
                        J = ssmp::load_features((base / e.trailer_path).string()).rows;
                    decode_one(e.id, movie, J);
                }
            }
            write_snapshot(gen_out, "generate",
                           {{"checkpoint", ckpt_path}, {"manifest", gen_manifest},
                            {"movie", gen_movie}, {"j", gen_j}, {"mode", gen_mode},
                            {"seed", gen_seed}, {"k_max", k_max}});
            return 0;
        }

        if (*eval) {
            const ssmp::ModelParams params = ssmp::load_checkpoint(eval_ckpt);
            const ssmp::DecodeMode mode = ssmp::decode_mode_from_string(eval_mode);
            const auto corpus = load_corpus(eval_manifest);
            fs::create_directories(eval_out);
            std::vector<ssmp::MetricReport> reports;
            for (const auto& pair : corpus) {
                const ssmp::DecodeResult r = ssmp::decode(params, pair.movie, pair.trailer.rows,
                                                          mode, eval_seed, eval_kmax);
                ssmp::IndexSequence pred, truth;
                for (int z : r.indices) pred.push_back(z + 1);
                for (int l : pair.truth.labels) truth.push_back(l + 1);
                reports.push_back(ssmp::evaluate_pair(pair.id, pred, truth, radius));
            }
            ssmp::save_metric_json((fs::path(eval_out) / "report.json").string(), reports);
            ssmp::save_metric_csv((fs::path(eval_out) / "report.csv").string(), reports);
            write_snapshot(eval_out, "evaluate",
                           {{"checkpoint", eval_ckpt}, {"manifest", eval_manifest},
                            {"mode", eval_mode}, {"radius", radius}, {"seed", eval_seed},
                            {"k_max", eval_kmax}});
            double f1 = 0.0;
            for (const auto& rep : reports) f1 += rep.f1;
            std::cout << "mean F1 over " << reports.size() << " pairs: "
                      << f1 / static_cast<double>(reports.size()) << "\n";
            return 0;
        }

        if (*align_cmd) {
            const ssmp::Alignment a = ssmp::align_narrations(
                ssmp::load_alignment_problem(problem_path));
            ssmp::save_alignment(align_out, a);
            std::cout << "aligned " << a.assignments.size() << " narrations, score " << a.score
                      << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
