// Command-line front end: data generation, two-stage training, retrieval
// evaluation, free-text queries, attention export, and the gradient-check
// self-test. All outputs are files; every command is deterministic given its
// flags and seed.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "san/ablation.hpp"
#include "san/checkpoint.hpp"
#include "san/gradsuite.hpp"
#include "san/image_io.hpp"
#include "san/pipeline.hpp"
#include "san/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CliConfig {
    san::training::TrainConfig train;
    std::string negative_mode = "sum-all";
    std::string variant = "FV+FT(G-S)";
    double split_train = 0.8, split_val = 0.1, split_test = 0.1;
    std::string data_dir, checkpoint_path, out_dir = ".";
};

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& scope) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw san::ConfigError("config: unknown key '" + scope + key + "'");
    }
}

void apply_config_file(CliConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw san::DataError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw san::ConfigError("config: " + std::string(e.what()));
    }
    reject_unknown(j, {"seed", "stage1", "stage2", "margin", "negative_mode", "variant",
                       "model", "split", "paths"}, "");
    if (j.contains("seed")) cfg.train.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("stage1")) {
        const auto& s = j["stage1"];
        reject_unknown(s, {"lr", "batch", "iterations"}, "stage1.");
        if (s.contains("lr")) cfg.train.stage1.lr = s["lr"].get<double>();
        if (s.contains("batch")) cfg.train.stage1.batch = s["batch"].get<std::size_t>();
        if (s.contains("iterations"))
            cfg.train.stage1.iterations = s["iterations"].get<std::size_t>();
    }
    if (j.contains("stage2")) {
        const auto& s = j["stage2"];
        reject_unknown(s, {"lr", "batch", "epochs"}, "stage2.");
        if (s.contains("lr")) cfg.train.stage2.lr = s["lr"].get<double>();
        if (s.contains("batch")) cfg.train.stage2.batch = s["batch"].get<std::size_t>();
        if (s.contains("epochs")) cfg.train.stage2.epochs = s["epochs"].get<std::size_t>();
    }
    if (j.contains("margin")) cfg.train.margin.margin = j["margin"].get<double>();
    if (j.contains("negative_mode")) cfg.negative_mode = j["negative_mode"].get<std::string>();
    if (j.contains("variant")) cfg.variant = j["variant"].get<std::string>();
    if (j.contains("model")) {
        const auto& m = j["model"];
        reject_unknown(m, {"image_size", "k", "emb_dim", "d", "max_len"}, "model.");
        if (m.contains("image_size"))
            cfg.train.model.image_size = m["image_size"].get<std::size_t>();
        if (m.contains("k")) cfg.train.model.k = m["k"].get<std::size_t>();
        if (m.contains("emb_dim")) cfg.train.model.emb_dim = m["emb_dim"].get<std::size_t>();
        if (m.contains("d")) cfg.train.model.encoder_channels[2] = m["d"].get<std::size_t>();
        if (m.contains("max_len")) cfg.train.model.max_len = m["max_len"].get<std::size_t>();
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        reject_unknown(s, {"train", "val", "test"}, "split.");
        if (s.contains("train")) cfg.split_train = s["train"].get<double>();
        if (s.contains("val")) cfg.split_val = s["val"].get<double>();
        if (s.contains("test")) cfg.split_test = s["test"].get<double>();
    }
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        reject_unknown(p, {"data_dir", "checkpoint", "out_dir"}, "paths.");
        if (p.contains("data_dir")) cfg.data_dir = p["data_dir"].get<std::string>();
        if (p.contains("checkpoint")) cfg.checkpoint_path = p["checkpoint"].get<std::string>();
        if (p.contains("out_dir")) cfg.out_dir = p["out_dir"].get<std::string>();
    }
}

void finalize(CliConfig& cfg) {
    if (cfg.negative_mode == "sum-all")
        cfg.train.margin.mode = san::objective::NegativeMode::SumAll;
    else if (cfg.negative_mode == "hardest")
        cfg.train.margin.mode = san::objective::NegativeMode::Hardest;
    else
        throw san::ConfigError("config: negative_mode must be 'sum-all' or 'hardest'");
    cfg.train.variant = san::model::parse_variant(cfg.variant);
}

json effective_config(const CliConfig& cfg) {
    return json{
        {"seed", cfg.train.seed},
        {"stage1", {{"lr", cfg.train.stage1.lr}, {"batch", cfg.train.stage1.batch},
                    {"iterations", cfg.train.stage1.iterations}}},
        {"stage2", {{"lr", cfg.train.stage2.lr}, {"batch", cfg.train.stage2.batch},
                    {"epochs", cfg.train.stage2.epochs}}},
        {"margin", cfg.train.margin.margin},
        {"negative_mode", cfg.negative_mode},
        {"variant", cfg.variant},
        {"model", {{"image_size", cfg.train.model.image_size}, {"k", cfg.train.model.k},
                   {"emb_dim", cfg.train.model.emb_dim}, {"d", cfg.train.model.d()},
                   {"max_len", cfg.train.model.max_len}}},
        {"split", {{"train", cfg.split_train}, {"val", cfg.split_val},
                   {"test", cfg.split_test}}},
        {"paths", {{"data_dir", cfg.data_dir}, {"checkpoint", cfg.checkpoint_path},
                   {"out_dir", cfg.out_dir}}}};
}

void echo_config(const CliConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    std::ofstream out(fs::path(cfg.out_dir) / "effective_config.json");
    out << effective_config(cfg).dump(2) << "\n";
}

std::vector<san::datasets::Sample> load_corpus(const std::string& data_dir) {
    if (data_dir.empty()) throw san::UsageError("missing --data / paths.data_dir");
    return san::datasets::load_manifest((fs::path(data_dir) / "manifest.jsonl").string());
}

std::vector<std::string> caption_pool(const std::vector<san::datasets::Sample>& samples,
                                      const std::vector<std::size_t>& indices) {
    std::vector<std::string> captions;
    for (std::size_t i : indices)
        for (const auto& c : samples[i].captions) captions.push_back(c);
    return captions;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw san::DataError("cannot write " + path.string());
    out << content;
}

int cmd_gen_data(std::uint64_t seed, std::size_t n, std::size_t image_size,
                 std::size_t captions, const std::string& out) {
    san::datasets::GeneratorOptions opts;
    opts.n_samples = n;
    opts.image_size = image_size;
    opts.captions_per_image = captions;
    std::string manifest = san::datasets::generate_corpus(out, seed, opts);
    std::cout << "wrote " << manifest << " (" << n << " samples)\n";
    return kExitOk;
}

int cmd_train(CliConfig cfg, int stage) {
    finalize(cfg);
    echo_config(cfg);
    auto samples = load_corpus(cfg.data_dir);
    auto split = san::datasets::split(samples.size(), cfg.split_train, cfg.split_val,
                                      cfg.split_test, cfg.train.seed);
    auto vocab = san::text::Vocabulary::build(caption_pool(samples, split.train));
    cfg.train.model.vocab_size = vocab.size();

    san::ParamStore params;
    if (stage == 2 && !cfg.checkpoint_path.empty()) {
        auto loaded = san::checkpoint::load(cfg.checkpoint_path);
        params = std::move(loaded.params);
        vocab = std::move(loaded.vocab);
        cfg.train.model.vocab_size = vocab.size();
    } else {
        san::model::register_all(params, cfg.train.model, cfg.train.seed);
    }

    fs::path out_dir(cfg.out_dir);
    if (stage != 2) {
        auto losses = san::training::train_stage1(params, cfg.train, samples, split.train);
        std::string csv = "iteration,loss\n";
        for (std::size_t i = 0; i < losses.size(); ++i)
            csv += std::to_string(i) + "," + std::to_string(losses[i]) + "\n";
        write_text(out_dir / "stage1_loss.csv", csv);
        san::checkpoint::save((out_dir / "stage1.ckpt").string(), params, vocab);
        std::cout << "stage 1 done: final loss " << losses.back() << "\n";
    }
    if (stage != 1) {
        std::string csv = "epoch,loss,val_sR@1,val_iR@1\n";
        auto on_epoch = [&](std::size_t epoch, double loss) {
            std::string row = std::to_string(epoch) + "," + std::to_string(loss);
            if (!split.val.empty()) {
                auto ranks = san::pipeline::evaluate(params, cfg.train.model, samples,
                                                     split.val, vocab, cfg.train.variant);
                row += "," +
                       std::to_string(san::evaluation::recall_at_k(ranks.image_to_text_rank, 1)) +
                       "," +
                       std::to_string(san::evaluation::recall_at_k(ranks.text_to_image_rank, 1));
            } else {
                row += ",,";
            }
            csv += row + "\n";
            return false;
        };
        san::training::train_stage2(params, cfg.train, samples, split.train, vocab, on_epoch);
        write_text(out_dir / "stage2_loss.csv", csv);
        san::checkpoint::save((out_dir / "stage2.ckpt").string(), params, vocab);
        auto ranks = san::pipeline::evaluate(params, cfg.train.model, samples, split.train,
                                             vocab, cfg.train.variant);
        std::cout << "stage 2 done: train R@1 sentence-retrieval "
                  << san::evaluation::recall_at_k(ranks.image_to_text_rank, 1)
                  << ", image-retrieval "
                  << san::evaluation::recall_at_k(ranks.text_to_image_rank, 1) << "\n";
    }
    return kExitOk;
}

int cmd_eval(CliConfig cfg, bool ablate) {
    finalize(cfg);
    echo_config(cfg);
    auto samples = load_corpus(cfg.data_dir);
    auto split = san::datasets::split(samples.size(), cfg.split_train, cfg.split_val,
                                      cfg.split_test, cfg.train.seed);
    const auto& eval_set = split.test.empty() ? split.train : split.test;
    fs::path out_dir(cfg.out_dir);

    if (ablate) {
        auto vocab = san::text::Vocabulary::build(caption_pool(samples, split.train));
        cfg.train.model.vocab_size = vocab.size();
        std::vector<std::string> variants = {"GV+GT", "SV+GT", "FV+GT",
                                             "GV+ST", "SV+ST", "FV+ST",
                                             "GV+FT(G-S)", "SV+FT(G-S)", "FV+FT(G-S)"};
        auto entries = san::ablation::run(variants, cfg.train, samples, split.train, eval_set,
                                          vocab, {cfg.train.seed});
        std::string csv = san::evaluation::report_csv_header() + "\n";
        std::vector<std::pair<std::string, san::evaluation::RetrievalReport>> rows;
        for (const auto& e : entries) {
            csv += san::evaluation::report_csv_row(e.variant, e.mean_report) + "\n";
            rows.emplace_back(e.variant, e.mean_report);
        }
        write_text(out_dir / "ablation.csv", csv);
        std::cout << san::evaluation::report_table(rows);
        return kExitOk;
    }

    if (cfg.checkpoint_path.empty()) throw san::UsageError("missing --checkpoint");
    auto loaded = san::checkpoint::load(cfg.checkpoint_path);
    cfg.train.model.vocab_size = loaded.vocab.size();
    auto ranks = san::pipeline::evaluate(loaded.params, cfg.train.model, samples, eval_set,
                                         loaded.vocab, cfg.train.variant);
    auto report = san::evaluation::report_from_ranks(ranks.image_to_text_rank,
                                                     ranks.text_to_image_rank);
    std::string csv = san::evaluation::report_csv_header() + "\n" +
                      san::evaluation::report_csv_row(cfg.variant, report) + "\n";
    write_text(out_dir / "report.csv", csv);
    std::cout << san::evaluation::report_table({{cfg.variant, report}});
    return kExitOk;
}

int cmd_retrieve(CliConfig cfg, const std::string& query, std::size_t top_k) {
    finalize(cfg);
    auto samples = load_corpus(cfg.data_dir);
    if (cfg.checkpoint_path.empty()) throw san::UsageError("missing --checkpoint");
    auto loaded = san::checkpoint::load(cfg.checkpoint_path);
    cfg.train.model.vocab_size = loaded.vocab.size();
    auto ids = san::text::tokenize(query, loaded.vocab, cfg.train.model.max_len).ids;
    std::vector<std::size_t> indices(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) indices[i] = i;
    auto scores = san::pipeline::retrieve(loaded.params, cfg.train.model, samples, indices,
                                          ids, cfg.train.variant);
    std::vector<std::size_t> order(indices);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::ostringstream lines;
    for (std::size_t r = 0; r < std::min(top_k, order.size()); ++r)
        lines << r + 1 << " " << samples[order[r]].id << " " << scores[order[r]] << "\n";
    std::cout << lines.str();
    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        std::ofstream f(cfg.out_dir + "/ranking.txt", std::ios::binary);
        f << lines.str();
    }
    return kExitOk;
}

int cmd_export_attention(CliConfig cfg, const std::string& sample_id) {
    finalize(cfg);
    auto samples = load_corpus(cfg.data_dir);
    if (cfg.checkpoint_path.empty()) throw san::UsageError("missing --checkpoint");
    auto loaded = san::checkpoint::load(cfg.checkpoint_path);
    cfg.train.model.vocab_size = loaded.vocab.size();
    const san::datasets::Sample* sample = nullptr;
    for (const auto& s : samples)
        if (s.id == sample_id) sample = &s;
    if (!sample) throw san::DataError("export-attention: unknown sample id " + sample_id);

    fs::create_directories(cfg.out_dir);
    fs::path out_dir(cfg.out_dir);
    san::Graph g(&loaded.params);
    auto img = san::model::embed_image(g, g.input(sample->image), cfg.train.model);

    san::Var heat = g.sigmoid(img.s1);
    san::image_io::write_pgm((out_dir / (sample_id + "_saliency.pgm")).string(),
                             g.value(heat));

    const auto& weights = g.value(img.weights);
    std::size_t grid = cfg.train.model.grid();
    std::string av_csv;
    for (std::size_t i = 0; i < grid; ++i) {
        for (std::size_t j = 0; j < grid; ++j) {
            if (j) av_csv += ",";
            av_csv += std::to_string(weights[i * grid + j]);
        }
        av_csv += "\n";
    }
    write_text(out_dir / (sample_id + "_av.csv"), av_csv);

    auto seq = san::text::tokenize(sample->captions.at(0), loaded.vocab,
                                   cfg.train.model.max_len);
    auto enc = san::model::encode_sentence(g, seq.ids, cfg.train.model);
    auto att = san::model::textual_vector(g, img, enc, san::model::TextualVariant::FT);
    const auto& at = g.value(att.weights);
    std::string at_csv = "token,weight\n";
    for (std::size_t j = 0; j < seq.tokens.size(); ++j)
        at_csv += seq.tokens[j] + "," + std::to_string(at[j]) + "\n";
    write_text(out_dir / (sample_id + "_at.csv"), at_csv);
    std::cout << "wrote attention exports for " << sample_id << " to " << cfg.out_dir << "\n";
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, const std::vector<std::string>& modules) {
    auto results = san::gradsuite::run(seed, modules);
    bool ok = true;
    for (const auto& r : results) {
        bool pass = r.max_rel_err <= 1e-4;
        ok = ok && pass;
        std::cout << (pass ? "PASS" : "FAIL") << " " << r.module << " max_rel_err "
                  << r.max_rel_err << " (worst: " << r.worst_param << ")\n";
    }
    return ok ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Saliency-guided attention network for image-sentence matching"};
    app.require_subcommand(1);

    CliConfig cfg;
    std::string config_path;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t s) { seed_flag = s; seed_set = true; }, "seed override");
        sub->add_option("--data", cfg.data_dir, "corpus directory");
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--checkpoint", cfg.checkpoint_path, "checkpoint path");
        sub->add_option("--variant", cfg.variant, "ablation variant, e.g. FV+FT(G-S)");
    };

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
    std::uint64_t gen_seed = 7;
    std::size_t gen_n = 200, gen_size = 32, gen_captions = 2;
    std::string gen_out;
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--n", gen_n, "number of samples");
    gen->add_option("--image-size", gen_size, "square image size");
    gen->add_option("--captions", gen_captions, "captions per image");
    gen->add_option("--out", gen_out, "output directory")->required();

    auto* train = app.add_subcommand("train", "run the two-stage training");
    int stage = 0;
    add_common(train);
    train->add_option("--stage", stage, "restrict to stage 1 or 2")
        ->check(CLI::IsMember({1, 2}));

    auto* eval = app.add_subcommand("eval", "evaluate retrieval on the test split");
    bool ablate = false;
    add_common(eval);
    eval->add_flag("--ablate", ablate, "run the full variant grid");

    auto* retrieve = app.add_subcommand("retrieve", "rank images for a free-text query");
    std::string query;
    std::size_t top_k = 10;
    add_common(retrieve);
    retrieve->add_option("--query", query, "query sentence")->required();
    retrieve->add_option("--top", top_k, "results to print");

    auto* exp = app.add_subcommand("export-attention", "export saliency/attention maps");
    std::string sample_id;
    add_common(exp);
    exp->add_option("--sample", sample_id, "sample id")->required();

    auto* gc = app.add_subcommand("gradcheck", "finite-difference self-test");
    std::vector<std::string> gc_modules;
    std::uint64_t gc_seed = 7;
    gc->add_option("--seed", gc_seed, "seed");
    gc->add_option("--module", gc_modules, "restrict to named modules");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        if (seed_set) cfg.train.seed = seed_flag;
        if (gen->parsed()) return cmd_gen_data(gen_seed, gen_n, gen_size, gen_captions, gen_out);
        if (train->parsed()) return cmd_train(cfg, stage);
        if (eval->parsed()) return cmd_eval(cfg, ablate);
        if (retrieve->parsed()) return cmd_retrieve(cfg, query, top_k);
        if (exp->parsed()) return cmd_export_attention(cfg, sample_id);
        if (gc->parsed()) return cmd_gradcheck(gc_seed, gc_modules);
    } catch (const san::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const san::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const san::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const san::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitData;
    } catch (const san::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
