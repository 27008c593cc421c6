#include "sail/checkpoint.hpp"
#include "sail/databench.hpp"
#include "sail/error.hpp"
#include "sail/eval.hpp"
#include "sail/gradcheck.hpp"
#include "sail/kernels.hpp"
#include "sail/model.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace sail;

namespace {

constexpr int exit_check_failed = 8;
constexpr int exit_internal = 1;

template <class... Args>
void log(const char* fmt, Args... args) {
    std::fprintf(stderr, "[sail] ");
    std::fprintf(stderr, fmt, args...);
    std::fputc('\n', stderr);
}

struct SweepSpec {
    std::vector<std::size_t> layers;
    bool ablations = false;
};

struct GradcheckSpec {
    std::size_t frames = 6;
    std::size_t regions = 3;
    double step = 1e-4;
    double tolerance = 1e-4;
};

// Fully resolved run configuration; persisted as config.json next to the outputs.
struct RunConfig {
    std::uint64_t seed = 7;
    std::string data;  // corpus file or directory; empty synthesizes from `generator`
    std::string checkpoint;
    std::string split = "test";
    std::string baseline = "none";
    std::size_t random_draws = 10000;
    std::string sample;
    SweepSpec sweep;
    GradcheckSpec gradcheck;
    SailConfig model;
    GeneratorConfig generator;
    FlpConfig flp;
};

ordered_json to_json(const RunConfig& r) {
    return {{"seed", r.seed},
            {"data", r.data},
            {"checkpoint", r.checkpoint},
            {"split", r.split},
            {"baseline", r.baseline},
            {"random_draws", r.random_draws},
            {"sample", r.sample},
            {"sweep", {{"layers", r.sweep.layers}, {"ablations", r.sweep.ablations}}},
            {"gradcheck",
             {{"frames", r.gradcheck.frames}, {"regions", r.gradcheck.regions}, {"step", r.gradcheck.step}, {"tolerance", r.gradcheck.tolerance}}},
            {"model", sail::to_json(r.model)},
            {"generator", sail::to_json(r.generator)},
            {"flp", sail::to_json(r.flp)}};
}

void check_keys(const nlohmann::json& given, const ordered_json& known, const std::string& where) {
    require(given.is_object(), ErrorKind::config, "config" + where + " must be a JSON object");
    for (const auto& [key, value] : given.items()) {
        require(known.contains(key), ErrorKind::config, "config: unknown key '" + where + (where.empty() ? "" : ".") + key + "'");
        if (known.at(key).is_object() && key != "model" && key != "generator" && key != "flp")
            check_keys(value, known.at(key), where + (where.empty() ? "" : ".") + key);
    }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig r;
    check_keys(j, to_json(r), "");
    try {
        read(j, "seed", r.seed);
        read(j, "data", r.data);
        read(j, "checkpoint", r.checkpoint);
        read(j, "split", r.split);
        read(j, "baseline", r.baseline);
        read(j, "random_draws", r.random_draws);
        read(j, "sample", r.sample);
        if (j.contains("sweep")) {
            read(j.at("sweep"), "layers", r.sweep.layers);
            read(j.at("sweep"), "ablations", r.sweep.ablations);
        }
        if (j.contains("gradcheck")) {
            const auto& g = j.at("gradcheck");
            read(g, "frames", r.gradcheck.frames);
            read(g, "regions", r.gradcheck.regions);
            read(g, "step", r.gradcheck.step);
            read(g, "tolerance", r.gradcheck.tolerance);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("config: ") + e.what());
    }
    if (j.contains("model")) r.model = sail_config_from_json(j.at("model"));
    if (j.contains("generator")) r.generator = generator_config_from_json(j.at("generator"));
    if (j.contains("flp")) r.flp = flp_config_from_json(j.at("flp"));
    require(r.split == "train" || r.split == "valid" || r.split == "test", ErrorKind::config, "config: split must be train, valid or test");
    require(r.baseline == "none" || r.baseline == "random" || r.baseline == "flp", ErrorKind::config,
            "config: baseline must be none, random or flp");
    require(r.random_draws >= 1, ErrorKind::config, "config: random_draws must be positive");
    require(r.gradcheck.frames >= 1 && r.gradcheck.regions >= 1, ErrorKind::config, "config: gradcheck sizes must be positive");
    // The run seed drives every component.
    r.model.seed = r.seed;
    r.flp.seed = r.seed;
    return r;
}

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::format, path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot write " + path.string());
    out << text;
    out.flush();
    require(out.good(), ErrorKind::io, "write failed for " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void set_path(nlohmann::json& doc, const std::string& dotted, const nlohmann::json& value) {
    nlohmann::json* node = &doc;
    std::stringstream ss(dotted);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    require(!parts.empty() && !dotted.empty(), ErrorKind::config, "--set needs key=value");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    (*node)[parts.back()] = value;
}

std::vector<std::size_t> parse_layers(const std::string& text) {
    std::vector<std::size_t> out;
    try {
        if (const auto dots = text.find(".."); dots != std::string::npos) {
            const std::size_t lo = std::stoul(text.substr(0, dots)), hi = std::stoul(text.substr(dots + 2));
            require(lo >= 1 && lo <= hi, ErrorKind::config, "--layers range must satisfy 1 <= lo <= hi");
            for (std::size_t l = lo; l <= hi; ++l) out.push_back(l);
        } else {
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
        }
    } catch (const std::logic_error&) {
        fail(ErrorKind::config, "--layers expects lo..hi or a comma list, got '" + text + "'");
    }
    require(!out.empty(), ErrorKind::config, "--layers is empty");
    return out;
}

// Command-line state shared by every subcommand.
struct Cli {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    int threads = 1;
    std::vector<std::string> sets;

    std::optional<std::size_t> layers, window, heads, batch, epochs;
    std::optional<double> lr;
    bool no_rs = false, no_ml = false, no_ls = false, no_ba = false;
    std::optional<std::string> decode;

    std::optional<std::string> data, checkpoint, split, baseline, sample, layer_range;
    bool ablations = false;
    bool micro = false;
};

void add_common(CLI::App* app, Cli& cli) {
    app->add_option("--config", cli.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--seed", cli.seed, "run seed");
    app->add_option("--out", cli.out, "output directory")->capture_default_str();
    app->add_option("--threads", cli.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--set", cli.sets, "override a config key, e.g. model.d_attn=16");
}

void add_model_flags(CLI::App* app, Cli& cli, bool with_layers) {
    if (with_layers) app->add_option("--layers", cli.layers, "encoder layers");
    app->add_option("--window", cli.window, "local attention half-window");
    app->add_option("--heads", cli.heads, "attention heads");
    app->add_option("--lr", cli.lr, "learning rate");
    app->add_option("--batch", cli.batch, "mini-batch size");
    app->add_option("--epochs", cli.epochs, "training epochs");
    app->add_flag("--no-rs", cli.no_rs, "disable region self-attention");
    app->add_flag("--no-ml", cli.no_ml, "cross-attention in the last layer only");
    app->add_flag("--no-ls", cli.no_ls, "global instead of local self-attention");
    app->add_flag("--no-ba", cli.no_ba, "forward context only");
    app->add_option("--decode", cli.decode, "independent|constrained")->check(CLI::IsMember({"independent", "constrained"}));
}

void add_data_flag(CLI::App* app, Cli& cli) { app->add_option("--data", cli.data, "corpus file or directory (default: synthesize)"); }

RunConfig resolve(const Cli& cli) {
    nlohmann::json doc = nlohmann::json::object();
    if (!cli.config_path.empty()) doc = read_json_file(cli.config_path);
    require(doc.is_object(), ErrorKind::config, "config file must hold a JSON object");
    for (const auto& s : cli.sets) {
        const auto eq = s.find('=');
        require(eq != std::string::npos && eq > 0, ErrorKind::config, "--set expects key=value, got '" + s + "'");
        const std::string raw = s.substr(eq + 1);
        nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        set_path(doc, s.substr(0, eq), value);
    }
    auto& model = doc["model"];
    if (model.is_null()) model = nlohmann::json::object();
    if (cli.micro) {
        model["d_frame"] = model["d_region"] = model["d_global"] = model["d_model"] = model["d_attn"] = 8;
        model["heads"] = 2;
        model["layers"] = 1;
        model["window"] = 2;
        model["d_ff"] = 16;
    }
    if (cli.layers) model["layers"] = *cli.layers;
    if (cli.window) model["window"] = *cli.window;
    if (cli.heads) model["heads"] = *cli.heads;
    if (cli.lr) model["lr"] = *cli.lr;
    if (cli.batch) model["batch"] = *cli.batch;
    if (cli.epochs) model["epochs"] = *cli.epochs;
    if (cli.no_rs) model["no_region_self_attention"] = true;
    if (cli.no_ml) model["no_multilevel_cross"] = true;
    if (cli.no_ls) model["no_local_attention"] = true;
    if (cli.no_ba) model["no_bidirectional"] = true;
    if (cli.decode) model["decode"] = *cli.decode;
    if (cli.seed) doc["seed"] = *cli.seed;
    if (cli.data) doc["data"] = *cli.data;
    if (cli.checkpoint) doc["checkpoint"] = *cli.checkpoint;
    if (cli.split) doc["split"] = *cli.split;
    if (cli.baseline) doc["baseline"] = *cli.baseline;
    if (cli.sample) doc["sample"] = *cli.sample;
    if (cli.layer_range) doc["sweep"]["layers"] = parse_layers(*cli.layer_range);
    if (cli.ablations) doc["sweep"]["ablations"] = true;
    return run_config_from_json(doc);
}

fs::path prepare_out(const Cli& cli, const RunConfig& run) {
    const fs::path out(cli.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    require(!ec && fs::is_directory(out), ErrorKind::io, "cannot create output directory " + out.string());
    write_json(out / "config.json", to_json(run));
    return out;
}

Splits load_data(const RunConfig& run) {
    if (run.data.empty()) {
        log("synthesizing corpus (seed %llu)", static_cast<unsigned long long>(run.seed));
        return synthesize(run.generator, run.seed);
    }
    fs::path path(run.data);
    if (fs::is_directory(path)) path /= "corpus.jsonl";
    log("reading %s", path.string().c_str());
    return read_corpus(path);
}

const std::vector<VideoSample>& pick_split(const Splits& s, const std::string& name) {
    if (name == "train") return s.train;
    if (name == "valid") return s.valid;
    return s.test;
}

SailModel load_for_inference(const RunConfig& run) {
    require(!run.checkpoint.empty(), ErrorKind::invalid_argument, "a checkpoint is required (--checkpoint)");
    Checkpoint ck = load_checkpoint(run.checkpoint);
    ck.config.decode = run.model.decode;
    return SailModel(ck.config, std::move(ck.params));
}

int cmd_synth(const Cli& cli, RunConfig run) {
    run.data.clear();
    const fs::path out = prepare_out(cli, run);
    const Splits splits = load_data(run);
    write_corpus(out / "corpus.jsonl", splits);
    write_json(out / "manifest.json", sail::to_json(splits.manifest));
    log("wrote %zu/%zu/%zu samples to %s", splits.train.size(), splits.valid.size(), splits.test.size(), out.string().c_str());
    return 0;
}

int cmd_train(const Cli& cli, const RunConfig& run) {
    const fs::path out = prepare_out(cli, run);
    const Splits data = load_data(run);
    TrainOptions opt;
    opt.on_epoch = [](const EpochRecord& r, const SailModel&) {
        log("epoch %zu steps %zu loss %.4f valid mIoU %.4f (%.1fs)", r.epoch, r.steps, r.train_loss, r.valid.miou, r.wall_seconds);
    };
    const auto result = train(data.train, data.valid, run.model, opt);
    save_checkpoint(out / "model.ckpt", result.model.params(), result.model.config());
    write_json(out / "train_log.json", sail::to_json(result.log));
    log("best epoch %zu valid mIoU %.4f, %.1fs total", result.log.best_epoch, result.log.best_valid_miou,
        timing_json(result.log)["total_seconds"].get<double>());
    return 0;
}

int cmd_eval(const Cli& cli, const RunConfig& run) {
    const fs::path out = prepare_out(cli, run);
    const Splits data = load_data(run);
    const auto& samples = pick_split(data, run.split);
    require(!samples.empty(), ErrorKind::invalid_argument, "split " + run.split + " is empty");
    EvalReport report;
    std::string method;
    if (run.baseline == "random") {
        method = "Random";
        report = random_baseline(samples, run.seed);
        const auto mc = random_baseline_miou(samples, run.seed, run.random_draws);
        write_json(out / "random_mc.json", {{"draws", mc.draws}, {"mean_miou", mc.mean}, {"std_error", mc.std_error}});
        log("random baseline Monte-Carlo mIoU %.4f +- %.4f over %zu draws", mc.mean, mc.std_error, mc.draws);
    } else if (run.baseline == "flp") {
        method = "FLP";
        report = flp_baseline(data.train, samples, run.flp);
    } else {
        method = "SAIL";
        report = load_for_inference(run).evaluate(samples);
    }
    write_json(out / "report.json", sail::to_json(report));
    const std::string table = render_table({{method, report}});
    write_text(out / "report.txt", table);
    std::cout << table;
    return 0;
}

VideoSample random_sample(Rng& rng, const SailConfig& cfg, std::size_t n, std::size_t m) {
    VideoSample s;
    s.id = "gradcheck";
    s.frames = Tensor::matrix(n, cfg.d_frame);
    for (auto& v : s.frames.data()) v = rng.normal();
    s.query.regions = Tensor::matrix(m, cfg.d_region);
    for (auto& v : s.query.regions.data()) v = rng.normal();
    for (std::size_t r = 0; r < m; ++r)
        s.query.boxes.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5)});
    s.query.global = Tensor::vector(std::vector<double>(cfg.d_global));
    for (auto& v : s.query.global.data()) v = rng.normal();
    const long a = rng.uniform_int(1, static_cast<long>(n)), b = rng.uniform_int(1, static_cast<long>(n));
    s.target = {std::min(a, b), std::max(a, b)};
    return s;
}

int cmd_gradcheck(const Cli& cli, const RunConfig& run) {
    const fs::path out = prepare_out(cli, run);
    SailModel model(run.model);
    Rng rng = Rng(run.seed).fork(0x67726164);
    const VideoSample sample = random_sample(rng, run.model, run.gradcheck.frames, run.gradcheck.regions);
    const auto started = std::chrono::steady_clock::now();
    const LossBuilder loss = [&](Graph& g) { return model.loss(g, sample); };
    GradCheckOptions opt;
    opt.step = run.gradcheck.step;
    opt.tolerance = run.gradcheck.tolerance;
    const auto report = grad_check(loss, model.params(), opt);
    ordered_json j{{"passed", report.passed},
                   {"finite", report.finite},
                   {"max_rel_error", report.max_rel_error},
                   {"worst_param", report.worst_param},
                   {"tolerance", opt.tolerance}};
    auto& entries = j["params"] = ordered_json::array();
    for (const auto& e : report.entries)
        entries.push_back({{"name", e.name}, {"max_rel_error", e.max_rel_error}, {"max_abs_error", e.max_abs_error}});
    write_json(out / "gradcheck.json", j);
    log("checked %zu scalars in %.2fs", model.params().scalar_count(),
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
    std::printf("%s max relative error %.3e (%s)\n", report.passed ? "PASS" : "FAIL", report.max_rel_error, report.worst_param.c_str());
    return report.passed ? 0 : exit_check_failed;
}

int cmd_predict(const Cli& cli, const RunConfig& run) {
    const fs::path out = prepare_out(cli, run);
    const SailModel model = load_for_inference(run);
    const Splits data = load_data(run);
    const VideoSample* found = nullptr;
    if (run.sample.empty()) {
        const auto& split = pick_split(data, run.split);
        require(!split.empty(), ErrorKind::invalid_argument, "split " + run.split + " is empty");
        found = &split.front();
    } else {
        for (const auto* split : {&data.train, &data.valid, &data.test})
            for (const auto& s : *split)
                if (!found && s.id == run.sample) found = &s;
        require(found != nullptr, ErrorKind::invalid_argument, "no sample with id '" + run.sample + "'");
    }
    const auto p = model.predict(*found);
    const VideoSample scaled = downsample(*found, model.config().n_max);
    const ordered_json j{{"id", found->id},
                         {"frames", scaled.length()},
                         {"s", p.segment.s},
                         {"e", p.segment.e},
                         {"target", {scaled.target.s, scaled.target.e}},
                         {"iou", iou(p.segment, scaled.target)},
                         {"p_start", p.p_start},
                         {"p_end", p.p_end}};
    write_json(out / "prediction.json", j);
    std::printf("%s %ld %ld\n", found->id.c_str(), p.segment.s, p.segment.e);
    return 0;
}

int cmd_sweep(const Cli& cli, const RunConfig& run) {
    require(run.sweep.ablations != !run.sweep.layers.empty(), ErrorKind::config, "sweep needs exactly one of --layers or --ablations");
    const fs::path out = prepare_out(cli, run);
    const Splits data = load_data(run);
    const auto grid = run.sweep.ablations ? ablation_grid(run.model) : layer_grid(run.model, run.sweep.layers);
    const auto rows = run_experiment(grid, data.train, data.valid, data.test, [](const ExperimentRow& r) {
        log("%s: test mIoU %.4f (best epoch %zu)", r.name.c_str(), r.test.miou, r.best_epoch);
    });
    write_json(out / "sweep.json", sail::to_json(rows));
    std::vector<std::pair<std::string, EvalReport>> table;
    for (const auto& r : rows) table.emplace_back(r.name, r.test);
    const std::string text = render_table(table);
    write_text(out / "sweep.txt", text);
    std::cout << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SAIL: video localization from image queries"};
    app.require_subcommand(1);
    Cli cli;

    auto* synth = app.add_subcommand("synth", "generate the synthetic corpus and manifest");
    auto* trainc = app.add_subcommand("train", "train a model and write a checkpoint");
    auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint or a baseline on a split");
    auto* grad = app.add_subcommand("gradcheck", "finite-difference audit of the full loss");
    auto* pred = app.add_subcommand("predict", "localize one sample");
    auto* sweep = app.add_subcommand("sweep", "layer-count sweep or ablation study");

    for (auto* sub : {synth, trainc, evalc, grad, pred, sweep}) add_common(sub, cli);
    for (auto* sub : {trainc, grad, sweep}) add_model_flags(sub, cli, sub != sweep);
    for (auto* sub : {trainc, evalc, pred, sweep}) add_data_flag(sub, cli);
    for (auto* sub : {evalc, pred}) {
        sub->add_option("--checkpoint", cli.checkpoint, "checkpoint file");
        sub->add_option("--split", cli.split, "train|valid|test")->check(CLI::IsMember({"train", "valid", "test"}));
        sub->add_option("--decode", cli.decode, "independent|constrained")->check(CLI::IsMember({"independent", "constrained"}));
    }
    evalc->add_option("--baseline", cli.baseline, "random|flp")->check(CLI::IsMember({"none", "random", "flp"}));
    pred->add_option("--sample", cli.sample, "sample id (default: first of the split)");
    sweep->add_option("--layers", cli.layer_range, "layer counts, lo..hi or a comma list");
    sweep->add_flag("--ablations", cli.ablations, "full model plus the four ablations");
    grad->add_flag("--micro", cli.micro, "n=6, m=3, d=8, H=2, L=1, w=2 audit configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::invalid_argument);
    }

    try {
        kernels::set_threads(cli.threads);
        const RunConfig run = resolve(cli);
        if (synth->parsed()) return cmd_synth(cli, run);
        if (trainc->parsed()) return cmd_train(cli, run);
        if (evalc->parsed()) return cmd_eval(cli, run);
        if (grad->parsed()) return cmd_gradcheck(cli, run);
        if (pred->parsed()) return cmd_predict(cli, run);
        return cmd_sweep(cli, run);
    } catch (const Error& e) {
        std::fprintf(stderr, "sail: error: %s\n", e.what());
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sail: internal error: %s\n", e.what());
        return exit_internal;
    }
}
