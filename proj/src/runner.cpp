#include "dynoframe/runner.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "dynoframe/augment.hpp"
#include "dynoframe/metrics.hpp"
#include "dynoframe/parallel.hpp"
#include "dynoframe/probe.hpp"
#include "dynoframe/structparse.hpp"
#include "dynoframe/synthworld.hpp"
#include "dynoframe/toylm.hpp"

namespace df::runner {

namespace {

// Option bag with typed accessors; done() rejects keys nothing consumed so a
// misspelled option fails instead of silently taking its default.
class Opts {
public:
    Opts(const json& doc, std::string cmd) : cmd_(std::move(cmd)) {
        if (doc.is_null()) return;
        if (!doc.is_object())
            fail(errc::invalid_argument, cmd_ + ": options must be a JSON object");
        doc_ = doc;
    }

    std::string str(const char* key) {
        const json* v = take(key);
        if (!v) fail(errc::invalid_argument, cmd_ + ": missing required option '" +
                                                 std::string(key) + "'");
        return as_string(key, *v);
    }

    std::string str_or(const char* key, std::string fallback) {
        const json* v = take(key);
        return v ? as_string(key, *v) : std::move(fallback);
    }

    std::optional<std::string> str_opt(const char* key) {
        const json* v = take(key);
        if (!v || v->is_null()) return std::nullopt;
        return as_string(key, *v);
    }

    double num_or(const char* key, double fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_number())
            fail(errc::invalid_argument, cmd_ + ": option '" + key + "' must be a number");
        return v->get<double>();
    }

    std::optional<double> num_opt(const char* key) {
        const json* v = take(key);
        if (!v || v->is_null()) return std::nullopt;
        if (!v->is_number())
            fail(errc::invalid_argument, cmd_ + ": option '" + key + "' must be a number");
        return v->get<double>();
    }

    int64_t int_or(const char* key, int64_t fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_number_integer())
            fail(errc::invalid_argument, cmd_ + ": option '" + key + "' must be an integer");
        return v->get<int64_t>();
    }

    uint64_t seed_or(const char* key, uint64_t fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_number_integer() || v->get<int64_t>() < 0)
            fail(errc::invalid_argument,
                 cmd_ + ": option '" + key + "' must be a non-negative integer");
        return v->get<uint64_t>();
    }

    bool flag_or(const char* key, bool fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_boolean())
            fail(errc::invalid_argument, cmd_ + ": option '" + key + "' must be a boolean");
        return v->get<bool>();
    }

    // Untyped access for structured option values; still marks the key used.
    const json* raw(const char* key) { return take(key); }

    void done() const {
        for (auto it = doc_.begin(); it != doc_.end(); ++it)
            if (!used_.count(it.key()))
                fail(errc::invalid_argument, cmd_ + ": unknown option '" + it.key() + "'");
    }

    const std::string& command() const { return cmd_; }

private:
    const json* take(const char* key) {
        used_.insert(key);
        auto it = doc_.find(key);
        return it == doc_.end() ? nullptr : &*it;
    }

    std::string as_string(const char* key, const json& v) const {
        if (!v.is_string())
            fail(errc::invalid_argument, cmd_ + ": option '" + key + "' must be a string");
        return v.get<std::string>();
    }

    std::string cmd_;
    json doc_ = json::object();
    std::set<std::string> used_;
};

int jobs_option(Opts& o) {
    const int64_t jobs = o.int_or("jobs", default_jobs());
    if (jobs < 1) fail(errc::invalid_argument, o.command() + ": jobs must be >= 1");
    return static_cast<int>(jobs);
}

size_t count_option(Opts& o, const char* key, int64_t fallback, int64_t min_value = 1) {
    const int64_t v = o.int_or(key, fallback);
    if (v < min_value)
        fail(errc::invalid_argument, o.command() + ": option '" + key + "' must be >= " +
                                         std::to_string(min_value));
    return static_cast<size_t>(v);
}

json packaged(const metrics::EvalReport& report, const io::ManifestBuilder& manifest) {
    json out;
    out["report"] = report.to_json();
    out["table"] = report.to_table();
    out["csv"] = report.to_csv();
    out["manifest"] = manifest.finish();
    return out;
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json recognition_eval(const json& opts, const std::string& command) {
    Opts o(opts, command);
    const std::string pred_path = o.str("pred");
    const std::string gt_path = o.str("gt");
    const std::string lexicon_path = o.str("lexicon");
    const std::string scenario = o.str_or("scenario", "top1");
    const std::string value_mode = o.str_or("value_mode", "per_role");
    metrics::EvalOptions eval_opts;
    eval_opts.scenario = metrics::scenario_from_name(scenario);
    eval_opts.value_mode = metrics::value_mode_from_name(value_mode);
    eval_opts.jobs = jobs_option(o);
    eval_opts.per_item = o.flag_or("per_item", false);
    o.done();

    const auto lexicon = frames::Lexicon::load(lexicon_path);
    metrics::EvalReport report;
    if (command == "eval-sir") {
        report = metrics::eval_sir(metrics::load_sir_predictions(pred_path, lexicon),
                                   metrics::load_sir_ground_truth(gt_path, lexicon), lexicon,
                                   eval_opts);
    } else {
        report = metrics::eval_gsr(metrics::load_gsr_predictions(pred_path, lexicon),
                                   metrics::load_gsr_ground_truth(gt_path, lexicon), lexicon,
                                   eval_opts);
    }

    io::ManifestBuilder manifest(command);
    manifest.add_option("scenario", scenario);
    manifest.add_option("value_mode", value_mode);
    manifest.add_option("jobs", eval_opts.jobs);
    manifest.add_option("per_item", eval_opts.per_item);
    manifest.add_input(pred_path);
    manifest.add_input(gt_path);
    manifest.add_input(lexicon_path);
    return packaged(report, manifest);
}

// {"id": <string|int>, ...} identifier shared by the jsonl payloads
std::string line_id(const json& obj, const std::string& ctx) {
    const json id = io::get_field(obj, "id", ctx);
    if (id.is_string()) return id.get<std::string>();
    if (id.is_number_integer()) return std::to_string(id.get<int64_t>());
    fail(errc::parse_error, ctx + ": id must be a string or integer");
}

struct EmbeddingLine {
    std::string id;
    Vec vector;
};

std::vector<EmbeddingLine> load_embedding_lines(const std::string& path) {
    std::vector<EmbeddingLine> out;
    const auto lines = io::load_jsonl(path);
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string ctx = path + " item " + std::to_string(i + 1);
        const json& line = lines[i];
        if (!line.is_object()) fail(errc::parse_error, ctx + ": expected a JSON object");
        EmbeddingLine e;
        e.id = line_id(line, ctx);
        const json vec = io::get_field(line, "vector", ctx);
        if (!vec.is_array() || vec.empty())
            fail(errc::parse_error, ctx + ": vector must be a non-empty array");
        for (const auto& x : vec) {
            if (!x.is_number()) fail(errc::parse_error, ctx + ": vector entries must be numbers");
            e.vector.push_back(x.get<double>());
        }
        out.push_back(std::move(e));
    }
    if (out.empty()) fail(errc::validation_error, path + ": no items");
    return out;
}

synthworld::WorldSpec world_option(Opts& o, std::optional<std::string>& path_out) {
    path_out = o.str_opt("world");
    return path_out ? synthworld::WorldSpec::load(*path_out) : synthworld::WorldSpec::demo();
}

struct TrainRun {
    toylm::TrainResult result;
    size_t vocab_size = 0;
};

toylm::TrainConfig train_config_options(Opts& o) {
    toylm::TrainConfig cfg;
    cfg.epochs = static_cast<int>(count_option(o, "epochs", cfg.epochs));
    cfg.lr = o.num_or("lr", 3e-3); // tuned demo default; the struct default stays conservative
    cfg.weight_decay = o.num_or("weight_decay", cfg.weight_decay);
    cfg.batch_size = count_option(o, "batch", static_cast<int64_t>(cfg.batch_size));
    cfg.hidden = count_option(o, "hidden", static_cast<int64_t>(cfg.hidden));
    cfg.lora.rank = static_cast<uint32_t>(count_option(o, "lora_rank", 0, 0));
    cfg.lora.alpha = o.num_or("lora_alpha", 0.0);
    cfg.lora.dropout = o.num_or("lora_dropout", cfg.lora.dropout);
    return cfg;
}

// Samples the world's addressable items, builds the token table in item
// order, and trains the decoder on (embedding -> structured text).
TrainRun train_on_world(const synthworld::WorldSpec& world, size_t n, uint64_t seed,
                        toylm::TrainConfig cfg) {
    const auto lexicon = world.lexicon();
    const synthworld::Codebook codebook(world);

    toylm::Vocabulary vocab;
    std::vector<std::string> texts;
    std::vector<Vec> images;
    texts.reserve(n);
    images.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        auto item = synthworld::sample_item(world, codebook, seed, i);
        texts.push_back(structparse::serialize_frame(item.frame, lexicon));
        images.push_back(std::move(item.embedding));
        std::istringstream words(texts.back());
        std::string token;
        while (words >> token) vocab.add(token);
    }

    std::vector<toylm::TrainExample> examples;
    examples.reserve(n);
    for (size_t i = 0; i < n; ++i)
        examples.push_back({std::move(images[i]), vocab.encode(texts[i])});

    cfg.seed = seed;
    TrainRun run;
    run.vocab_size = vocab.size();
    run.result = toylm::train_decoder(examples, vocab, cfg);
    return run;
}

} // namespace

json eval_sir(const json& opts) { return recognition_eval(opts, "eval-sir"); }
json eval_gsr(const json& opts) { return recognition_eval(opts, "eval-gsr"); }

json eval_hoi(const json& opts) {
    Opts o(opts, "eval-hoi");
    const std::string det_path = o.str("det");
    const std::string gt_path = o.str("gt");
    const std::string catalog_path = o.str("catalog");
    metrics::HoiOptions hopts;
    hopts.zero_gt_as_zero = o.flag_or("zero_gt_as_zero", false);
    hopts.jobs = jobs_option(o);
    hopts.per_class = o.flag_or("per_class", false);
    o.done();

    const auto catalog = frames::HoiCatalog::load(catalog_path);
    const auto report = metrics::eval_hoi(metrics::load_hoi_detections(det_path, catalog),
                                          metrics::load_hoi_ground_truth(gt_path, catalog),
                                          catalog, hopts);

    io::ManifestBuilder manifest("eval-hoi");
    manifest.add_option("zero_gt_as_zero", hopts.zero_gt_as_zero);
    manifest.add_option("jobs", hopts.jobs);
    manifest.add_option("per_class", hopts.per_class);
    manifest.add_input(det_path);
    manifest.add_input(gt_path);
    manifest.add_input(catalog_path);
    return packaged(report, manifest);
}

json eval_hhi(const json& opts) {
    Opts o(opts, "eval-hhi");
    const std::string pred_path = o.str("pred");
    const std::string gt_path = o.str("gt");
    const std::string scorer_spec = o.str_or("scorer", "exact");
    const auto lexicon_path = o.str_opt("lexicon");
    const auto embeddings_path = o.str_opt("embeddings");
    metrics::HhiOptions hopts;
    hopts.jobs = jobs_option(o);
    hopts.per_item = o.flag_or("per_item", false);
    o.done();

    std::optional<frames::Lexicon> lexicon;
    if (lexicon_path) lexicon = frames::Lexicon::load(*lexicon_path);
    std::map<std::string, Vec> table;
    if (embeddings_path) table = metrics::load_embedding_table(*embeddings_path);

    auto scorer = metrics::make_scorer(scorer_spec, lexicon ? &*lexicon : nullptr,
                                       embeddings_path ? &table : nullptr);
    const auto report = metrics::eval_hhi(metrics::load_hhi_items(pred_path),
                                          metrics::load_hhi_items(gt_path), *scorer, hopts);

    io::ManifestBuilder manifest("eval-hhi");
    manifest.add_option("scorer", scorer_spec);
    manifest.add_option("jobs", hopts.jobs);
    manifest.add_option("per_item", hopts.per_item);
    manifest.add_input(pred_path);
    manifest.add_input(gt_path);
    if (lexicon_path) manifest.add_input(*lexicon_path);
    if (embeddings_path) manifest.add_input(*embeddings_path);
    return packaged(report, manifest);
}

json probe_run(const json& opts) {
    Opts o(opts, "probe");
    const std::string in_path = o.str("in");
    const std::string split_text = o.str_or("split", "70/10/20");
    const uint64_t seed = o.seed_or("seed", 1);
    probe::ProbeConfig cfg;
    cfg.lr = o.num_or("lr", cfg.lr);
    cfg.l2 = o.num_or("l2", cfg.l2);
    cfg.epochs = count_option(o, "epochs", static_cast<int64_t>(cfg.epochs));
    const auto scatter = o.str_opt("scatter");
    const auto representation = o.str_opt("representation");
    const auto task_metric = o.num_opt("task_metric");
    o.done();

    const auto data = probe::load_probe_dataset(in_path);
    const auto spec = probe::split_from_string(split_text);
    const auto idx = probe::split_dataset(data.size(), spec, seed);
    const auto fit = probe::fit_probe(data, idx.train, cfg);

    metrics::EvalReport report;
    report.task = "probe";
    report.item_count = data.size();
    report.attributes["in"] = in_path;
    report.attributes["split"] = split_text;
    report.attributes["seed"] = seed;
    report.attributes["lr"] = cfg.lr;
    report.attributes["l2"] = cfg.l2;
    report.attributes["epochs"] = cfg.epochs;
    report.values["classes"] = static_cast<double>(data.n_classes());
    report.values["dim"] = static_cast<double>(data.dim);
    report.values["first_loss"] = fit.epoch_loss.front();
    report.values["final_loss"] = fit.epoch_loss.back();
    report.values["train_acc"] = probe::probe_accuracy(fit.model, data, idx.train);
    if (!idx.dev.empty())
        report.values["dev_acc"] = probe::probe_accuracy(fit.model, data, idx.dev);
    if (!idx.test.empty())
        report.values["test_acc"] = probe::probe_accuracy(fit.model, data, idx.test);
    // the scatter column prefers held-out accuracy, falling back to train
    const double probe_acc = idx.test.empty() ? report.values["train_acc"]
                                              : report.values["test_acc"];
    report.values["probe_acc"] = probe_acc;

    io::ManifestBuilder manifest("probe");
    manifest.set_seed(seed);
    manifest.add_option("split", split_text);
    manifest.add_option("lr", cfg.lr);
    manifest.add_option("l2", cfg.l2);
    manifest.add_option("epochs", cfg.epochs);
    manifest.add_input(in_path);

    if (scatter) {
        if (!representation || !task_metric)
            fail(errc::invalid_argument,
                 "probe: scatter output needs both 'representation' and 'task_metric'");
        if (representation->find_first_of(",\"\n\r") != std::string::npos)
            fail(errc::invalid_argument,
                 "probe: representation name must not contain commas, quotes, or newlines");
        std::string body;
        if (!std::filesystem::exists(*scatter))
            body = "representation,probe_acc,task_metric\n";
        else
            body = io::read_text_file(*scatter);
        body += *representation;
        body += ',';
        body += format_full(probe_acc);
        body += ',';
        body += format_full(*task_metric);
        body += '\n';
        io::write_text_file(*scatter, body);
        manifest.add_option("representation", *representation);
        manifest.add_option("task_metric", *task_metric);
        manifest.add_output(*scatter);
    }
    return packaged(report, manifest);
}

json correlate_run(const json& opts) {
    Opts o(opts, "correlate");
    const std::string csv_path = o.str("csv");
    o.done();

    const std::string body = io::read_text_file(csv_path);
    std::istringstream lines(body);
    std::string line;
    size_t line_no = 0;
    std::vector<double> probe_acc, task_metric;
    while (std::getline(lines, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "representation,probe_acc,task_metric")
                fail(errc::parse_error,
                     csv_path + ": expected header 'representation,probe_acc,task_metric'");
            continue;
        }
        const size_t last = line.rfind(',');
        const size_t second = last == std::string::npos ? std::string::npos
                                                        : line.rfind(',', last - 1);
        if (second == std::string::npos)
            fail(errc::parse_error,
                 csv_path + " line " + std::to_string(line_no) + ": expected three columns");
        auto parse_cell = [&](size_t from, size_t to) {
            double v = 0;
            const char* first = line.data() + from;
            const char* end = line.data() + to;
            auto [p, ec] = std::from_chars(first, end, v);
            if (ec != std::errc() || p != end)
                fail(errc::parse_error, csv_path + " line " + std::to_string(line_no) +
                                            ": bad number '" + line.substr(from, to - from) +
                                            "'");
            return v;
        };
        probe_acc.push_back(parse_cell(second + 1, last));
        task_metric.push_back(parse_cell(last + 1, line.size()));
    }

    const auto corr = probe::correlate(probe_acc, task_metric);
    metrics::EvalReport report;
    report.task = "correlate";
    report.item_count = corr.n;
    report.attributes["csv"] = csv_path;
    report.values["pearson"] = corr.pearson;
    report.values["spearman"] = corr.spearman;
    report.values["n"] = static_cast<double>(corr.n);

    io::ManifestBuilder manifest("correlate");
    manifest.add_input(csv_path);
    return packaged(report, manifest);
}

json gen_world(const json& opts) {
    Opts o(opts, "gen-world");
    std::optional<std::string> world_path;
    const auto world = world_option(o, world_path);
    const size_t n = count_option(o, "n", 1000);
    const size_t hoi_images = count_option(o, "hoi_images", 50, 0);
    const uint64_t seed = o.seed_or("seed", 1);
    const std::string prefix = o.str("out_prefix");
    o.done();

    const auto files = synthworld::generate_world_files(world, n, hoi_images, seed, prefix);

    metrics::EvalReport report;
    report.task = "gen-world";
    report.item_count = n;
    report.attributes["out_prefix"] = prefix;
    report.attributes["world"] = world_path ? json(*world_path) : json("builtin-demo");
    report.attributes["seed"] = seed;
    report.values["items"] = static_cast<double>(n);
    report.values["hoi_images"] = static_cast<double>(hoi_images);
    report.values["verbs"] = static_cast<double>(world.verbs.size());
    report.values["files"] = static_cast<double>(files.all().size());

    io::ManifestBuilder manifest("gen-world");
    manifest.set_seed(seed);
    manifest.add_option("n", n);
    manifest.add_option("hoi_images", hoi_images);
    manifest.add_option("out_prefix", prefix);
    if (world_path) manifest.add_input(*world_path);
    for (const auto& path : files.all()) manifest.add_output(path);

    json out = packaged(report, manifest);
    out["files"] = {{"lexicon", files.lexicon},     {"catalog", files.catalog},
                    {"frames", files.frames},       {"embeddings", files.embeddings},
                    {"sir_gt", files.sir_gt},       {"gsr_gt", files.gsr_gt},
                    {"gsr_pred", files.gsr_pred},   {"hoi_gt", files.hoi_gt},
                    {"hoi_det", files.hoi_det}};
    return out;
}

json demo_train(const json& opts) {
    Opts o(opts, "demo-train");
    std::optional<std::string> world_path;
    const auto world = world_option(o, world_path);
    const size_t n = count_option(o, "n", 1000);
    const uint64_t seed = o.seed_or("seed", 1);
    const std::string out_path = o.str("out");
    const auto cfg = train_config_options(o);
    o.done();

    const auto run = train_on_world(world, n, seed, cfg);
    run.result.model.save(out_path);

    metrics::EvalReport report;
    report.task = "demo-train";
    report.item_count = n;
    report.attributes["world"] = world_path ? json(*world_path) : json("builtin-demo");
    report.attributes["out"] = out_path;
    report.attributes["seed"] = seed;
    report.attributes["epochs"] = cfg.epochs;
    report.attributes["lr"] = cfg.lr;
    report.attributes["hidden"] = cfg.hidden;
    report.attributes["batch"] = cfg.batch_size;
    report.attributes["lora_rank"] = cfg.lora.rank;
    report.values["items"] = static_cast<double>(n);
    report.values["vocab"] = static_cast<double>(run.vocab_size);
    report.values["first_loss"] = run.result.epoch_loss.front();
    report.values["final_loss"] = run.result.epoch_loss.back();

    io::ManifestBuilder manifest("demo-train");
    manifest.set_seed(seed);
    manifest.add_option("n", n);
    manifest.add_option("epochs", cfg.epochs);
    manifest.add_option("lr", cfg.lr);
    manifest.add_option("hidden", cfg.hidden);
    manifest.add_option("batch", cfg.batch_size);
    manifest.add_option("lora_rank", cfg.lora.rank);
    if (world_path) manifest.add_input(*world_path);
    manifest.add_output(out_path);
    return packaged(report, manifest);
}

json demo_generate(const json& opts) {
    Opts o(opts, "demo-generate");
    const std::string model_path = o.str("model");
    const std::string embeddings_path = o.str("embeddings");
    const size_t max_len = count_option(o, "max_len", 32);
    const auto out_path = o.str_opt("out");
    o.done();

    const auto model = toylm::DecoderModel::load(model_path);
    const auto lines = load_embedding_lines(embeddings_path);

    json generations = json::array();
    std::string body;
    for (const auto& line : lines) {
        if (line.vector.size() != model.d_img())
            fail(errc::validation_error,
                 embeddings_path + " item '" + line.id + "': vector width " +
                     std::to_string(line.vector.size()) + " does not match the model (" +
                     std::to_string(model.d_img()) + ")");
        const auto ids = model.generate(line.vector, max_len);
        const std::string text = model.vocab().decode(ids);
        generations.push_back({{"id", line.id}, {"text", text}});
        if (out_path) {
            body += json{{"schema", "dynoframe.generations/1"},
                         {"id", line.id},
                         {"text", text}}
                        .dump();
            body += '\n';
        }
    }
    if (out_path) io::write_text_file(*out_path, body);

    metrics::EvalReport report;
    report.task = "demo-generate";
    report.item_count = lines.size();
    report.attributes["model"] = model_path;
    report.attributes["embeddings"] = embeddings_path;
    report.attributes["max_len"] = max_len;
    report.values["items"] = static_cast<double>(lines.size());

    io::ManifestBuilder manifest("demo-generate");
    manifest.add_option("max_len", max_len);
    manifest.add_input(model_path);
    manifest.add_input(embeddings_path);
    if (out_path) manifest.add_output(*out_path);

    json out = packaged(report, manifest);
    out["generations"] = std::move(generations);
    return out;
}

json augment_check(const json& opts) {
    Opts o(opts, "augment-check");
    augment::AugmentCheckConfig cfg;
    cfg.kb = count_option(o, "kb", static_cast<int64_t>(cfg.kb));
    cfg.kv = count_option(o, "kv", static_cast<int64_t>(cfg.kv));
    cfg.n = count_option(o, "n", static_cast<int64_t>(cfg.n));
    cfg.heads = count_option(o, "heads", static_cast<int64_t>(cfg.heads));
    cfg.trials = count_option(o, "trials", static_cast<int64_t>(cfg.trials));
    cfg.seed = o.seed_or("seed", cfg.seed);
    const std::string mode = o.str_or("mode", "augment");
    if (mode == "augment") cfg.mode = augment::FuseMode::augment;
    else if (mode == "replace") cfg.mode = augment::FuseMode::replace;
    else fail(errc::invalid_argument, "augment-check: mode must be augment or replace");
    o.done();

    const auto results = augment::run_augment_checks(cfg);
    bool all_pass = true;
    json checks = json::array();
    std::ostringstream table, csv;
    table << "task: augment-check   mode: " << mode << "   kb: " << cfg.kb
          << "   kv: " << cfg.kv << "   n: " << cfg.n << "   heads: " << cfg.heads
          << "   trials: " << cfg.trials << '\n';
    csv << "check,max_deviation,tolerance,pass\n";
    size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    for (const auto& r : results) {
        all_pass = all_pass && r.pass;
        checks.push_back({{"name", r.name},
                          {"max_deviation", r.max_deviation},
                          {"tolerance", r.tolerance},
                          {"pass", r.pass}});
        char dev[40];
        std::snprintf(dev, sizeof dev, "%.3e", r.max_deviation);
        table << (r.pass ? "PASS  " : "FAIL  ") << r.name
              << std::string(width - r.name.size() + 2, ' ') << "max " << dev << "  tol "
              << r.tolerance << '\n';
        csv << r.name << ',' << format_full(r.max_deviation) << ',' << r.tolerance << ','
            << (r.pass ? "true" : "false") << '\n';
    }
    table << (all_pass ? "overall PASS" : "overall FAIL") << '\n';

    json report;
    report["schema"] = "dynoframe.report/1";
    report["task"] = "augment-check";
    report["options"] = {{"kb", cfg.kb},     {"kv", cfg.kv},         {"n", cfg.n},
                         {"heads", cfg.heads}, {"trials", cfg.trials}, {"mode", mode},
                         {"seed", cfg.seed}};
    report["checks"] = std::move(checks);
    report["pass"] = all_pass;

    io::ManifestBuilder manifest("augment-check");
    manifest.set_seed(cfg.seed);
    manifest.add_option("kb", cfg.kb);
    manifest.add_option("kv", cfg.kv);
    manifest.add_option("n", cfg.n);
    manifest.add_option("heads", cfg.heads);
    manifest.add_option("trials", cfg.trials);
    manifest.add_option("mode", mode);

    json out;
    out["report"] = std::move(report);
    out["table"] = table.str();
    out["csv"] = csv.str();
    out["manifest"] = manifest.finish();
    return out;
}

json pipeline_run(const json& opts) {
    Opts o(opts, "pipeline");
    std::optional<std::string> world_path;
    const auto world = world_option(o, world_path);
    const size_t n = count_option(o, "n", 1000);
    const size_t hoi_images = count_option(o, "hoi_images", 20, 0);
    const uint64_t seed = o.seed_or("seed", 3);
    const size_t max_len = count_option(o, "max_len", 32);
    auto cfg = train_config_options(o);
    std::string workdir = o.str_or("workdir", "");
    o.done();

    if (workdir.empty()) {
        workdir = (std::filesystem::temp_directory_path() /
                   ("dynoframe_pipeline_" + std::to_string(seed)))
                      .string();
    }
    std::filesystem::create_directories(workdir);
    const std::string prefix = workdir + "/world";
    const std::string model_path = workdir + "/model.bin";
    const std::string generations_path = workdir + "/generations.jsonl";

    // 1. materialize the dataset
    const auto files = synthworld::generate_world_files(world, n, hoi_images, seed, prefix);
    const auto lexicon = world.lexicon();

    // 2. train the decoder on the same addressable items
    const auto run = train_on_world(world, n, seed, cfg);
    run.result.model.save(model_path);

    // 3. generate structured text from the written embeddings
    const auto embeddings = load_embedding_lines(files.embeddings);
    std::vector<metrics::SirPrediction> preds;
    preds.reserve(embeddings.size());
    size_t strict_ok = 0, tolerant_ok = 0;
    std::string gen_body;
    for (const auto& line : embeddings) {
        const auto ids = run.result.model.generate(line.vector, max_len);
        const std::string text = run.result.model.vocab().decode(ids);
        gen_body += json{{"schema", "dynoframe.generations/1"},
                         {"id", line.id},
                         {"text", text}}
                        .dump();
        gen_body += '\n';

        metrics::SirPrediction pred;
        pred.id = line.id;
        try {
            (void)structparse::parse_frame(text, lexicon, structparse::ParseMode::strict);
            ++strict_ok;
        } catch (const Error&) {
        }
        try {
            auto parsed =
                structparse::parse_frame(text, lexicon, structparse::ParseMode::tolerant);
            pred.hypotheses.push_back(std::move(parsed.frame));
            ++tolerant_ok;
        } catch (const Error&) {
            // unparseable generations stay in the set and score zero
        }
        preds.push_back(std::move(pred));
    }
    io::write_text_file(generations_path, gen_body);

    // 4. score against the written ground truth, verb given
    metrics::EvalOptions eval_opts;
    eval_opts.scenario = metrics::Scenario::gtverb;
    eval_opts.value_mode = metrics::ValueMode::per_role;
    const auto gts = metrics::load_sir_ground_truth(files.sir_gt, lexicon);
    const auto sir = metrics::eval_sir(preds, gts, lexicon, eval_opts);

    metrics::EvalReport report;
    report.task = "pipeline";
    report.item_count = n;
    report.attributes["world"] = world_path ? json(*world_path) : json("builtin-demo");
    report.attributes["workdir"] = workdir;
    report.attributes["seed"] = seed;
    report.attributes["epochs"] = cfg.epochs;
    report.attributes["lr"] = cfg.lr;
    report.attributes["hidden"] = cfg.hidden;
    report.attributes["scenario"] = "gtverb";
    report.values = sir.values;
    report.values["strict_parse_rate"] =
        static_cast<double>(strict_ok) / static_cast<double>(n);
    report.values["tolerant_parse_rate"] =
        static_cast<double>(tolerant_ok) / static_cast<double>(n);
    report.values["train_first_loss"] = run.result.epoch_loss.front();
    report.values["train_final_loss"] = run.result.epoch_loss.back();

    io::ManifestBuilder manifest("pipeline");
    manifest.set_seed(seed);
    manifest.add_option("n", n);
    manifest.add_option("hoi_images", hoi_images);
    manifest.add_option("epochs", cfg.epochs);
    manifest.add_option("lr", cfg.lr);
    manifest.add_option("hidden", cfg.hidden);
    manifest.add_option("batch", cfg.batch_size);
    manifest.add_option("max_len", max_len);
    manifest.add_option("workdir", workdir);
    if (world_path) manifest.add_input(*world_path);
    for (const auto& path : files.all()) manifest.add_output(path);
    manifest.add_output(model_path);
    manifest.add_output(generations_path);
    return packaged(report, manifest);
}

json make_manifest(const json& opts) {
    Opts o(opts, "manifest");
    const std::string command = o.str("command");
    io::ManifestBuilder manifest(command);
    if (opts.is_object() && opts.contains("seed")) manifest.set_seed(o.seed_or("seed", 0));
    if (const json* extra = o.raw("options")) {
        if (!extra->is_object())
            fail(errc::invalid_argument, "manifest: 'options' must be an object");
        for (auto it = extra->begin(); it != extra->end(); ++it)
            manifest.add_option(it.key(), it.value());
    }
    auto paths = [&](const char* key, auto&& add) {
        const json* arr = o.raw(key);
        if (!arr) return;
        if (!arr->is_array())
            fail(errc::invalid_argument, std::string("manifest: '") + key +
                                             "' must be an array of paths");
        for (const auto& p : *arr) {
            if (!p.is_string())
                fail(errc::invalid_argument, std::string("manifest: '") + key +
                                                 "' entries must be strings");
            add(p.get<std::string>());
        }
    };
    paths("inputs", [&](const std::string& p) { manifest.add_input(p); });
    paths("outputs", [&](const std::string& p) { manifest.add_output(p); });
    o.done();
    return manifest.finish();
}

} // namespace df::runner
