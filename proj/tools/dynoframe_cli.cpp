// Command-line frontend. Everything of substance happens behind the C API;
// this file only turns flags into option objects and routes the results.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "dynoframe/dynoframe.h"
#include "json.hpp"

using nlohmann::json;

namespace {

// exit 0 success, 1 user error, 2 internal error; errors always start with
// a single machine-parseable "ERROR <code>" line on standard error.
int report_failure(df_status status) {
    std::cerr << "ERROR " << df_status_name(status) << "\n" << df_last_error() << "\n";
    return (status == DF_E_NUMERIC || status == DF_E_INTERNAL) ? 2 : 1;
}

int io_failure(const std::string& message) {
    std::cerr << "ERROR E_IO\n" << message << "\n";
    return 1;
}

bool write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << text;
    return static_cast<bool>(out);
}

// Where a command's report and manifest go. stdout carries exactly one
// artifact; the manifest lands in --manifest or as one line on stderr so
// that timestamps never touch the report stream.
struct OutputPrefs {
    bool table = false;
    bool csv = false;
    std::string out;
    std::string manifest;
};

void add_output_flags(CLI::App* cmd, const std::shared_ptr<OutputPrefs>& prefs) {
    cmd->add_flag("--table", prefs->table, "print the report as an aligned text table");
    cmd->add_flag("--csv", prefs->csv, "print the report as CSV");
    cmd->add_option("--out", prefs->out, "also write the report JSON to this file");
    cmd->add_option("--manifest", prefs->manifest,
                    "write the run manifest here instead of standard error");
}

int route_manifest(const json& manifest, const std::string& path) {
    if (path.empty()) {
        std::cerr << manifest.dump() << "\n";
        return 0;
    }
    if (!write_file(path, manifest.dump(2) + "\n"))
        return io_failure("could not write manifest to " + path);
    return 0;
}

using EngineFn = df_status (*)(const char*, char**);

json call_engine_or_exit(EngineFn fn, const json& options, int& rc) {
    char* text = nullptr;
    const df_status status = fn(options.dump().c_str(), &text);
    if (status != DF_OK) {
        rc = report_failure(status);
        return json();
    }
    json result = json::parse(text);
    df_string_free(text);
    rc = 0;
    return result;
}

int run_engine(EngineFn fn, const json& options, const OutputPrefs& prefs) {
    int rc = 0;
    const json result = call_engine_or_exit(fn, options, rc);
    if (rc != 0) return rc;

    if (prefs.table)
        std::cout << result.at("table").get<std::string>();
    else if (prefs.csv)
        std::cout << result.at("csv").get<std::string>();
    else
        std::cout << result.at("report").dump(2) << "\n";

    if (!prefs.out.empty() && !write_file(prefs.out, result.at("report").dump(2) + "\n"))
        return io_failure("could not write report to " + prefs.out);
    return route_manifest(result.at("manifest"), prefs.manifest);
}

// ---- line-oriented parse/serialize -------------------------------------

struct LineState {
    std::string lexicon;
    std::string in;
    std::string out;
    std::string manifest;
    bool tolerant = false;
};

int finish_line_mode(const LineState& st, const char* command, size_t failures,
                     size_t total) {
    json mopts = {{"command", command},
                  {"options", {{"tolerant", st.tolerant}}},
                  {"inputs", json::array({st.lexicon})},
                  {"outputs", json::array()}};
    if (!st.in.empty()) mopts["inputs"].push_back(st.in);
    if (!st.out.empty()) mopts["outputs"].push_back(st.out);

    // the error code line must be the first thing on standard error
    if (failures)
        std::cerr << "ERROR E_PARSE\n"
                  << command << ": " << failures << " of " << total << " lines failed\n";

    char* text = nullptr;
    const df_status status = df_make_manifest(mopts.dump().c_str(), &text);
    if (status != DF_OK) return report_failure(status);
    json manifest = json::parse(text);
    df_string_free(text);
    if (int rc = route_manifest(manifest, st.manifest); rc != 0) return rc;
    return failures ? 1 : 0;
}

template <typename PerLine>
int run_line_mode(const LineState& st, const char* command, PerLine&& per_line) {
    df_lexicon* lex = nullptr;
    if (const df_status s = df_lexicon_open(st.lexicon.c_str(), &lex); s != DF_OK)
        return report_failure(s);

    size_t failures = 0, total = 0;
    {
        std::ifstream file;
        std::istream* in = &std::cin;
        if (!st.in.empty()) {
            file.open(st.in, std::ios::binary);
            if (!file) {
                df_lexicon_close(lex);
                return io_failure("could not open " + st.in);
            }
            in = &file;
        }
        std::ofstream ofile;
        std::ostream* out = &std::cout;
        if (!st.out.empty()) {
            ofile.open(st.out, std::ios::binary);
            if (!ofile) {
                df_lexicon_close(lex);
                return io_failure("could not open " + st.out + " for writing");
            }
            out = &ofile;
        }

        std::string line;
        size_t line_no = 0;
        while (std::getline(*in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            ++total;
            if (!per_line(lex, line, line_no, *out)) ++failures;
        }
    }
    df_lexicon_close(lex);
    return finish_line_mode(st, command, failures, total);
}

json error_line(size_t line_no, df_status status) {
    return {{"line", line_no},
            {"error", {{"code", df_status_name(status)}, {"message", df_last_error()}}}};
}

int run_parse(const LineState& st) {
    return run_line_mode(st, "parse",
                         [&](df_lexicon* lex, const std::string& line, size_t line_no,
                             std::ostream& out) {
                             char* text = nullptr;
                             const df_status s = df_lexicon_parse_frame(
                                 lex, line.c_str(), st.tolerant ? 1 : 0, &text);
                             if (s != DF_OK) {
                                 out << error_line(line_no, s).dump() << "\n";
                                 return false;
                             }
                             json obj = json::parse(text);
                             df_string_free(text);
                             obj["line"] = line_no;
                             out << obj.dump() << "\n";
                             return true;
                         });
}

int run_serialize(const LineState& st) {
    return run_line_mode(st, "serialize",
                         [](df_lexicon* lex, const std::string& line, size_t line_no,
                            std::ostream& out) {
                             char* text = nullptr;
                             const df_status s =
                                 df_lexicon_serialize_frame(lex, line.c_str(), &text);
                             if (s != DF_OK) {
                                 out << error_line(line_no, s).dump() << "\n";
                                 return false;
                             }
                             out << text << "\n";
                             df_string_free(text);
                             return true;
                         });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynoframe: semantic-frame prediction toolkit and evaluation engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", df_version());

    int default_jobs = 1;
    df_default_jobs(&default_jobs);

    int rc = 0;

    // parse / serialize
    {
        auto st = std::make_shared<LineState>();
        auto* cmd = app.add_subcommand(
            "parse", "parse structured-text lines into frame JSON");
        cmd->add_option("--lexicon", st->lexicon, "verb lexicon JSON")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--in", st->in, "input file (default standard input)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", st->out, "output file (default standard output)");
        cmd->add_flag("--tolerant", st->tolerant, "repair recoverable deviations");
        cmd->add_option("--manifest", st->manifest,
                        "write the run manifest here instead of standard error");
        cmd->callback([st, &rc] { rc = run_parse(*st); });
    }
    {
        auto st = std::make_shared<LineState>();
        auto* cmd = app.add_subcommand(
            "serialize", "render frame JSON lines as structured text");
        cmd->add_option("--lexicon", st->lexicon, "verb lexicon JSON")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--in", st->in, "input file (default standard input)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", st->out, "output file (default standard output)");
        cmd->add_option("--manifest", st->manifest,
                        "write the run manifest here instead of standard error");
        cmd->callback([st, &rc] { rc = run_serialize(*st); });
    }

    // eval-sir / eval-gsr
    struct RecogState {
        std::string pred, gt, lexicon;
        std::string scenario = "top1", value_mode = "per-role";
        int jobs = 1;
        bool per_item = false;
    };
    auto add_recognition = [&](const char* name, EngineFn fn, const char* blurb) {
        auto st = std::make_shared<RecogState>();
        st->jobs = default_jobs;
        auto prefs = std::make_shared<OutputPrefs>();
        auto* cmd = app.add_subcommand(name, blurb);
        cmd->add_option("--pred", st->pred, "predictions JSONL")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--gt", st->gt, "ground-truth JSONL")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--lexicon", st->lexicon, "verb lexicon JSON")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--scenario", st->scenario, "verb budget")
            ->check(CLI::IsMember({"top1", "top5", "gtverb"}));
        cmd->add_option("--value-mode", st->value_mode, "role scoring mode")
            ->check(CLI::IsMember({"any", "per-role"}));
        cmd->add_option("--jobs", st->jobs, "worker threads (env DYNOFRAME_JOBS)");
        cmd->add_flag("--per-item", st->per_item, "include per-item scores in the report");
        add_output_flags(cmd, prefs);
        cmd->callback([st, prefs, fn, &rc] {
            const json options = {{"pred", st->pred},       {"gt", st->gt},
                                  {"lexicon", st->lexicon}, {"scenario", st->scenario},
                                  {"value_mode", st->value_mode}, {"jobs", st->jobs},
                                  {"per_item", st->per_item}};
            rc = run_engine(fn, options, *prefs);
        });
    };
    add_recognition("eval-sir", df_eval_sir,
                    "score frame predictions against ground truth");
    add_recognition("eval-gsr", df_eval_gsr,
                    "score grounded frame predictions (boxes included)");

    // eval-hoi
    {
        struct HoiState {
            std::string det, gt, catalog;
            int jobs = 1;
            bool zero_gt_as_zero = false, per_class = false;
        };
        auto st = std::make_shared<HoiState>();
        st->jobs = default_jobs;
        auto prefs = std::make_shared<OutputPrefs>();
        auto* cmd = app.add_subcommand(
            "eval-hoi", "mean average precision for human-object interactions");
        cmd->add_option("--det", st->det, "detections JSONL")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--gt", st->gt, "ground-truth JSONL")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--catalog", st->catalog, "interaction class catalog JSON")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_flag("--zero-gt-as-zero", st->zero_gt_as_zero,
                      "count classes without ground truth as AP 0 instead of skipping");
        cmd->add_option("--jobs", st->jobs, "worker threads (env DYNOFRAME_JOBS)");
        cmd->add_flag("--per-class", st->per_class, "include per-class AP in the report");
        add_output_flags(cmd, prefs);
        cmd->callback([st, prefs, &rc] {
            const json options = {{"det", st->det},
                                  {"gt", st->gt},
                                  {"catalog", st->catalog},
                                  {"zero_gt_as_zero", st->zero_gt_as_zero},
                                  {"jobs", st->jobs},
                                  {"per_class", st->per_class}};
            rc = run_engine(df_eval_hoi, options, *prefs);
        });
    }

    // eval-hhi
    {
        struct HhiState {
            std::string pred, gt, scorer = "exact", lexicon, embeddings;
            int jobs = 1;
            bool per_item = false;
        };
        auto st = std::make_shared<HhiState>();
        st->jobs = default_jobs;
        auto prefs = std::make_shared<OutputPrefs>();
        auto* cmd = app.add_subcommand(
            "eval-hhi", "score human-human interaction descriptions");
        cmd->add_option("--pred", st->pred, "predictions JSONL")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--gt", st->gt, "ground-truth JSONL")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--scorer", st->scorer,
                        "exact | f1 | verbsim | exec:<command>");
        cmd->add_option("--lexicon", st->lexicon, "verb lexicon (verbsim)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--embeddings", st->embeddings, "verb embedding table (verbsim)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--jobs", st->jobs, "worker threads (env DYNOFRAME_JOBS)");
        cmd->add_flag("--per-item", st->per_item, "include per-item scores in the report");
        add_output_flags(cmd, prefs);
        cmd->callback([st, prefs, &rc] {
            json options = {{"pred", st->pred},
                            {"gt", st->gt},
                            {"scorer", st->scorer},
                            {"jobs", st->jobs},
                            {"per_item", st->per_item}};
            if (!st->lexicon.empty()) options["lexicon"] = st->lexicon;
            if (!st->embeddings.empty()) options["embeddings"] = st->embeddings;
            rc = run_engine(df_eval_hhi, options, *prefs);
        });
    }

    // probe
    {
        struct ProbeState {
            std::string in, split = "70/10/20", scatter, representation;
            uint64_t seed = 1;
            double lr = 1e-2, l2 = 1e-4, task_metric = 0;
            int64_t epochs = 500;
            bool has_task_metric = false;
        };
        auto st = std::make_shared<ProbeState>();
        auto prefs = std::make_shared<OutputPrefs>();
        auto* cmd = app.add_subcommand(
            "probe", "linear probe accuracy on labeled embeddings");
        cmd->add_option("--in", st->in, "labeled embeddings JSONL")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--split", st->split, "train/dev/test percentages");
        cmd->add_option("--seed", st->seed, "split shuffle seed");
        cmd->add_option("--lr", st->lr, "learning rate");
        cmd->add_option("--l2", st->l2, "L2 penalty");
        cmd->add_option("--epochs", st->epochs, "gradient descent steps");
        cmd->add_option("--scatter", st->scatter,
                        "append a representation,probe_acc,task_metric row to this CSV");
        cmd->add_option("--representation", st->representation,
                        "representation name for the scatter row");
        auto* tm = cmd->add_option("--task-metric", st->task_metric,
                                   "task metric value for the scatter row");
        add_output_flags(cmd, prefs);
        cmd->callback([st, prefs, tm, &rc] {
            json options = {{"in", st->in},   {"split", st->split}, {"seed", st->seed},
                            {"lr", st->lr},   {"l2", st->l2},       {"epochs", st->epochs}};
            if (!st->scatter.empty()) options["scatter"] = st->scatter;
            if (!st->representation.empty()) options["representation"] = st->representation;
            if (tm->count()) options["task_metric"] = st->task_metric;
            rc = run_engine(df_probe, options, *prefs);
        });
    }

    // correlate
    {
        auto in = std::make_shared<std::string>();
        auto prefs = std::make_shared<OutputPrefs>();
        auto* cmd = app.add_subcommand(
            "correlate", "pearson and spearman over a probe scatter CSV");
        cmd->add_option("--in", *in, "scatter CSV from probe runs")
            ->required()
            ->check(CLI::ExistingFile);
        add_output_flags(cmd, prefs);
        cmd->callback([in, prefs, &rc] {
            rc = run_engine(df_correlate, json{{"csv", *in}}, *prefs);
        });
    }

    // gen-world
    {
        struct GenState {
            std::string world, out_prefix;
            int64_t n = 1000, hoi_images = 50;
            uint64_t seed = 1;
        };
        auto st = std::make_shared<GenState>();
        auto prefs = std::make_shared<OutputPrefs>();
        auto* cmd = app.add_subcommand(
            "gen-world", "write a seeded synthetic dataset to JSONL files");
        cmd->add_option("--world", st->world, "world spec JSON (default: built-in demo)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--n", st->n, "number of frame items");
        cmd->add_option("--hoi-images", st->hoi_images, "number of interaction scenes");
        cmd->add_option("--seed", st->seed, "generation seed");
        cmd->add_option("--out-prefix", st->out_prefix, "path prefix for emitted files")
            ->required();
        add_output_flags(cmd, prefs);
        cmd->callback([st, prefs, &rc] {
            json options = {{"n", st->n},
                            {"hoi_images", st->hoi_images},
                            {"seed", st->seed},
                            {"out_prefix", st->out_prefix}};
            if (!st->world.empty()) options["world"] = st->world;
            rc = run_engine(df_gen_world, options, *prefs);
        });
    }

    // demo-train
    {
        struct TrainState {
            std::string world, out;
            int64_t n = 1000, epochs = 30, batch = 16, hidden = 64, lora_rank = 0;
            uint64_t seed = 1;
            double lr = 3e-3, weight_decay = 0.01, lora_alpha = 0, lora_dropout = 0.05;
        };
        auto st = std::make_shared<TrainState>();
        auto prefs = std::make_shared<OutputPrefs>();
        auto* cmd = app.add_subcommand(
            "demo-train", "train the toy decoder on a synthetic world");
        cmd->add_option("--world", st->world, "world spec JSON (default: built-in demo)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--n", st->n, "number of training items");
        cmd->add_option("--seed", st->seed, "sampling and init seed");
        cmd->add_option("--epochs", st->epochs, "training epochs");
        cmd->add_option("--lr", st->lr, "learning rate");
        cmd->add_option("--weight-decay", st->weight_decay, "decoupled weight decay");
        cmd->add_option("--batch", st->batch, "minibatch size");
        cmd->add_option("--hidden", st->hidden, "decoder hidden width");
        cmd->add_option("--lora-rank", st->lora_rank, "adapter rank (0 disables)");
        cmd->add_option("--lora-alpha", st->lora_alpha, "adapter scale (0 means 2*rank)");
        cmd->add_option("--lora-dropout", st->lora_dropout, "adapter input dropout");
        cmd->add_option("--model-out", st->out, "where to write the trained model")
            ->required();
        add_output_flags(cmd, prefs);
        cmd->callback([st, prefs, &rc] {
            json options = {{"n", st->n},
                            {"seed", st->seed},
                            {"epochs", st->epochs},
                            {"lr", st->lr},
                            {"weight_decay", st->weight_decay},
                            {"batch", st->batch},
                            {"hidden", st->hidden},
                            {"lora_rank", st->lora_rank},
                            {"lora_alpha", st->lora_alpha},
                            {"lora_dropout", st->lora_dropout},
                            {"out", st->out}};
            if (!st->world.empty()) options["world"] = st->world;
            rc = run_engine(df_demo_train, options, *prefs);
        });
    }

    // demo-generate
    {
        struct GenState {
            std::string model, embeddings, out;
            int64_t max_len = 32;
        };
        auto st = std::make_shared<GenState>();
        auto prefs = std::make_shared<OutputPrefs>();
        auto* cmd = app.add_subcommand(
            "demo-generate", "decode structured text from stored embeddings");
        cmd->add_option("--model", st->model, "trained model file")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--embeddings", st->embeddings, "embeddings JSONL")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--max-len", st->max_len, "decode length cap");
        cmd->add_option("--gen-out", st->out,
                        "write generations JSONL here (default: standard output)");
        add_output_flags(cmd, prefs);
        cmd->callback([st, prefs, &rc] {
            json options = {{"model", st->model},
                            {"embeddings", st->embeddings},
                            {"max_len", st->max_len}};
            if (!st->out.empty()) options["out"] = st->out;
            int inner = 0;
            const json result = call_engine_or_exit(df_demo_generate, options, inner);
            if (inner != 0) {
                rc = inner;
                return;
            }
            if (st->out.empty() && !prefs->table && !prefs->csv) {
                // without --gen-out the generations are the stdout artifact
                for (const auto& g : result.at("generations"))
                    std::cout << json{{"schema", "dynoframe.generations/1"},
                                      {"id", g.at("id")},
                                      {"text", g.at("text")}}
                                     .dump()
                              << "\n";
            } else if (prefs->table) {
                std::cout << result.at("table").get<std::string>();
            } else if (prefs->csv) {
                std::cout << result.at("csv").get<std::string>();
            } else {
                std::cout << result.at("report").dump(2) << "\n";
            }
            if (!prefs->out.empty() &&
                !write_file(prefs->out, result.at("report").dump(2) + "\n")) {
                rc = io_failure("could not write report to " + prefs->out);
                return;
            }
            rc = route_manifest(result.at("manifest"), prefs->manifest);
        });
    }

    // augment-check
    {
        struct AugState {
            int64_t kb = 49, kv = 32, n = 256, heads = 4, trials = 100;
            uint64_t seed = 1;
            std::string mode = "augment";
        };
        auto st = std::make_shared<AugState>();
        auto prefs = std::make_shared<OutputPrefs>();
        auto* cmd = app.add_subcommand(
            "augment-check", "self-test the attention fusion invariants");
        cmd->add_option("--kb", st->kb, "backbone token count");
        cmd->add_option("--kv", st->kv, "injected token count");
        cmd->add_option("--n", st->n, "feature width");
        cmd->add_option("--heads", st->heads, "attention heads");
        cmd->add_option("--trials", st->trials, "random trials per check");
        cmd->add_option("--seed", st->seed, "trial seed");
        cmd->add_option("--mode", st->mode, "fusion mode")
            ->check(CLI::IsMember({"augment", "replace"}));
        add_output_flags(cmd, prefs);
        cmd->callback([st, prefs, &rc] {
            const json options = {{"kb", st->kb},       {"kv", st->kv},
                                  {"n", st->n},         {"heads", st->heads},
                                  {"trials", st->trials}, {"seed", st->seed},
                                  {"mode", st->mode}};
            int inner = 0;
            const json result = call_engine_or_exit(df_augment_check, options, inner);
            if (inner != 0) {
                rc = inner;
                return;
            }
            if (prefs->table)
                std::cout << result.at("table").get<std::string>();
            else if (prefs->csv)
                std::cout << result.at("csv").get<std::string>();
            else
                std::cout << result.at("report").dump(2) << "\n";
            if (!prefs->out.empty() &&
                !write_file(prefs->out, result.at("report").dump(2) + "\n")) {
                rc = io_failure("could not write report to " + prefs->out);
                return;
            }
            rc = route_manifest(result.at("manifest"), prefs->manifest);
            if (rc == 0 && !result.at("report").at("pass").get<bool>()) {
                std::cerr << "ERROR E_VALIDATION\naugment-check: one or more checks failed\n";
                rc = 1;
            }
        });
    }

    // pipeline
    {
        struct PipeState {
            std::string world, workdir;
            int64_t n = 1000, hoi_images = 20, epochs = 30, batch = 16, hidden = 64,
                    max_len = 32;
            uint64_t seed = 3;
            double lr = 3e-3, weight_decay = 0.01;
        };
        auto st = std::make_shared<PipeState>();
        auto prefs = std::make_shared<OutputPrefs>();
        auto* cmd = app.add_subcommand(
            "pipeline",
            "generate a world, train the decoder, decode, parse, and score");
        cmd->add_option("--world", st->world, "world spec JSON (default: built-in demo)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--n", st->n, "number of items");
        cmd->add_option("--hoi-images", st->hoi_images, "number of interaction scenes");
        cmd->add_option("--seed", st->seed, "end-to-end seed");
        cmd->add_option("--epochs", st->epochs, "training epochs");
        cmd->add_option("--lr", st->lr, "learning rate");
        cmd->add_option("--weight-decay", st->weight_decay, "decoupled weight decay");
        cmd->add_option("--batch", st->batch, "minibatch size");
        cmd->add_option("--hidden", st->hidden, "decoder hidden width");
        cmd->add_option("--max-len", st->max_len, "decode length cap");
        cmd->add_option("--workdir", st->workdir,
                        "where intermediate files go (default: under the temp dir)");
        add_output_flags(cmd, prefs);
        cmd->callback([st, prefs, &rc] {
            json options = {{"n", st->n},
                            {"hoi_images", st->hoi_images},
                            {"seed", st->seed},
                            {"epochs", st->epochs},
                            {"lr", st->lr},
                            {"weight_decay", st->weight_decay},
                            {"batch", st->batch},
                            {"hidden", st->hidden},
                            {"max_len", st->max_len}};
            if (!st->world.empty()) options["world"] = st->world;
            if (!st->workdir.empty()) options["workdir"] = st->workdir;
            rc = run_engine(df_pipeline, options, *prefs);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "ERROR E_INVALID\n" << e.what() << "\n\n";
        std::cerr << app.help() << std::flush;
        return 1;
    }
    return rc;
}
