#include "dynoframe/dynoframe.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>

#include "dynoframe/frames.hpp"
#include "dynoframe/parallel.hpp"
#include "dynoframe/runner.hpp"
#include "dynoframe/structparse.hpp"
#include "dynoframe/toylm.hpp"
#include "dynoframe/version.hpp"

struct df_lexicon {
    df::frames::Lexicon impl;
};

struct df_model {
    df::toylm::DecoderModel impl;
};

namespace {

using df::io::json;

thread_local std::string g_last_error;

df_status status_of(df::errc code) {
    switch (code) {
    case df::errc::invalid_argument: return DF_E_INVALID;
    case df::errc::parse_error: return DF_E_PARSE;
    case df::errc::io_error: return DF_E_IO;
    case df::errc::validation_error: return DF_E_VALIDATION;
    case df::errc::numeric_error: return DF_E_NUMERIC;
    case df::errc::internal_error: return DF_E_INTERNAL;
    }
    return DF_E_INTERNAL;
}

// C callers pair every out-string with df_string_free, so allocate with malloc.
char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) std::abort();
    std::memcpy(out, s.data(), s.size() + 1);
    return out;
}

template <typename Fn> df_status guarded(Fn&& fn) {
    try {
        fn();
        return DF_OK;
    } catch (const df::Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const json::exception& e) {
        g_last_error = e.what();
        return DF_E_PARSE;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return DF_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return DF_E_INTERNAL;
    }
}

df_status require(const void* p, const char* what) {
    if (p) return DF_OK;
    g_last_error = std::string(what) + " must not be null";
    return DF_E_INVALID;
}

json parse_options(const char* options_json) {
    if (!options_json || !*options_json) return json::object();
    json doc = json::parse(options_json, nullptr, false);
    if (doc.is_discarded()) df::fail(df::errc::parse_error, "options are not valid JSON");
    return doc;
}

using RunnerFn = json (*)(const json&);

df_status run_engine(RunnerFn fn, const char* options_json, char** out_json) {
    if (df_status s = require(out_json, "out_json"); s != DF_OK) return s;
    return guarded([&] { *out_json = dup_string(fn(parse_options(options_json)).dump()); });
}

} // namespace

extern "C" {

const char* df_version(void) { return DF_VERSION_STRING; }

const char* df_status_name(df_status status) {
    switch (status) {
    case DF_OK: return "OK";
    case DF_E_INVALID: return "E_INVALID";
    case DF_E_PARSE: return "E_PARSE";
    case DF_E_IO: return "E_IO";
    case DF_E_VALIDATION: return "E_VALIDATION";
    case DF_E_NUMERIC: return "E_NUMERIC";
    case DF_E_INTERNAL: return "E_INTERNAL";
    }
    return "E_INTERNAL";
}

const char* df_last_error(void) { return g_last_error.c_str(); }

void df_string_free(char* s) { std::free(s); }

df_status df_default_jobs(int* out_jobs) {
    if (df_status s = require(out_jobs, "out_jobs"); s != DF_OK) return s;
    return guarded([&] { *out_jobs = df::default_jobs(); });
}

df_status df_lexicon_open(const char* path, df_lexicon** out) {
    if (df_status s = require(path, "path"); s != DF_OK) return s;
    if (df_status s = require(out, "out"); s != DF_OK) return s;
    return guarded([&] { *out = new df_lexicon{df::frames::Lexicon::load(path)}; });
}

df_status df_lexicon_from_json(const char* json_text, df_lexicon** out) {
    if (df_status s = require(json_text, "json_text"); s != DF_OK) return s;
    if (df_status s = require(out, "out"); s != DF_OK) return s;
    return guarded([&] {
        *out = new df_lexicon{
            df::frames::Lexicon::from_json(json::parse(json_text), "lexicon")};
    });
}

void df_lexicon_close(df_lexicon* lex) { delete lex; }

df_status df_lexicon_json(const df_lexicon* lex, char** out_json) {
    if (df_status s = require(lex, "lex"); s != DF_OK) return s;
    if (df_status s = require(out_json, "out_json"); s != DF_OK) return s;
    return guarded([&] { *out_json = dup_string(lex->impl.to_json().dump()); });
}

df_status df_lexicon_parse_frame(const df_lexicon* lex, const char* text, int tolerant,
                                 char** out_json) {
    if (df_status s = require(lex, "lex"); s != DF_OK) return s;
    if (df_status s = require(text, "text"); s != DF_OK) return s;
    if (df_status s = require(out_json, "out_json"); s != DF_OK) return s;
    return guarded([&] {
        const auto mode = tolerant ? df::structparse::ParseMode::tolerant
                                   : df::structparse::ParseMode::strict;
        const auto parsed = df::structparse::parse_frame(text, lex->impl, mode);
        json issues = json::array();
        for (const auto& issue : parsed.diags.issues)
            issues.push_back({{"kind", issue.kind},
                              {"token_index", issue.token_index},
                              {"message", issue.message}});
        const json result = {{"frame", parsed.frame.to_json()},
                             {"recovered", parsed.diags.recovered},
                             {"issues", std::move(issues)}};
        *out_json = dup_string(result.dump());
    });
}

df_status df_lexicon_serialize_frame(const df_lexicon* lex, const char* frame_json,
                                     char** out_text) {
    if (df_status s = require(lex, "lex"); s != DF_OK) return s;
    if (df_status s = require(frame_json, "frame_json"); s != DF_OK) return s;
    if (df_status s = require(out_text, "out_text"); s != DF_OK) return s;
    return guarded([&] {
        const auto frame =
            df::frames::frame_from_json(json::parse(frame_json), lex->impl, "frame");
        *out_text = dup_string(df::structparse::serialize_frame(frame, lex->impl));
    });
}

df_status df_gerund(const char* lemma, char** out_text) {
    if (df_status s = require(lemma, "lemma"); s != DF_OK) return s;
    if (df_status s = require(out_text, "out_text"); s != DF_OK) return s;
    return guarded([&] { *out_text = dup_string(df::structparse::gerund(lemma)); });
}

df_status df_model_open(const char* path, df_model** out) {
    if (df_status s = require(path, "path"); s != DF_OK) return s;
    if (df_status s = require(out, "out"); s != DF_OK) return s;
    return guarded([&] { *out = new df_model{df::toylm::DecoderModel::load(path)}; });
}

void df_model_close(df_model* model) { delete model; }

df_status df_model_info(const df_model* model, char** out_json) {
    if (df_status s = require(model, "model"); s != DF_OK) return s;
    if (df_status s = require(out_json, "out_json"); s != DF_OK) return s;
    return guarded([&] {
        const json info = {{"vocab", model->impl.vocab().size()},
                           {"hidden", model->impl.hidden()},
                           {"d_img", model->impl.d_img()}};
        *out_json = dup_string(info.dump());
    });
}

df_status df_model_generate(const df_model* model, const double* image, size_t dim,
                            size_t max_len, char** out_text) {
    if (df_status s = require(model, "model"); s != DF_OK) return s;
    if (df_status s = require(image, "image"); s != DF_OK) return s;
    if (df_status s = require(out_text, "out_text"); s != DF_OK) return s;
    return guarded([&] {
        if (dim != model->impl.d_img())
            df::fail(df::errc::invalid_argument,
                     "image width " + std::to_string(dim) + " does not match the model (" +
                         std::to_string(model->impl.d_img()) + ")");
        const df::Vec vec(image, image + dim);
        const auto ids = model->impl.generate(vec, max_len);
        *out_text = dup_string(model->impl.vocab().decode(ids));
    });
}

df_status df_eval_sir(const char* options_json, char** out_json) {
    return run_engine(df::runner::eval_sir, options_json, out_json);
}
df_status df_eval_gsr(const char* options_json, char** out_json) {
    return run_engine(df::runner::eval_gsr, options_json, out_json);
}
df_status df_eval_hoi(const char* options_json, char** out_json) {
    return run_engine(df::runner::eval_hoi, options_json, out_json);
}
df_status df_eval_hhi(const char* options_json, char** out_json) {
    return run_engine(df::runner::eval_hhi, options_json, out_json);
}
df_status df_probe(const char* options_json, char** out_json) {
    return run_engine(df::runner::probe_run, options_json, out_json);
}
df_status df_correlate(const char* options_json, char** out_json) {
    return run_engine(df::runner::correlate_run, options_json, out_json);
}
df_status df_gen_world(const char* options_json, char** out_json) {
    return run_engine(df::runner::gen_world, options_json, out_json);
}
df_status df_demo_train(const char* options_json, char** out_json) {
    return run_engine(df::runner::demo_train, options_json, out_json);
}
df_status df_demo_generate(const char* options_json, char** out_json) {
    return run_engine(df::runner::demo_generate, options_json, out_json);
}
df_status df_augment_check(const char* options_json, char** out_json) {
    return run_engine(df::runner::augment_check, options_json, out_json);
}
df_status df_pipeline(const char* options_json, char** out_json) {
    return run_engine(df::runner::pipeline_run, options_json, out_json);
}
df_status df_make_manifest(const char* options_json, char** out_json) {
    return run_engine(df::runner::make_manifest, options_json, out_json);
}

} // extern "C"
