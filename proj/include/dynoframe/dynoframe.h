/* C interface to the dynoframe toolkit.
 *
 * Conventions:
 *   - Every function returns df_status; DF_OK means success.
 *   - On failure the thread-local message from df_last_error() describes
 *     what went wrong; it stays valid until the next failing call on the
 *     same thread.
 *   - Output strings (char**) are heap-allocated UTF-8 and must be released
 *     with df_string_free. On failure no output is written.
 *   - The one-shot engines take an options object as JSON text and return a
 *     result object as JSON text. Missing keys take documented defaults;
 *     unknown keys are rejected with DF_E_INVALID.
 */
#ifndef DYNOFRAME_H
#define DYNOFRAME_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum df_status {
    DF_OK = 0,
    DF_E_INVALID = 1,    /* bad argument or option */
    DF_E_PARSE = 2,      /* malformed input text or JSON */
    DF_E_IO = 3,         /* file could not be read or written */
    DF_E_VALIDATION = 4, /* well-formed input violating a data contract */
    DF_E_NUMERIC = 5,    /* non-finite or otherwise unusable numerics */
    DF_E_INTERNAL = 6    /* bug; please report */
} df_status;

/* Library version, e.g. "0.1.0". Static storage; do not free. */
const char* df_version(void);

/* Stable name for a status code ("OK", "E_INVALID", ...). Static storage. */
const char* df_status_name(df_status status);

/* Message from the most recent failing call on this thread, or "" if none. */
const char* df_last_error(void);

/* Release a string returned through a char** out-parameter. NULL is a no-op. */
void df_string_free(char* s);

/* Worker count honoring the DYNOFRAME_JOBS environment variable (default 1). */
df_status df_default_jobs(int* out_jobs);

/* ---- verb lexicon and structured text ---------------------------------- */

typedef struct df_lexicon df_lexicon;

df_status df_lexicon_open(const char* path, df_lexicon** out);
df_status df_lexicon_from_json(const char* json_text, df_lexicon** out);
void df_lexicon_close(df_lexicon* lex);

/* Canonical JSON form of the lexicon. */
df_status df_lexicon_json(const df_lexicon* lex, char** out_json);

/* Parse structured text into a frame. tolerant=0 rejects any deviation from
 * the grammar; tolerant!=0 repairs what it can. The result JSON is
 * {"frame": {...}, "recovered": bool, "issues": [{"kind","token_index","message"}]}. */
df_status df_lexicon_parse_frame(const df_lexicon* lex, const char* text, int tolerant,
                                 char** out_json);

/* Render a frame JSON object ({"verb","fillers"}) as structured text. */
df_status df_lexicon_serialize_frame(const df_lexicon* lex, const char* frame_json,
                                     char** out_text);

/* Present-continuous inflection of a lemma under the default rules. */
df_status df_gerund(const char* lemma, char** out_text);

/* ---- trained decoder models -------------------------------------------- */

typedef struct df_model df_model;

df_status df_model_open(const char* path, df_model** out);
void df_model_close(df_model* model);

/* {"vocab": n_tokens, "hidden": h, "d_img": d} */
df_status df_model_info(const df_model* model, char** out_json);

/* Greedy decode conditioned on one image embedding of width dim. */
df_status df_model_generate(const df_model* model, const double* image, size_t dim,
                            size_t max_len, char** out_text);

/* ---- one-shot engines ---------------------------------------------------
 * Each takes an options JSON object (text may be NULL for "{}") and yields a
 * result JSON object; report-shaped results carry "report", "table", "csv",
 * and "manifest" members. */

df_status df_eval_sir(const char* options_json, char** out_json);
df_status df_eval_gsr(const char* options_json, char** out_json);
df_status df_eval_hoi(const char* options_json, char** out_json);
df_status df_eval_hhi(const char* options_json, char** out_json);
df_status df_probe(const char* options_json, char** out_json);
df_status df_correlate(const char* options_json, char** out_json);
df_status df_gen_world(const char* options_json, char** out_json);
df_status df_demo_train(const char* options_json, char** out_json);
df_status df_demo_generate(const char* options_json, char** out_json);
df_status df_augment_check(const char* options_json, char** out_json);
df_status df_pipeline(const char* options_json, char** out_json);

/* Provenance record for work the caller drove itself. Options:
 * {"command", "seed"?, "options"?, "inputs"?: [path...], "outputs"?: [path...]} */
df_status df_make_manifest(const char* options_json, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* DYNOFRAME_H */
