#pragma once

#include <string>

#include "dynoframe/io.hpp"

namespace df::runner {

using io::json;

// One entry point per subcommand. Options arrive as a JSON object (missing
// keys take defaults, unknown keys are rejected); the result carries the
// command's payload plus a "manifest" object with input/output hashes, the
// seed, and timing. Report-shaped results also include pre-rendered "table"
// and "csv" strings so thin frontends never re-derive them.

json eval_sir(const json& opts);
json eval_gsr(const json& opts);
json eval_hoi(const json& opts);
json eval_hhi(const json& opts);
json probe_run(const json& opts);
json correlate_run(const json& opts);
json gen_world(const json& opts);
json demo_train(const json& opts);
json demo_generate(const json& opts);
json augment_check(const json& opts);
json pipeline_run(const json& opts);

// Manifest for work the caller drove itself (line-mode parse/serialize):
// {"command", "seed"?, "options"?, "inputs": [path...], "outputs": [path...]}.
json make_manifest(const json& opts);

} // namespace df::runner
