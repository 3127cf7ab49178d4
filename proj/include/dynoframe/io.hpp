#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynoframe/error.hpp"

namespace df::io {

using json = nlohmann::json;

// Parses one JSON document; errors carry `context` (usually "file:line").
json parse_json(const std::string& text, const std::string& context);

json load_json_file(const std::string& path);

// Line-delimited JSON. Blank lines are skipped; parse failures report the
// 1-based line number.
std::vector<json> load_jsonl(const std::string& path);
void for_each_jsonl(std::istream& in, const std::string& name,
                    const std::function<void(const json&, size_t line)>& fn);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Field accessors that fail with a message naming the offending key.
std::string get_string(const json& obj, const std::string& key, const std::string& ctx);
json get_field(const json& obj, const std::string& key, const std::string& ctx);

uint64_t file_fnv1a64(const std::string& path, uint64_t* bytes_out = nullptr);

// Run manifest: everything needed to reproduce an invocation, including the
// volatile parts (timestamps) that are kept out of report JSON on purpose.
class ManifestBuilder {
public:
    explicit ManifestBuilder(std::string command);
    void set_seed(uint64_t seed);
    void add_option(const std::string& key, const json& value);
    void add_input(const std::string& path);
    void add_output(const std::string& path);
    json finish() const;

private:
    json doc_;
    json inputs_ = json::array();
    json outputs_ = json::array();
};

} // namespace df::io
