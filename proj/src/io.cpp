#include "dynoframe/io.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "dynoframe/rng.hpp"
#include "dynoframe/version.hpp"

namespace df::io {

json parse_json(const std::string& text, const std::string& context) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded())
        fail(errc::parse_error, context + ": malformed JSON");
    return doc;
}

json load_json_file(const std::string& path) {
    return parse_json(read_text_file(path), path);
}

std::vector<json> load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io_error, "cannot open " + path);
    std::vector<json> out;
    for_each_jsonl(in, path, [&](const json& j, size_t) { out.push_back(j); });
    return out;
}

void for_each_jsonl(std::istream& in, const std::string& name,
                    const std::function<void(const json&, size_t line)>& fn) {
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        fn(parse_json(line, name + ":" + std::to_string(lineno)), lineno);
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io_error, "cannot open " + path + " for writing");
    out << text;
    if (!out) fail(errc::io_error, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io_error, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string get_string(const json& obj, const std::string& key, const std::string& ctx) {
    const json& v = get_field(obj, key, ctx);
    if (!v.is_string())
        fail(errc::parse_error, ctx + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

json get_field(const json& obj, const std::string& key, const std::string& ctx) {
    if (!obj.is_object() || !obj.contains(key))
        fail(errc::parse_error, ctx + ": missing field '" + key + "'");
    return obj.at(key);
}

uint64_t file_fnv1a64(const std::string& path, uint64_t* bytes_out) {
    const std::string data = read_text_file(path);
    if (bytes_out) *bytes_out = data.size();
    return fnv1a64(data.data(), data.size());
}

ManifestBuilder::ManifestBuilder(std::string command) {
    doc_["schema"] = "dynoframe.manifest/1";
    doc_["tool"] = {{"name", "dynoframe"}, {"version", DF_VERSION_STRING}};
    doc_["command"] = std::move(command);
    doc_["options"] = json::object();
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    doc_["started_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
}

void ManifestBuilder::set_seed(uint64_t seed) { doc_["seed"] = seed; }

void ManifestBuilder::add_option(const std::string& key, const json& value) {
    doc_["options"][key] = value;
}

void ManifestBuilder::add_input(const std::string& path) {
    uint64_t bytes = 0;
    json entry;
    entry["path"] = path;
    try {
        entry["fnv1a64"] = file_fnv1a64(path, &bytes);
        entry["bytes"] = bytes;
    } catch (const Error&) {
        entry["fnv1a64"] = nullptr; // stdin or already-consumed stream
    }
    inputs_.push_back(entry);
}

void ManifestBuilder::add_output(const std::string& path) {
    uint64_t bytes = 0;
    json entry;
    entry["path"] = path;
    try {
        entry["fnv1a64"] = file_fnv1a64(path, &bytes);
        entry["bytes"] = bytes;
    } catch (const Error&) {
        entry["fnv1a64"] = nullptr;
    }
    outputs_.push_back(entry);
}

json ManifestBuilder::finish() const {
    json doc = doc_;
    doc["inputs"] = inputs_;
    doc["outputs"] = outputs_;
    return doc;
}

} // namespace df::io
