#include <cstdint>
#include <cstdio>
#include <set>

#include "agents/templates.hpp"
#include "alphalogics/agents.hpp"
#include "alphalogics/error.hpp"

namespace alphalogics::agents {

namespace {

std::vector<AgentTemplate> load_templates() {
    std::vector<AgentTemplate> out;
    for (const auto& [name, text] : detail::template_texts()) {
        const Json j = Json::parse(text);
        AgentTemplate t;
        t.name = std::string(name);
        t.system = j.at("system").get<std::string>();
        t.instruction = j.at("instruction").get<std::string>();
        t.input_schema = j.at("input_schema");
        t.output_schema = j.at("output_schema");
        // retrieval and direction hints are carried through when configured
        if (t.name == kLogicGenerator) t.optional_inputs = {"RAG", "potential_direction_content"};
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<std::string> split(std::string_view s, std::string_view sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t k = s.find(sep, start);
        out.emplace_back(s.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start));
        if (k == std::string_view::npos) return out;
        start = k + sep.size();
    }
}

const std::set<std::string>& known_types() {
    static const std::set<std::string> t = {"string", "int", "float", "object", "null", "array", "bool"};
    return t;
}

bool matches_type(const std::string& type, const Json& v) {
    if (type == "string") return v.is_string();
    if (type == "int") {
        if (v.is_number_integer()) return true;
        return v.is_number_float() && std::isfinite(v.get<double>()) && v.get<double>() == std::floor(v.get<double>());
    }
    // metrics can be undefined (e.g. a flat IC series); null stands in for them
    if (type == "float") return v.is_number() || v.is_null();
    if (type == "object") return v.is_object();
    if (type == "null") return v.is_null();
    if (type == "array") return v.is_array();
    if (type == "bool") return v.is_boolean();
    return false;
}

void check_leaf(const std::string& spec, const Json& v, const std::string& path, std::vector<std::string>& errs) {
    if (spec.size() < 2 || spec.front() != '<' || spec.back() != '>') {
        // descriptive text such as "positive integer"
        if (v.is_null()) errs.push_back(path + ": required value is null");
        return;
    }
    const std::string inner = spec.substr(1, spec.size() - 2);
    if (inner.find('|') != std::string::npos) {
        const auto options = split(inner, "|");
        if (v.is_string())
            for (const std::string& o : options)
                if (v.get<std::string>() == o) return;
        if (v.is_number_integer())
            for (const std::string& o : options)
                if ((o == "+1" && v.get<long long>() == 1) || (o == "-1" && v.get<long long>() == -1)) return;
        errs.push_back(path + ": expected one of " + inner + ", got " + v.dump());
        return;
    }
    const auto types = split(inner, " or ");
    bool typed = true;
    for (const std::string& t : types) typed = typed && known_types().count(t);
    if (!typed) {
        // a named placeholder such as "<C or B field>" stands for free text
        if (!v.is_string()) errs.push_back(path + ": expected a string, got " + v.type_name());
        return;
    }
    for (const std::string& t : types)
        if (matches_type(t, v)) return;
    errs.push_back(path + ": expected " + inner + ", got " + v.type_name());
}

} // namespace

const std::vector<AgentTemplate>& all_templates() {
    static const std::vector<AgentTemplate> t = load_templates();
    return t;
}

const AgentTemplate& find_template(std::string_view name) {
    for (const AgentTemplate& t : all_templates())
        if (t.name == name) return t;
    throw PreconditionError("unknown agent '" + std::string(name) + "'");
}

std::vector<std::string> validate(const Json& schema, const Json& value, KeyPolicy keys, const std::string& path) {
    std::vector<std::string> errs;
    if (schema.is_string()) {
        check_leaf(schema.get<std::string>(), value, path, errs);
    } else if (schema.is_array()) {
        if (!value.is_array()) {
            errs.push_back(path + ": expected an array, got " + value.type_name());
        } else if (!schema.empty()) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                auto sub = validate(schema[0], value[i], keys, path + "[" + std::to_string(i) + "]");
                errs.insert(errs.end(), sub.begin(), sub.end());
            }
        }
    } else if (schema.is_object()) {
        if (!value.is_object()) {
            errs.push_back(path + ": expected an object, got " + value.type_name());
            return errs;
        }
        for (const auto& [key, sub_schema] : schema.items()) {
            if (!value.contains(key)) {
                errs.push_back(path + ": missing field '" + key + "'");
                continue;
            }
            auto sub = validate(sub_schema, value.at(key), keys, path + "." + key);
            errs.insert(errs.end(), sub.begin(), sub.end());
        }
        if (keys == KeyPolicy::Exact)
            for (const auto& [key, _] : value.items())
                if (!schema.contains(key)) errs.push_back(path + ": unexpected field '" + key + "'");
    }
    return errs;
}

std::vector<std::string> validate_input(const AgentTemplate& t, const Json& payload) {
    if (!payload.is_object()) return {"$: payload must be an object"};
    Json core = payload;
    std::vector<std::string> errs;
    for (const std::string& key : t.optional_inputs) {
        if (!core.contains(key)) continue;
        auto sub = validate("<string or null>", core[key], KeyPolicy::Exact, "$." + key);
        errs.insert(errs.end(), sub.begin(), sub.end());
        core.erase(key);
    }
    auto sub = validate(t.input_schema, core, KeyPolicy::Exact);
    errs.insert(errs.end(), sub.begin(), sub.end());
    return errs;
}

std::vector<std::string> validate_output(const AgentTemplate& t, const Json& payload) {
    return validate(t.output_schema, payload, KeyPolicy::AllowExtra);
}

std::string fingerprint(const Json& payload) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : payload.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::optional<Json> extract_json(std::string_view text) {
    auto attempt = [](std::string_view s) -> std::optional<Json> {
        Json j = Json::parse(s, nullptr, false);
        if (j.is_discarded()) return std::nullopt;
        return j;
    };
    if (auto j = attempt(text)) return j;
    const std::size_t open = text.find('{'), close = text.rfind('}');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open)
        return attempt(text.substr(open, close - open + 1));
    return std::nullopt;
}

} // namespace alphalogics::agents
