#include "qf/config.hpp"

#include "qf/kernels.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace qf {

using nlohmann::json;
using sym::ConfigError;

namespace {

class TomlReader {
public:
    explicit TomlReader(const std::string& text) : s_(text) {}

    json parse() {
        json root = json::object();
        json* table = &root;
        while (true) {
            skip_space_and_comments(true);
            if (at_end()) break;
            if (peek() == '[') {
                table = &open_table(root);
            } else {
                const std::string key = read_key();
                skip_inline_space();
                expect('=');
                skip_inline_space();
                json value = read_value();
                if (table->contains(key)) fail("duplicate key '" + key + "'");
                (*table)[key] = std::move(value);
            }
            end_of_line();
        }
        return root;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
    int line_ = 1;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
    }
    [[nodiscard]] bool at_end() const { return pos_ >= s_.size(); }
    [[nodiscard]] char peek() const { return at_end() ? '\0' : s_[pos_]; }
    char get() {
        const char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        get();
    }

    void skip_inline_space() {
        while (!at_end() && (peek() == ' ' || peek() == '\t')) get();
    }
    void skip_comment() {
        while (!at_end() && peek() != '\n') get();
    }
    void skip_space_and_comments(bool newlines) {
        while (!at_end()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n'))
                get();
            else if (c == '#')
                skip_comment();
            else
                break;
        }
    }
    void end_of_line() {
        skip_inline_space();
        if (peek() == '#') skip_comment();
        if (peek() == '\r') get();
        if (!at_end() && peek() != '\n') fail("unexpected text after value");
    }

    static bool bare_key_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
    }

    std::string read_key() {
        if (peek() == '"') return read_basic_string();
        if (peek() == '\'') return read_literal_string();
        std::string k;
        while (!at_end() && bare_key_char(peek())) k += get();
        if (k.empty()) fail("expected a key");
        if (peek() == '.') fail("dotted keys are not supported");
        return k;
    }

    json& open_table(json& root) {
        get();
        if (peek() == '[') fail("arrays of tables are not supported");
        json* t = &root;
        while (true) {
            skip_inline_space();
            const std::string part = read_key_part();
            skip_inline_space();
            if (!t->contains(part)) (*t)[part] = json::object();
            t = &(*t)[part];
            if (!t->is_object()) fail("'" + part + "' is not a table");
            if (peek() == '.') {
                get();
                continue;
            }
            expect(']');
            return *t;
        }
    }

    std::string read_key_part() {
        if (peek() == '"') return read_basic_string();
        std::string k;
        while (!at_end() && bare_key_char(peek())) k += get();
        if (k.empty()) fail("expected a table name");
        return k;
    }

    std::string read_basic_string() {
        expect('"');
        if (s_.compare(pos_, 2, "\"\"") == 0) fail("multi-line strings are not supported");
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            const char c = get();
            if (c == '"') break;
            if (c != '\\') {
                out += c;
                continue;
            }
            const char e = get();
            switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
            }
        }
        return out;
    }

    std::string read_literal_string() {
        expect('\'');
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            const char c = get();
            if (c == '\'') break;
            out += c;
        }
        return out;
    }

    json read_array() {
        expect('[');
        json arr = json::array();
        while (true) {
            skip_space_and_comments(true);
            if (peek() == ']') {
                get();
                return arr;
            }
            arr.push_back(read_value());
            skip_space_and_comments(true);
            if (peek() == ',') {
                get();
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    json read_value() {
        const char c = peek();
        if (c == '"') return read_basic_string();
        if (c == '\'') return read_literal_string();
        if (c == '[') return read_array();
        if (c == '{') fail("inline tables are not supported");
        std::string tok;
        while (!at_end() && (bare_key_char(peek()) || peek() == '.' || peek() == '+')) tok += get();
        if (tok == "true") return true;
        if (tok == "false") return false;
        std::string clean;
        for (char ch : tok)
            if (ch != '_') clean += ch;
        if (clean.empty()) fail("expected a value");
        const bool is_float = clean.find_first_of(".eE") != std::string::npos && clean.find_first_of("xob") == std::string::npos;
        try {
            std::size_t used = 0;
            if (is_float) {
                const double v = std::stod(clean, &used);
                if (used == clean.size()) return v;
            } else {
                const long long v = std::stoll(clean, &used, 10);
                if (used == clean.size()) return v;
            }
        } catch (const std::exception&) {
        }
        fail("invalid value '" + tok + "'");
    }
};

std::string as_string(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return v.dump();
    throw ConfigError("'" + key + "' must be a string or a number");
}

double as_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
    return v.get<double>();
}

std::array<std::string, 3> as_triple(const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 3) throw ConfigError("'" + key + "' must be an array of three entries");
    return {as_string(v[0], key), as_string(v[1], key), as_string(v[2], key)};
}

void check_keys(const json& table, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : table.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ConfigError("unknown key '" + k + "' in " + where);
    }
}

}  // namespace

json parse_toml(const std::string& text) { return TomlReader(text).parse(); }

json load_toml(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_toml(ss.str());
}

StructureSource builtin_source(const std::string& spec) {
    StructureSource src;
    src.builtin = spec;
    return src;
}

StructureSource read_structure_source(const json& t) {
    if (!t.is_object()) throw ConfigError("[structure] must be a table");
    check_keys(t, "[structure]", {"builtin", "name", "mu", "lambda", "d1", "coordinates"});
    StructureSource src;
    if (t.contains("builtin")) src.builtin = as_string(t["builtin"], "builtin");
    if (t.contains("name")) src.name = as_string(t["name"], "name");
    if (t.contains("mu")) src.mu = as_triple(t["mu"], "mu");
    if (t.contains("lambda")) src.lambda = as_triple(t["lambda"], "lambda");
    if (t.contains("d1")) src.d1 = as_triple(t["d1"], "d1");
    if (t.contains("coordinates")) src.coordinates = as_triple(t["coordinates"], "coordinates");
    if (src.mu.has_value() != src.lambda.has_value()) throw ConfigError("[structure] needs both mu and lambda");
    if (src.mu && src.d1) throw ConfigError("[structure] takes either mu/lambda or d1, not both");
    if ((src.mu || src.d1) && t.contains("builtin")) throw ConfigError("[structure] mixes builtin with a presentation");
    return src;
}

StructurePtr make_structure(const StructureSource& src) {
    auto parse3 = [](const std::array<std::string, 3>& v) {
        return std::array<sym::FieldExpr, 3>{sym::FieldExpr::parse(v[0]), sym::FieldExpr::parse(v[1]),
                                             sym::FieldExpr::parse(v[2])};
    };
    if (src.mu)
        return std::make_shared<CoframeStructure>(src.name.empty() ? "coframe" : src.name, parse3(*src.mu),
                                                  parse3(*src.lambda), src.coordinates);
    if (src.d1) return std::make_shared<FrameStructure>(src.name.empty() ? "frame" : src.name, parse3(*src.d1));
    return builtin_structure(src.builtin);
}

void apply_config(RunConfig& cfg, const json& doc) {
    check_keys(doc, "config", {"structure", "gauge", "metric", "samples", "tolerance", "output"});
    if (doc.contains("structure")) {
        const json& s = doc["structure"];
        cfg.structure = s.is_string() ? builtin_source(s.get<std::string>()) : read_structure_source(s);
    }
    if (doc.contains("gauge")) {
        const json& g = doc["gauge"];
        check_keys(g, "[gauge]", {"tau", "theta", "fefferman"});
        if (g.contains("tau")) cfg.gauge_tau = as_string(g["tau"], "tau");
        if (g.contains("theta")) cfg.gauge_theta = as_string(g["theta"], "theta");
        if (g.contains("fefferman")) {
            if (!g["fefferman"].is_boolean()) throw ConfigError("'fefferman' must be a boolean");
            cfg.fefferman = g["fefferman"].get<bool>();
        }
    }
    if (doc.contains("metric")) {
        const json& m = doc["metric"];
        check_keys(m, "[metric]", {"P", "a", "s", "x", "H", "psi"});
        for (auto [key, slot] : {std::pair{"P", &cfg.P}, {"a", &cfg.a}, {"s", &cfg.s}, {"x", &cfg.x}, {"H", &cfg.H},
                                 {"psi", &cfg.psi}})
            if (m.contains(key)) *slot = as_string(m[key], key);
    }
    if (doc.contains("samples")) {
        const json& s = doc["samples"];
        check_keys(s, "[samples]", {"count", "seed", "box", "margin", "points"});
        if (s.contains("count")) {
            if (!s["count"].is_number_integer() || s["count"].get<long long>() <= 0)
                throw ConfigError("'count' must be a positive integer");
            cfg.samples.count = s["count"].get<std::size_t>();
        }
        if (s.contains("seed")) {
            if (!s["seed"].is_number_integer() || s["seed"].get<long long>() < 0)
                throw ConfigError("'seed' must be a non-negative integer");
            cfg.samples.seed = s["seed"].get<std::uint64_t>();
        }
        if (s.contains("box")) cfg.samples.box = as_number(s["box"], "box");
        if (s.contains("margin")) cfg.samples.margin = as_number(s["margin"], "margin");
        if (s.contains("points")) {
            const json& pts = s["points"];
            if (!pts.is_array()) throw ConfigError("'points' must be an array");
            cfg.samples.points.clear();
            for (const json& p : pts) {
                if (!p.is_array() || p.size() != 4) throw ConfigError("each point needs four coordinates (x1, x2, x3, r)");
                Point4 q{};
                for (std::size_t i = 0; i < 4; ++i) q[i] = as_number(p[i], "points");
                cfg.samples.points.push_back(q);
            }
        }
    }
    if (doc.contains("tolerance")) cfg.tolerance = as_number(doc["tolerance"], "tolerance");
    if (doc.contains("output")) {
        const json& o = doc["output"];
        check_keys(o, "[output]", {"format", "path"});
        if (o.contains("format")) cfg.format = as_string(o["format"], "format");
        if (o.contains("path")) cfg.out = as_string(o["path"], "path");
    }
}

std::vector<Point4> resolve_samples(const SampleSpec& s) {
    if (!s.points.empty()) return s.points;
    return sample_points(s.count, s.seed, s.box, s.margin);
}

}  // namespace qf
