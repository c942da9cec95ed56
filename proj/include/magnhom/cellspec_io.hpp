#pragma once

// Cell-spec file format: a small TOML-style document with `resolution`,
// an array of `[[phases]]` tables (each optionally carrying a
// `[phases.anisotropy]` subtable), and either an explicit `voxel_map`
// (base64 string or integer array, k fastest, then j, then i) or a
// `[generator]` table. The writer emits the same dialect and the
// load(save(cell)) round trip is lossless.
//
// Example:
//
//   resolution = 8
//
//   [[phases]]
//   a_ex = 1.0
//   M_s = 1.0
//
//   [phases.anisotropy]
//   variant = "uniaxial"
//   kappa = 0.5
//   axis = [0.0, 0.0, 1.0]
//
//   [[phases]]
//   a_ex = 4.0
//   M_s = 0.0
//
//   [generator]
//   kind = "laminate"
//   axis = 1
//   fractions = [0.5, 0.5]

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "magnhom/material.hpp"

namespace magnhom {

struct CellSpecParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CellSpecValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cellspec {

// --- base64 ----------------------------------------------------------------

inline const char* b64_alphabet() {
    return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

inline std::string b64_encode(const std::vector<std::uint8_t>& data) {
    const char* tab = b64_alphabet();
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= data.size()) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out += tab[(v >> 18) & 63];
        out += tab[(v >> 12) & 63];
        out += tab[(v >> 6) & 63];
        out += tab[v & 63];
        i += 3;
    }
    std::size_t rest = data.size() - i;
    if (rest == 1) {
        std::uint32_t v = data[i] << 16;
        out += tab[(v >> 18) & 63];
        out += tab[(v >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out += tab[(v >> 18) & 63];
        out += tab[(v >> 12) & 63];
        out += tab[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

inline std::vector<std::uint8_t> b64_decode(const std::string& text) {
    std::array<int, 256> rev;
    rev.fill(-1);
    const char* tab = b64_alphabet();
    for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(tab[i])] = i;
    std::vector<std::uint8_t> out;
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r' || c == ' ') continue;
        int v = rev[static_cast<unsigned char>(c)];
        if (v < 0) throw CellSpecParseError("invalid base64 character in voxel_map");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

// --- value / table model ----------------------------------------------------

struct Value {
    enum class Kind { Number, String, Bool, Array } kind = Kind::Number;
    double num = 0.0;
    bool is_integer = false;
    std::string str;
    bool boolean = false;
    std::vector<Value> array;
};

using Table = std::map<std::string, Value>;

struct Doc {
    Table root;
    std::vector<std::pair<Table, Table>> phases;  // (phase keys, anisotropy keys)
    Table generator;
    bool has_generator = false;
};

// --- tokenizing helpers ------------------------------------------------------

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"') in_string = !in_string;
        if (c == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline Value parse_value(const std::string& raw, int line_no);

inline std::vector<std::string> split_array_items(const std::string& body, int line_no) {
    std::vector<std::string> items;
    int depth = 0;
    bool in_string = false;
    std::string cur;
    for (char c : body) {
        if (c == '"') in_string = !in_string;
        if (!in_string) {
            if (c == '[') ++depth;
            if (c == ']') --depth;
            if (c == ',' && depth == 0) {
                items.push_back(cur);
                cur.clear();
                continue;
            }
        }
        cur += c;
    }
    if (depth != 0 || in_string)
        throw CellSpecParseError("unbalanced array on line " + std::to_string(line_no));
    if (!trim(cur).empty()) items.push_back(cur);
    return items;
}

inline Value parse_value(const std::string& raw, int line_no) {
    std::string s = trim(raw);
    if (s.empty()) throw CellSpecParseError("empty value on line " + std::to_string(line_no));
    Value v;
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw CellSpecParseError("unterminated string on line " + std::to_string(line_no));
        v.kind = Value::Kind::String;
        v.str = s.substr(1, s.size() - 2);
        return v;
    }
    if (s.front() == '[') {
        if (s.back() != ']')
            throw CellSpecParseError("unterminated array on line " + std::to_string(line_no));
        v.kind = Value::Kind::Array;
        for (const std::string& item : split_array_items(s.substr(1, s.size() - 2), line_no))
            v.array.push_back(parse_value(item, line_no));
        return v;
    }
    if (s == "true" || s == "false") {
        v.kind = Value::Kind::Bool;
        v.boolean = (s == "true");
        return v;
    }
    char* end = nullptr;
    v.num = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw CellSpecParseError("cannot parse value '" + s + "' on line " +
                                 std::to_string(line_no));
    v.is_integer = s.find_first_of(".eE") == std::string::npos;
    return v;
}

inline Doc parse_document(std::istream& in) {
    Doc doc;
    Table* target = &doc.root;
    std::string line;
    std::string pending;  // continuation buffer for multi-line arrays
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string text = trim(strip_comment(line));
        if (!pending.empty()) {
            pending += " " + text;
            int depth = 0;
            bool in_string = false;
            for (char c : pending) {
                if (c == '"') in_string = !in_string;
                if (!in_string && c == '[') ++depth;
                if (!in_string && c == ']') --depth;
            }
            if (depth > 0) continue;
            text = pending;
            pending.clear();
        }
        if (text.empty()) continue;
        if (text.front() == '[' && text.size() > 1 && text[1] == '[') {
            if (trim(text) != "[[phases]]")
                throw CellSpecParseError("unknown array table on line " + std::to_string(line_no));
            doc.phases.emplace_back();
            target = &doc.phases.back().first;
            continue;
        }
        if (text.front() == '[') {
            std::string name = trim(text.substr(1, text.find(']') - 1));
            if (name == "generator") {
                doc.has_generator = true;
                target = &doc.generator;
            } else if (name == "phases.anisotropy") {
                if (doc.phases.empty())
                    throw CellSpecParseError("[phases.anisotropy] before any [[phases]] (line " +
                                             std::to_string(line_no) + ")");
                target = &doc.phases.back().second;
            } else {
                throw CellSpecParseError("unknown table [" + name + "] on line " +
                                         std::to_string(line_no));
            }
            continue;
        }
        std::size_t eq = std::string::npos;
        {
            bool in_string = false;
            for (std::size_t i = 0; i < text.size(); ++i) {
                if (text[i] == '"') in_string = !in_string;
                if (text[i] == '=' && !in_string) {
                    eq = i;
                    break;
                }
            }
        }
        if (eq == std::string::npos)
            throw CellSpecParseError("expected key = value on line " + std::to_string(line_no));
        std::string key = trim(text.substr(0, eq));
        std::string value = trim(text.substr(eq + 1));
        // A multi-line array starts here if brackets do not balance.
        {
            int depth = 0;
            bool in_string = false;
            for (char c : value) {
                if (c == '"') in_string = !in_string;
                if (!in_string && c == '[') ++depth;
                if (!in_string && c == ']') --depth;
            }
            if (depth > 0) {
                pending = text;
                continue;
            }
        }
        if (key.empty())
            throw CellSpecParseError("empty key on line " + std::to_string(line_no));
        (*target)[key] = parse_value(value, line_no);
    }
    if (!pending.empty()) throw CellSpecParseError("unterminated multi-line array at end of file");
    return doc;
}

// --- typed accessors ---------------------------------------------------------

inline const Value* find(const Table& t, const std::string& key) {
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

inline double require_number(const Table& t, const std::string& key, const std::string& ctx) {
    const Value* v = find(t, key);
    if (!v || v->kind != Value::Kind::Number)
        throw CellSpecParseError("missing numeric key '" + key + "' in " + ctx);
    return v->num;
}

inline double number_or(const Table& t, const std::string& key, double fallback) {
    const Value* v = find(t, key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::Number) throw CellSpecParseError("key '" + key + "' must be numeric");
    return v->num;
}

inline std::string require_string(const Table& t, const std::string& key, const std::string& ctx) {
    const Value* v = find(t, key);
    if (!v || v->kind != Value::Kind::String)
        throw CellSpecParseError("missing string key '" + key + "' in " + ctx);
    return v->str;
}

inline Vec3 as_vec3(const Value& v, const std::string& ctx) {
    if (v.kind != Value::Kind::Array || v.array.size() != 3)
        throw CellSpecParseError(ctx + " must be a 3-element array");
    for (const Value& c : v.array)
        if (c.kind != Value::Kind::Number) throw CellSpecParseError(ctx + " must be numeric");
    return {v.array[0].num, v.array[1].num, v.array[2].num};
}

}  // namespace cellspec

// ---------------------------------------------------------------------------
// load / save
// ---------------------------------------------------------------------------

inline UnitCellMaterial parse_cell(std::istream& in) {
    using namespace cellspec;
    Doc doc = parse_document(in);

    double res_raw = require_number(doc.root, "resolution", "document root");
    int n = static_cast<int>(res_raw);
    if (n < 1 || double(n) != res_raw)
        throw CellSpecValidationError("resolution must be a positive integer");

    if (doc.phases.empty()) throw CellSpecValidationError("at least one [[phases]] required");
    std::vector<Phase> phases;
    for (std::size_t p = 0; p < doc.phases.size(); ++p) {
        const auto& [tbl, aniso] = doc.phases[p];
        std::string ctx = "phase " + std::to_string(p);
        Phase ph;
        ph.a_ex = require_number(tbl, "a_ex", ctx);
        ph.M_s = number_or(tbl, "M_s", 0.0);
        if (!aniso.empty()) {
            std::string variant = require_string(aniso, "variant", ctx + " anisotropy");
            if (variant == "none") {
                ph.anisotropy = AnisotropySpec::none();
            } else if (variant == "uniaxial") {
                double kappa = require_number(aniso, "kappa", ctx + " anisotropy");
                const Value* axis = find(aniso, "axis");
                if (!axis) throw CellSpecParseError(ctx + " uniaxial anisotropy needs 'axis'");
                ph.anisotropy = AnisotropySpec::uniaxial(kappa, as_vec3(*axis, ctx + " axis"));
            } else if (variant == "cubic") {
                double kappa = require_number(aniso, "kappa", ctx + " anisotropy");
                const Value* axes = find(aniso, "axes");
                if (!axes || axes->kind != Value::Kind::Array || axes->array.size() != 3)
                    throw CellSpecParseError(ctx + " cubic anisotropy needs 'axes' (3 vectors)");
                std::array<Vec3, 3> frame;
                for (int i = 0; i < 3; ++i) frame[i] = as_vec3(axes->array[i], ctx + " axes");
                ph.anisotropy = AnisotropySpec::cubic(kappa, frame);
            } else {
                throw CellSpecParseError(ctx + ": unknown anisotropy variant '" + variant + "'");
            }
        }
        phases.push_back(ph);
    }

    const Value* vmap = find(doc.root, "voxel_map");
    if (vmap && doc.has_generator)
        throw CellSpecValidationError("provide either voxel_map or [generator], not both");

    UnitCellMaterial cell(n, phases);
    if (vmap) {
        std::vector<std::uint8_t> map;
        if (vmap->kind == Value::Kind::String) {
            map = b64_decode(vmap->str);
        } else if (vmap->kind == Value::Kind::Array) {
            map.reserve(vmap->array.size());
            for (const Value& v : vmap->array) {
                if (v.kind != Value::Kind::Number || !v.is_integer || v.num < 0 || v.num > 255)
                    throw CellSpecParseError("voxel_map entries must be integers in [0,255]");
                map.push_back(static_cast<std::uint8_t>(v.num));
            }
        } else {
            throw CellSpecParseError("voxel_map must be a base64 string or an integer array");
        }
        if (map.size() != cell.voxel_count())
            throw CellSpecValidationError("voxel_map has " + std::to_string(map.size()) +
                                          " entries, expected " +
                                          std::to_string(cell.voxel_count()));
        cell.voxel_map = std::move(map);
    } else if (doc.has_generator) {
        std::string kind = require_string(doc.generator, "kind", "[generator]");
        if (kind == "laminate") {
            int axis = static_cast<int>(require_number(doc.generator, "axis", "[generator]"));
            const Value* fr = find(doc.generator, "fractions");
            if (!fr || fr->kind != Value::Kind::Array)
                throw CellSpecParseError("laminate generator needs 'fractions' array");
            std::vector<double> fractions;
            for (const Value& v : fr->array) fractions.push_back(v.num);
            cell = make_laminate(axis - 1, fractions, phases, n);
        } else if (kind == "checkerboard") {
            int axis = static_cast<int>(require_number(doc.generator, "axis", "[generator]"));
            cell = make_checkerboard(axis - 1, phases, n);
        } else if (kind == "sphere_inclusion") {
            double radius = require_number(doc.generator, "radius", "[generator]");
            Vec3 center{0.5, 0.5, 0.5};
            if (const Value* c = find(doc.generator, "center"))
                center = as_vec3(*c, "generator center");
            cell = make_sphere_inclusion(radius, center, phases, n);
        } else {
            throw CellSpecParseError("unknown generator kind '" + kind + "'");
        }
    } else if (phases.size() > 1) {
        throw CellSpecValidationError(
            "multi-phase cell needs an explicit voxel_map or a [generator]");
    }

    ValidationReport report = validate(cell);
    if (!report.pass) throw CellSpecValidationError("cell fails validation: " + report.violations.front());
    return cell;
}

inline UnitCellMaterial load_cell(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cell file: " + path);
    return parse_cell(in);
}

namespace cellspec {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_vec3(const Vec3& v) {
    return "[" + fmt_double(v.x) + ", " + fmt_double(v.y) + ", " + fmt_double(v.z) + "]";
}

}  // namespace cellspec

inline void write_cell(const UnitCellMaterial& cell, std::ostream& out) {
    using namespace cellspec;
    // Root keys come first: keys after a table header belong to that table.
    out << "resolution = " << cell.resolution << "\n";
    out << "voxel_map = \"" << b64_encode(cell.voxel_map) << "\"\n";
    for (const Phase& ph : cell.phases) {
        out << "\n[[phases]]\n";
        out << "a_ex = " << fmt_double(ph.a_ex) << "\n";
        out << "M_s = " << fmt_double(ph.M_s) << "\n";
        if (ph.anisotropy.kind != AnisotropyKind::None) {
            out << "\n[phases.anisotropy]\n";
            out << "variant = \"" << to_string(ph.anisotropy.kind) << "\"\n";
            out << "kappa = " << fmt_double(ph.anisotropy.kappa) << "\n";
            if (ph.anisotropy.kind == AnisotropyKind::Uniaxial) {
                out << "axis = " << fmt_vec3(ph.anisotropy.axes[0]) << "\n";
            } else {
                out << "axes = [" << fmt_vec3(ph.anisotropy.axes[0]) << ", "
                    << fmt_vec3(ph.anisotropy.axes[1]) << ", " << fmt_vec3(ph.anisotropy.axes[2])
                    << "]\n";
            }
        }
    }
}

inline void save_cell(const UnitCellMaterial& cell, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open cell file for writing: " + path);
    write_cell(cell, out);
    if (!out) throw std::runtime_error("write failure on cell file: " + path);
}

}  // namespace magnhom
