#include "mvaa/json_fixed.h"

#include "mvaa/error.h"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace mvaa {

namespace {

void append_number(std::string& out, double v) {
    if (!std::isfinite(v)) {
        throw Error(ErrorCode::InvalidArgument, "cannot serialise non-finite number");
    }
    char buf[400];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 6);
    std::string_view text(buf, static_cast<std::size_t>(res.ptr - buf));
    if (text == "-0.000000") {
        text = "0.000000";
    }
    out += text;
}

void newline(std::string& out, int indent, int depth) {
    if (indent >= 0) {
        out += '\n';
        out.append(static_cast<std::size_t>(indent * depth), ' ');
    }
}

void dump(std::string& out, const Json& v, int indent, int depth) {
    switch (v.type()) {
    case Json::value_t::object: {
        if (v.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!first) {
                out += ',';
            }
            first = false;
            newline(out, indent, depth + 1);
            out += Json(it.key()).dump();
            out += indent >= 0 ? ": " : ":";
            dump(out, it.value(), indent, depth + 1);
        }
        newline(out, indent, depth);
        out += '}';
        return;
    }
    case Json::value_t::array: {
        if (v.empty()) {
            out += "[]";
            return;
        }
        const bool scalars = std::all_of(v.begin(), v.end(), [](const Json& item) {
            return !item.is_object() && !item.is_array();
        });
        out += '[';
        bool first = true;
        if (scalars) {
            for (const auto& item : v) {
                if (!first) {
                    out += indent >= 0 ? ", " : ",";
                }
                first = false;
                dump(out, item, indent, depth + 1);
            }
            out += ']';
            return;
        }
        for (const auto& item : v) {
            if (!first) {
                out += ',';
            }
            first = false;
            newline(out, indent, depth + 1);
            dump(out, item, indent, depth + 1);
        }
        newline(out, indent, depth);
        out += ']';
        return;
    }
    case Json::value_t::number_float:
        append_number(out, v.get<double>());
        return;
    default:
        out += v.dump();
        return;
    }
}

}  // namespace

std::string dump_fixed(const Json& value, int indent) {
    std::string out;
    dump(out, value, indent, 0);
    return out;
}

}  // namespace mvaa
