#include "odp/value.hpp"

namespace odp {

Sort sort_of(const Value& v) {
    if (std::holds_alternative<Int>(v)) return Sort::Int;
    if (std::holds_alternative<bool>(v)) return Sort::Bool;
    return Sort::String;
}

std::string_view sort_name(Sort s) {
    switch (s) {
    case Sort::Int: return "int";
    case Sort::Bool: return "bool";
    case Sort::String: return "string";
    }
    return "?";
}

std::string quote_string(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    out.push_back('"');
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

std::string value_text(const Value& v) {
    if (const auto* i = std::get_if<Int>(&v)) return i->str();
    if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    return quote_string(std::get<std::string>(v));
}

} // namespace odp
