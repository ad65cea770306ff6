#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>
#include <variant>

namespace odp {

/// Attribute values are unbounded integers, booleans, or strings.
using Int = boost::multiprecision::cpp_int;

enum class Sort { Int, Bool, String };

using Value = std::variant<Int, bool, std::string>;

Sort sort_of(const Value& v);
std::string_view sort_name(Sort s);

/// Renders a value as a source-level literal (strings are quoted and escaped).
std::string value_text(const Value& v);

std::string quote_string(const std::string& s);

} // namespace odp
