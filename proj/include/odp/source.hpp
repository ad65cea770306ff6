#pragma once

#include <string>

namespace odp {

// Lines and columns are 1-based; a default-constructed span means "unknown".
struct SourceSpan {
    std::string file;
    int start_line = 0;
    int start_col = 0;
    int end_line = 0;
    int end_col = 0;

    bool known() const { return start_line > 0; }

    friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

} // namespace odp
