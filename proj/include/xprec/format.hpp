#pragma once

#include <string>

namespace xprec {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace xprec
