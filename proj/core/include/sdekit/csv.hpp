#pragma once

#include <string>

namespace sdekit {

/// Shortest decimal string that round-trips to the same double.
/// Locale-independent, so identical values always give identical bytes.
std::string format_double(double value);

}  // namespace sdekit
