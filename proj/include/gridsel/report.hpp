#pragma once

#include <string>

namespace gridsel {

/// Rounds to 12 significant digits, the precision used in human-facing reports.
double round_sig(double v);
/// `v` in %.12g form.
std::string format_sig(double v);

}  // namespace gridsel
