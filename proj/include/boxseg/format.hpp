// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <string>

namespace boxseg {

/// printf("%.9g"); the fixed float format of reports and fingerprints.
inline std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// `v` rounded to 9 significant digits.
inline double round_g9(double v) { return std::stod(format_g9(v)); }

}  // namespace boxseg
