#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "s3fd/anchors.hpp"
#include "s3fd/netgeom.hpp"

namespace s3fd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand. `args` excludes the program name. Results go to `out`
// unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct SelfCheckReport {
  std::string text;
  int table1_passed = 0;
  int table1_total = 0;
  int table2_passed = 0;
  int table2_total = 0;
  int proportion_passed = 0;
  int proportion_total = 0;
  bool ok() const {
    return table1_passed == table1_total && table2_passed == table2_total &&
           proportion_passed == proportion_total;
  }
};

// Checks a chain/anchor design against the six-layer reference
// values (strides, anchor scales, receptive fields, 640x640 census).
SelfCheckReport selfcheck(const LayerChain& chain, const AnchorConfig& anchors);

}  // namespace s3fd::cli
