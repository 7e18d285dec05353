#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ffreg::cli {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point behind the `ffreg` binary; `args` excludes the program name.
///
///   train   --config C --samples S.csv --model M.json
///   predict --model M.json (--queries Q.csv | --grid lo:hi:n[,lo:hi:n...]) --out P.csv
///   bench   f1..f8
///   sweep   f1..f8 --param tol|n_out_tol|n_epochs|y_min --values v1,v2,...
///   compare f1..f8
///
/// Common flags: --config, --seed, --selection-mode, --epochs, --out-dir.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ffreg::cli
