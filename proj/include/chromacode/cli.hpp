#pragma once

namespace chromacode::cli {

enum ExitCode { kOk = 0, kUsageError = 1, kDataError = 2 };

/// Entry point of the `chromacode` binary. Errors are reported on stderr as
/// single lines: `error: code=<n> kind=<usage|config|domain|data> message="..."`.
int run(int argc, char** argv);

}  // namespace chromacode::cli
