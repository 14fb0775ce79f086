#pragma once

namespace csifb {

/// Entry point behind the csifb tool. Exit codes: 0 success, 1 usage,
/// 2 data error (missing/corrupt files, bad config), 3 numeric failure.
int cli_dispatch(int argc, const char* const* argv);

} // namespace csifb
