#pragma once

namespace hdk {

/// Entry point behind the hdkernel binary. Exit codes: 0 success,
/// 1 data error, 2 configuration error, 3 numerical failure.
int cli_main(int argc, const char* const* argv);

}  // namespace hdk
