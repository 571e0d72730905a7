#pragma once

namespace sorf {

// Entry point behind the `sorf` binary; exits 0 on success, 1 on user error,
// 2 on internal error.
int cli_main(int argc, const char* const* argv);

}  // namespace sorf
