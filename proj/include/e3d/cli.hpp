#pragma once

namespace e3d {

/// Command line entry point. Returns 0 on success, 1 on verification or
/// runtime failure, 2 on usage errors.
int cli_main(int argc, const char* const* argv);

} // namespace e3d
