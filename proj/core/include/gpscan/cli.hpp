#pragma once

namespace gpscan {

/// Command-line entry point (fit / scan / test / synth / bench). Returns 0
/// on success, 1 on runtime failure, 2 on usage errors.
int cli_main(int argc, const char* const* argv);

}  // namespace gpscan
