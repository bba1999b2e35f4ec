#pragma once

namespace glfm {

// Entry point of the `glfm` executable. Returns 0 on success, 1 on runtime
// or model failures and 2 on usage or validation errors.
int run_cli(int argc, char** argv);

}  // namespace glfm
