#pragma once

namespace phmg {

// Exit status: 0 success, 1 validation, 2 solver failure, 3 certification failure.
int run_cli(int argc, char** argv);

}  // namespace phmg
