#pragma once

namespace buckloop {

// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 singularity in an analytic evaluation, 4 steady state not reached,
// 5 comparison outside tolerance.
int cli_main(int argc, char** argv);

}  // namespace buckloop
