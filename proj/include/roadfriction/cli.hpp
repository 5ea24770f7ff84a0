// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace roadfriction {

/// Exit codes: 0 success, 1 data or run failure, 2 usage error.
int run_cli(int argc, char** argv);

}  // namespace roadfriction
