// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/cli.hpp"

int main(int argc, char** argv) { return roadfriction::run_cli(argc, argv); }
