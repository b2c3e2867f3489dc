// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "boxseg/cli/cli.hpp"

int main(int argc, char** argv) { return boxseg::cli::run(argc, argv); }
