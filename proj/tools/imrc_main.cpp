// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#include "imrc/cli.hpp"

int main(int argc, char** argv) { return imrc::cli_dispatch(argc, argv); }
