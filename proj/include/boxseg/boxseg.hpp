// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header for the boxseg library.

#pragma once

#include "boxseg/backends/file_backend.hpp"
#include "boxseg/backends/oracle_backend.hpp"
#include "boxseg/backends/types.hpp"
#include "boxseg/dataio/cache.hpp"
#include "boxseg/dataio/class_table.hpp"
#include "boxseg/dataio/config_file.hpp"
#include "boxseg/dataio/dataset.hpp"
#include "boxseg/dataio/dataset_io.hpp"
#include "boxseg/dataio/export.hpp"
#include "boxseg/dataio/interchange.hpp"
#include "boxseg/dataio/synthetic.hpp"
#include "boxseg/error.hpp"
#include "boxseg/eval/ablation.hpp"
#include "boxseg/eval/eval.hpp"
#include "boxseg/maskgeom.hpp"
#include "boxseg/pipeline/config.hpp"
#include "boxseg/pipeline/pipeline.hpp"
#include "boxseg/random.hpp"
