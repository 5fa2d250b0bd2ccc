// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "videorepair/assets.hpp"
#include "videorepair/backends.hpp"
#include "videorepair/config.hpp"
#include "videorepair/container.hpp"
#include "videorepair/errors.hpp"
#include "videorepair/frames.hpp"
#include "videorepair/json_schema.hpp"
#include "videorepair/latentops.hpp"
#include "videorepair/pipeline.hpp"
#include "videorepair/planning.hpp"
#include "videorepair/rps.hpp"
#include "videorepair/serialization.hpp"
#include "videorepair/tensor.hpp"
#include "videorepair/types.hpp"
#include "videorepair/wire.hpp"
