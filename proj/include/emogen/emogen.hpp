// Copyright 2026 The emogen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "emogen/cli/commands.hpp"
#include "emogen/cli/manifest.hpp"
#include "emogen/data/dataset.hpp"
#include "emogen/data/split.hpp"
#include "emogen/data/synthetic.hpp"
#include "emogen/decoding/beam_search.hpp"
#include "emogen/decoding/generate.hpp"
#include "emogen/errors.hpp"
#include "emogen/metrics/metrics.hpp"
#include "emogen/model/checkpoint.hpp"
#include "emogen/model/config.hpp"
#include "emogen/model/transformer.hpp"
#include "emogen/numerics/adamw.hpp"
#include "emogen/numerics/losses.hpp"
#include "emogen/numerics/ops.hpp"
#include "emogen/numerics/rng.hpp"
#include "emogen/numerics/tensor.hpp"
#include "emogen/text/sequence.hpp"
#include "emogen/text/vocab.hpp"
#include "emogen/trainer/schedule.hpp"
#include "emogen/trainer/tasks.hpp"
#include "emogen/trainer/trainer.hpp"
