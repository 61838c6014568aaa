/*
 * Copyright 2026 The reachcast Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Convenience header pulling in the whole library.

#pragma once

#include "reachcast/config.hpp"
#include "reachcast/embedding.hpp"
#include "reachcast/error.hpp"
#include "reachcast/experiment.hpp"
#include "reachcast/features.hpp"
#include "reachcast/gbrt.hpp"
#include "reachcast/generators.hpp"
#include "reachcast/graph.hpp"
#include "reachcast/icm.hpp"
#include "reachcast/mlp.hpp"
#include "reachcast/model_io.hpp"
#include "reachcast/parallel.hpp"
#include "reachcast/predict.hpp"
#include "reachcast/random.hpp"
#include "reachcast/reach.hpp"
#include "reachcast/skipgram.hpp"
#include "reachcast/text.hpp"
#include "reachcast/walks.hpp"
