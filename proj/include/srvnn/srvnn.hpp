/*
 * Copyright (c) 2026, the srvnn authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "srvnn/augment.hpp"
#include "srvnn/checkpoint.hpp"
#include "srvnn/csi.hpp"
#include "srvnn/dataset_io.hpp"
#include "srvnn/error.hpp"
#include "srvnn/eval.hpp"
#include "srvnn/flops.hpp"
#include "srvnn/model.hpp"
#include "srvnn/optimizer.hpp"
#include "srvnn/random.hpp"
#include "srvnn/report_io.hpp"
#include "srvnn/run_config.hpp"
#include "srvnn/train.hpp"
#include "srvnn/traffic.hpp"
