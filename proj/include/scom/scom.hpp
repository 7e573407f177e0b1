// Copyright 2026 The SCOM Authors
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

// Everything except the HTTP transport (scom/http_server.hpp), which pulls
// in a threads dependency.

#include "scom/commands.hpp"
#include "scom/config.hpp"
#include "scom/dataset.hpp"
#include "scom/error.hpp"
#include "scom/hash.hpp"
#include "scom/information.hpp"
#include "scom/intervention.hpp"
#include "scom/masking.hpp"
#include "scom/nn.hpp"
#include "scom/oracle.hpp"
#include "scom/output_model.hpp"
#include "scom/random.hpp"
#include "scom/report.hpp"
#include "scom/schema.hpp"
#include "scom/selection.hpp"
#include "scom/service.hpp"
#include "scom/synthetic.hpp"
