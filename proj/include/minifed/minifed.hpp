// Copyright 2026 The minifed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Umbrella header for the whole federation library.

#include "minifed/accounting.hpp"
#include "minifed/cache.hpp"
#include "minifed/client.hpp"
#include "minifed/clock.hpp"
#include "minifed/collector.hpp"
#include "minifed/encoding.hpp"
#include "minifed/errors.hpp"
#include "minifed/geo.hpp"
#include "minifed/harness.hpp"
#include "minifed/healthcheck.hpp"
#include "minifed/hostport.hpp"
#include "minifed/net.hpp"
#include "minifed/origin.hpp"
#include "minifed/paths.hpp"
#include "minifed/records.hpp"
#include "minifed/redirector.hpp"
#include "minifed/server.hpp"
#include "minifed/shoveler.hpp"
#include "minifed/telemetry.hpp"
#include "minifed/token.hpp"
#include "minifed/topology.hpp"
#include "minifed/wire.hpp"
