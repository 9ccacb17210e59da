// Copyright 2026 The faultlab Authors.
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

#include <filesystem>
#include <iosfwd>
#include <string>

#include "faultlab/hpcarrow.h"

namespace faultlab {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr int kCampaignSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInvalidCampaign = 2,
  kExitAnomaly = 3,
  kExitIo = 4,
};

/// The files of a run directory, rendered in memory.
struct RunFiles {
  std::string campaign;
  std::string events;
  std::string telemetry;
  std::string jobs;
};

RunFiles render_run(const Campaign& campaign, const Topology& topo,
                    const ExperimentArtifacts& artifacts);

/// Entry point of the `faultlab` executable.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace faultlab
