// Copyright 2026 The SurgeFlow Authors
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "common/json.hpp"

namespace surgeflow::simenv {

inline constexpr const char *kLocalStore = "local";

struct Machine {
	std::string name;
	int max_concurrent_jobs = 1;
	double speed_factor = 1.0;
	double failure_probability = 0.0;
};

struct SimConfig {
	std::vector<Machine> machines;
	// Simulated bytes per second for move_data.
	double transfer_rate = 10.0 * 1024 * 1024;
	std::uint64_t seed = 0;
};

// Two mock HPC machines, archer2 and cirrus.
SimConfig default_sim_config();

// Parses {"machines": [...], "transfer_rate": n, "seed": n}. Errors name the
// offending field.
SimConfig sim_config_from_json(const Json &doc);
SimConfig load_sim_config(const std::filesystem::path &path);

void validate(const SimConfig &config);

} // namespace surgeflow::simenv
