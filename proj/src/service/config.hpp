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

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include "common/json.hpp"

namespace surgeflow::service {

struct EngineConfig {
	std::filesystem::path data_dir = "data";
	int workers = 4;
	std::string host = "127.0.0.1";
	// 0 binds an ephemeral port.
	int port = 8080;
	std::optional<std::filesystem::path> machines_file;
	std::chrono::milliseconds requeue_delay {100};
	std::chrono::milliseconds idle_poll_interval {20};
	bool sync_writes = false;
	bool register_wildfire = true;
	// Opens only the state store, for read-only queries against a data
	// directory that another process may be serving.
	bool inspect_only = false;
};

// Defaults overridden by SURGEFLOW_DATA_DIR and SURGEFLOW_WORKERS.
EngineConfig config_from_env();

// Keys: data_dir, workers, host, port, machines_file, requeue_delay_ms,
// idle_poll_interval_ms, sync_writes, register_wildfire, inspect_only.
EngineConfig config_from_json(const Json &doc, EngineConfig base);

// Throws InvalidArgument naming the offending field.
void validate(const EngineConfig &config);

} // namespace surgeflow::service
