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
#include "service/config.hpp"

#include <cstdlib>

#include "common/error.hpp"

namespace surgeflow::service {

EngineConfig config_from_env() {
	EngineConfig c;
	if (const char *dir = std::getenv("SURGEFLOW_DATA_DIR"); dir && *dir) {
		c.data_dir = dir;
	}
	if (const char *workers = std::getenv("SURGEFLOW_WORKERS"); workers && *workers) {
		try {
			std::size_t used = 0;
			c.workers = std::stoi(workers, &used);
			if (used != std::char_traits<char>::length(workers)) {
				throw std::invalid_argument(workers);
			}
		} catch (const std::exception &) {
			fail(ErrorCode::InvalidArgument, std::string("SURGEFLOW_WORKERS must be an integer, got '") + workers + "'");
		}
	}
	return c;
}

EngineConfig config_from_json(const Json &doc, EngineConfig c) {
	if (doc.is_null()) {
		return c;
	}
	if (!doc.is_object()) {
		fail(ErrorCode::InvalidArgument, "engine configuration must be a JSON object");
	}
	const auto field = [&](const char *key, auto apply) {
		if (!doc.contains(key)) {
			return;
		}
		try {
			apply(doc.at(key));
		} catch (const Json::exception &) {
			fail(ErrorCode::InvalidArgument, std::string(key) + " has the wrong type");
		}
	};
	field("data_dir", [&](const Json &v) { c.data_dir = v.get<std::string>(); });
	field("workers", [&](const Json &v) { c.workers = v.get<int>(); });
	field("host", [&](const Json &v) { c.host = v.get<std::string>(); });
	field("port", [&](const Json &v) { c.port = v.get<int>(); });
	field("machines_file", [&](const Json &v) {
		if (v.is_null()) {
			c.machines_file.reset();
		} else {
			c.machines_file = v.get<std::string>();
		}
	});
	field("requeue_delay_ms", [&](const Json &v) { c.requeue_delay = std::chrono::milliseconds(v.get<std::int64_t>()); });
	field("idle_poll_interval_ms", [&](const Json &v) { c.idle_poll_interval = std::chrono::milliseconds(v.get<std::int64_t>()); });
	field("sync_writes", [&](const Json &v) { c.sync_writes = v.get<bool>(); });
	field("register_wildfire", [&](const Json &v) { c.register_wildfire = v.get<bool>(); });
	field("inspect_only", [&](const Json &v) { c.inspect_only = v.get<bool>(); });
	validate(c);
	return c;
}

void validate(const EngineConfig &c) {
	if (c.data_dir.empty()) {
		fail(ErrorCode::InvalidArgument, "data_dir must not be empty");
	}
	if (c.workers < 1) {
		fail(ErrorCode::InvalidArgument, "workers must be at least 1");
	}
	if (c.port < 0 || c.port > 65535) {
		fail(ErrorCode::InvalidArgument, "port must be within 0..65535");
	}
	if (c.host.empty()) {
		fail(ErrorCode::InvalidArgument, "host must not be empty");
	}
	if (c.requeue_delay.count() < 0) {
		fail(ErrorCode::InvalidArgument, "requeue_delay_ms must not be negative");
	}
	if (c.idle_poll_interval.count() <= 0) {
		fail(ErrorCode::InvalidArgument, "idle_poll_interval_ms must be positive");
	}
}

} // namespace surgeflow::service
