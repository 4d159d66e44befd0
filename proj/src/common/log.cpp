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
#include "common/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace surgeflow {

spdlog::logger &log() {
	static std::shared_ptr<spdlog::logger> logger = [] {
		auto l = spdlog::stderr_color_mt("surgeflow");
		const char *level = std::getenv("SURGEFLOW_LOG_LEVEL");
		l->set_level(spdlog::level::from_str(level ? level : "info"));
		l->set_pattern("%Y-%m-%dT%H:%M:%S.%e %^%l%$ [%t] %v");
		return l;
	}();
	return *logger;
}

} // namespace surgeflow
