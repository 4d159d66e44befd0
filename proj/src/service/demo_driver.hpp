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
#include <functional>
#include <string>

#include "service/engine.hpp"

namespace surgeflow::service {

struct WildfireDemoOptions {
	std::string hotspot_source = "MODIS";
	std::string forecast_kind = "PERIMETER";
	std::string label = "demo wildfire";
	std::chrono::milliseconds timeout {30000};
	// Called once every result is in, before the incident is completed and
	// its stage data cleared.
	std::function<void(const IncidentId &)> before_complete;
};

struct WildfireDemoResult {
	IncidentId incident_id;
	// Incident detail as served by the API, taken after cleanup.
	Json detail;
	std::string task_graph_text;
	std::size_t forecast_results = 0;
	double elapsed_ms = 0.0;
};

// Runs one wildfire incident end to end on a started engine: push a hotspot
// file, wait for every forecast result and the simulation completion, then
// complete the incident and wait for its cleanup.
WildfireDemoResult run_wildfire_demo(Engine &engine, const WildfireDemoOptions &options = {});

} // namespace surgeflow::service
