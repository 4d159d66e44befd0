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
#include "service/demo_driver.hpp"

#include <algorithm>
#include <functional>
#include <thread>

#include "common/error.hpp"
#include "common/log.hpp"
#include "demo_wildfire/wildfire.hpp"
#include "service/task_graph.hpp"

namespace surgeflow::service {

namespace {

using Clock = std::chrono::steady_clock;

void wait_for(const std::function<bool()> &done, Clock::time_point deadline, const std::string &what) {
	while (!done()) {
		if (Clock::now() > deadline) {
			fail(ErrorCode::Internal, "timed out waiting for " + what);
		}
		std::this_thread::sleep_for(std::chrono::milliseconds(10));
	}
}

void require_active(statestore::StateStore &store, const IncidentId &id) {
	const auto record = store.find_incident(id);
	if (!record || record->status != statestore::IncidentStatus::Error) {
		return;
	}
	std::string reason;
	for (const auto &m : store.messages_for_incident(id)) {
		if (m.status == statestore::MessageStatus::Error) {
			reason = m.queue + ": " + m.error;
		}
	}
	fail(ErrorCode::Internal, "incident " + id + " entered ERROR (" + reason + ")");
}

} // namespace

WildfireDemoResult run_wildfire_demo(Engine &engine, const WildfireDemoOptions &options) {
	namespace wf = demo_wildfire;
	const auto started = Clock::now();
	const auto deadline = started + options.timeout;

	Json payload {{"hotspot_source", options.hotspot_source}, {"forecast_kind", options.forecast_kind}};
	// Validate before anything is created.
	const auto config = wf::config_from_json(payload);

	WildfireDemoResult result;
	result.incident_id = engine.create_incident(wf::kKind, options.label, payload);
	const auto &id = result.incident_id;
	log().info("demo incident {} started", id);

	Json hotspots {
		{"source", wf::to_string(config.hotspot_source)},
		{"detections", Json::array({
			Json {{"lat", 41.52}, {"lon", 1.61}, {"confidence", 0.92}},
			Json {{"lat", 41.55}, {"lon", 1.64}, {"confidence", 0.81}},
		})},
	};
	ApiRequest push {"POST", "/edi" + wf::hotspot_path(id), hotspots.dump(), {{"content-type", "application/json"}}};
	const auto pushed = engine.handle(push);
	if (pushed.status != 202) {
		fail(ErrorCode::Internal, "hotspot push rejected with " + std::to_string(pushed.status) + ": " + pushed.body.dump());
	}

	auto &store = engine.store();
	wait_for([&] {
		require_active(store, id);
		return store.retrieve_stage_data(id, wf::stage::kForecastResult).size() >= static_cast<std::size_t>(config.wfa_emit_count) &&
			!store.retrieve_stage_data(id, wf::stage::kCompleted).empty();
	}, deadline, "forecast results of incident " + id);
	result.forecast_results = store.retrieve_stage_data(id, wf::stage::kForecastResult).size();

	if (options.before_complete) {
		options.before_complete(id);
	}
	engine.complete_incident(id);
	wait_for([&] {
		const auto record = store.find_incident(id);
		if (!record || !record->cleared_timestamp) {
			return false;
		}
		// The cleanup message itself resolves just after the clear.
		const auto messages = store.messages_for_incident(id);
		return std::all_of(messages.begin(), messages.end(), [](const auto &m) { return statestore::is_terminal(m.status); });
	}, deadline, "cleanup of incident " + id);

	result.detail = engine.incident_detail(id);
	result.task_graph_text = render_task_graph(result.detail.at("task_graph"));
	result.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
	return result;
}

} // namespace surgeflow::service
