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
#include "wfcore/join.hpp"

#include <algorithm>
#include <set>

namespace surgeflow::wfcore {

Json join_input_record(const std::string &source_tag, const Json &payload) {
	return Json {{"join_input", source_tag}, {"payload", payload}};
}

Json join_marker_record(std::int64_t generation, const std::map<std::string, std::int64_t> &consumed) {
	return Json {{"join_fired", generation}, {"consumed", consumed}};
}

JoinDecision evaluate_join(std::span<const statestore::PersistedStageRecord> records, const JoinSpec &spec) {
	JoinDecision d;
	std::int64_t last_fired_seq = 0;
	std::int64_t generations = 0;
	std::set<std::map<std::string, std::int64_t>> fired_sets;
	for (const auto &r : records) {
		if (r.payload.contains("join_fired")) {
			last_fired_seq = std::max(last_fired_seq, r.sequence);
			++generations;
			fired_sets.insert(r.payload.at("consumed").get<std::map<std::string, std::int64_t>>());
		}
	}

	bool triggered = false;
	for (const auto &r : records) {
		if (r.sequence <= last_fired_seq || !r.payload.contains("join_input")) {
			continue;
		}
		const auto tag = r.payload.at("join_input").get<std::string>();
		triggered = triggered || (spec.trigger_sources.contains(tag) && spec.required_sources.contains(tag));
	}

	bool fresh = false;
	for (const auto &r : records) {
		if (!r.payload.contains("join_input")) {
			continue;
		}
		const auto tag = r.payload.at("join_input").get<std::string>();
		if (!spec.required_sources.contains(tag)) {
			continue;
		}
		const bool newer = r.sequence > last_fired_seq;
		if (newer || triggered || spec.sticky_sources.contains(tag)) {
			d.consumed[tag] = r.sequence;
			d.inputs[tag] = r.payload.at("payload");
			fresh = fresh || newer;
		}
	}

	d.generation = generations + 1;
	d.fire = fresh && d.consumed.size() == spec.required_sources.size() && !fired_sets.contains(d.consumed);
	if (!d.fire) {
		d.inputs.clear();
	}
	return d;
}

} // namespace surgeflow::wfcore
