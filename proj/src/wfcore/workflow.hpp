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

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "common/ids.hpp"
#include "common/json.hpp"

namespace surgeflow::wfcore {

class HandlerContext;

using Handler = std::function<void(HandlerContext &)>;

// Binds a queue to its handler. Critical stages never run concurrently for
// the same incident; every stage that joins several inputs must be critical.
struct StageRegistration {
	QueueName queue;
	Handler handler;
	bool critical = false;
};

struct IncidentInit {
	IncidentId incident_id;
	std::string label;
	Json initial_payload;
};

// Runs once when an incident starts, before its first message is sent.
// Typically creates the incident's external data endpoints.
using InitHook = std::function<void(const IncidentInit &)>;
// Runs for every ACTIVE incident of the workflow when an engine restarts, to
// rebuild process-local resources such as EDI endpoints.
using ResumeHook = std::function<void(const IncidentId &)>;
// Checks an initial payload before any incident is created. Throws to reject.
using PayloadCheck = std::function<void(const Json &)>;

struct WorkflowDefinition {
	std::string kind;
	std::vector<StageRegistration> stages;
	QueueName init_queue;
	InitHook on_init;
	ResumeHook on_resume;
	PayloadCheck check_payload;
};

// Inputs a joining stage waits for. Sticky sources carry over from one firing
// to the next; every other source must arrive afresh before the join fires
// again.
// After a join has fired, the next generation needs a fresh record of every
// required source except sticky ones, which carry over. A fresh record of a
// trigger source starts a generation by itself, reusing the latest record of
// every other source.
struct JoinSpec {
	std::set<std::string> required_sources;
	std::set<std::string> sticky_sources;
	std::set<std::string> trigger_sources;
};

} // namespace surgeflow::wfcore
