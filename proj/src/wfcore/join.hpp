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
#include <map>
#include <span>
#include <string>

#include "statestore/types.hpp"
#include "wfcore/workflow.hpp"

namespace surgeflow::wfcore {

// A joining stage keeps two kinds of records in its persisted data:
//
//   {"join_input": tag, "payload": ...}                 one per arrival
//   {"join_fired": generation, "consumed": {tag: seq}}  one per firing
//
// An input set is complete when every required source has a record that is
// either sticky or newer than the last firing marker. The latest such record
// per source is used.
struct JoinDecision {
	bool fire = false;
	std::int64_t generation = 0;
	std::map<std::string, std::int64_t> consumed;
	std::map<std::string, Json> inputs;
};

Json join_input_record(const std::string &source_tag, const Json &payload);
Json join_marker_record(std::int64_t generation, const std::map<std::string, std::int64_t> &consumed);

JoinDecision evaluate_join(std::span<const statestore::PersistedStageRecord> records, const JoinSpec &spec);

} // namespace surgeflow::wfcore
