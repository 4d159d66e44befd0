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
#include "wfcore/handler_context.hpp"

#include "common/error.hpp"
#include "common/log.hpp"
#include "wfcore/join.hpp"
#include "wfcore/runtime.hpp"

namespace surgeflow::wfcore {

HandlerContext::HandlerContext(Runtime &runtime, const broker::Message &message, std::string workflow_kind, bool critical) :
	runtime_(runtime),
	message_(message),
	workflow_kind_(std::move(workflow_kind)),
	critical_(critical) {
}

void HandlerContext::send(const QueueName &target, Json payload) {
	if (!runtime_.stage_in_workflow(target, workflow_kind_)) {
		fail(ErrorCode::NotFound, "queue '" + target + "' is not a stage of workflow '" + workflow_kind_ + "'");
	}
	outbox_.push_back(OutboxEntry {target, std::move(payload)});
}

std::int64_t HandlerContext::persist(const Json &payload) {
	return runtime_.store().persist_stage_data(incident_id(), queue(), payload);
}

std::vector<statestore::PersistedStageRecord> HandlerContext::retrieve() const {
	return runtime_.store().retrieve_stage_data(incident_id(), queue());
}

std::vector<statestore::PersistedStageRecord> HandlerContext::retrieve(const QueueName &other) const {
	return runtime_.store().retrieve_stage_data(incident_id(), other);
}

std::optional<std::map<std::string, Json>> HandlerContext::join_collect(const std::string &source_tag, const JoinSpec &spec) {
	return join_collect(source_tag, spec, payload());
}

std::optional<std::map<std::string, Json>> HandlerContext::join_collect(
	const std::string &source_tag, const JoinSpec &spec, const Json &input) {
	if (!critical_) {
		fail(ErrorCode::PreconditionFailed, "join_collect on non-critical stage '" + queue() + "'");
	}
	if (!spec.required_sources.contains(source_tag)) {
		fail(ErrorCode::InvalidArgument, "source '" + source_tag + "' is not required by the join at '" + queue() + "'");
	}
	persist(join_input_record(source_tag, input));
	const auto records = retrieve();
	auto decision = evaluate_join(records, spec);
	if (!decision.fire) {
		return std::nullopt;
	}
	persist(join_marker_record(decision.generation, decision.consumed));
	return std::move(decision.inputs);
}

void HandlerContext::complete_incident() {
	runtime_.complete_incident(incident_id(), message_id());
}

void HandlerContext::cancel_incident() {
	runtime_.cancel_incident(incident_id(), message_id());
}

spdlog::logger &HandlerContext::logger() const {
	return log();
}

} // namespace surgeflow::wfcore
