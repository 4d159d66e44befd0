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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/logger.h>

#include "broker/message.hpp"
#include "statestore/types.hpp"
#include "wfcore/workflow.hpp"

namespace surgeflow::wfcore {

class Runtime;

struct OutboxEntry {
	QueueName target;
	Json payload;
};

// What a handler sees of the engine while it runs.
//
// Messages passed to send() are held in the outbox and only published after
// the handler returns without throwing. Throwing from a handler marks the
// incident as ERROR and discards the outbox.
class HandlerContext {
public:
	HandlerContext(Runtime &runtime, const broker::Message &message, std::string workflow_kind, bool critical);

	const IncidentId &incident_id() const noexcept {
		return message_.incident_id;
	}
	const QueueName &queue() const noexcept {
		return message_.queue;
	}
	const MessageId &message_id() const noexcept {
		return message_.message_id;
	}
	const broker::Message &message() const noexcept {
		return message_;
	}
	const Json &payload() const noexcept {
		return message_.payload;
	}
	const std::string &workflow_kind() const noexcept {
		return workflow_kind_;
	}

	// Throws NotFound when target is not a stage of this workflow.
	void send(const QueueName &target, Json payload);
	const std::vector<OutboxEntry> &outbox() const noexcept {
		return outbox_;
	}

	// Stage data of this (incident, queue), in insertion order.
	std::int64_t persist(const Json &payload);
	std::vector<statestore::PersistedStageRecord> retrieve() const;
	// Read-only view of another stage's data for the same incident.
	std::vector<statestore::PersistedStageRecord> retrieve(const QueueName &queue) const;

	// Stores this input under source_tag and returns the latest payload per
	// required source once a complete, not-yet-fired input set exists. The
	// stage must be critical.
	std::optional<std::map<std::string, Json>> join_collect(const std::string &source_tag, const JoinSpec &spec);
	std::optional<std::map<std::string, Json>> join_collect(
		const std::string &source_tag, const JoinSpec &spec, const Json &input);

	void complete_incident();
	void cancel_incident();

	spdlog::logger &logger() const;

private:
	Runtime &runtime_;
	const broker::Message &message_;
	std::string workflow_kind_;
	bool critical_;
	std::vector<OutboxEntry> outbox_;
};

} // namespace surgeflow::wfcore
