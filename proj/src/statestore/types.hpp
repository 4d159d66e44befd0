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
#include <optional>
#include <string>
#include <string_view>

#include "common/ids.hpp"
#include "common/json.hpp"
#include "common/time.hpp"

namespace surgeflow::statestore {

enum class IncidentStatus {
	Pending,
	Active,
	Completed,
	Cancelled,
	Error,
};

enum class MessageStatus {
	Sent,
	Delivered,
	Processing,
	Completed,
	Error,
	Dropped,
};

const char *to_string(IncidentStatus s);
const char *to_string(MessageStatus s);
IncidentStatus incident_status_from_string(std::string_view s);
MessageStatus message_status_from_string(std::string_view s);

bool is_terminal(IncidentStatus s);
bool is_terminal(MessageStatus s);
bool is_legal_transition(IncidentStatus from, IncidentStatus to);

struct IncidentRecord {
	IncidentId incident_id;
	std::string workflow_kind;
	std::string label;
	IncidentStatus status = IncidentStatus::Pending;
	Timestamp created_timestamp {};
	Timestamp status_changed_timestamp {};
	std::int64_t outstanding_messages = 0;
	std::optional<Timestamp> cleared_timestamp;
};

struct MessageLogEntry {
	MessageId message_id;
	IncidentId incident_id;
	QueueName queue;
	std::optional<MessageId> parent_message_id;
	MessageStatus status = MessageStatus::Sent;
	Timestamp sent_timestamp {};
	std::optional<Timestamp> delivered_timestamp;
	std::optional<Timestamp> processing_timestamp;
	std::optional<Timestamp> completed_timestamp;
	std::optional<ConsumerId> consumer_id;
	std::int64_t delivery_count = 0;
	// Cleanup messages are not counted as outstanding work.
	bool cleanup = false;
	std::string error;
};

// Extra facts supplied with a message event. incident_id and queue are
// required for SENT; consumer_id is recorded on DELIVERED; error on ERROR.
struct MessageEventContext {
	IncidentId incident_id;
	QueueName queue;
	std::optional<MessageId> parent_message_id;
	std::optional<ConsumerId> consumer_id;
	bool cleanup = false;
	std::string error;
};

struct PersistedStageRecord {
	IncidentId incident_id;
	QueueName queue;
	std::int64_t sequence = 0;
	Timestamp stored_timestamp {};
	Json payload;
};

struct StageLock {
	IncidentId incident_id;
	QueueName queue;
	ConsumerId holder;
	Timestamp acquired_timestamp {};
};

// Aggregated over COMPLETED messages only. Times in milliseconds.
struct QueueStatistics {
	QueueName queue;
	std::int64_t count = 0;
	double mean_wait_ms = 0;
	double max_wait_ms = 0;
	double mean_processing_ms = 0;
	double max_processing_ms = 0;
};

Json to_json(const IncidentRecord &r);
Json to_json(const MessageLogEntry &e);
Json to_json(const PersistedStageRecord &r);
Json to_json(const StageLock &l);
Json to_json(const QueueStatistics &s);

} // namespace surgeflow::statestore
