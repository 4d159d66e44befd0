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
#include "statestore/types.hpp"

#include "common/error.hpp"

namespace surgeflow::statestore {

const char *to_string(IncidentStatus s) {
	switch (s) {
	case IncidentStatus::Pending:
		return "PENDING";
	case IncidentStatus::Active:
		return "ACTIVE";
	case IncidentStatus::Completed:
		return "COMPLETED";
	case IncidentStatus::Cancelled:
		return "CANCELLED";
	case IncidentStatus::Error:
		return "ERROR";
	}
	return "?";
}

const char *to_string(MessageStatus s) {
	switch (s) {
	case MessageStatus::Sent:
		return "SENT";
	case MessageStatus::Delivered:
		return "DELIVERED";
	case MessageStatus::Processing:
		return "PROCESSING";
	case MessageStatus::Completed:
		return "COMPLETED";
	case MessageStatus::Error:
		return "ERROR";
	case MessageStatus::Dropped:
		return "DROPPED";
	}
	return "?";
}

IncidentStatus incident_status_from_string(std::string_view s) {
	for (auto v : {IncidentStatus::Pending,
			 IncidentStatus::Active,
			 IncidentStatus::Completed,
			 IncidentStatus::Cancelled,
			 IncidentStatus::Error}) {
		if (s == to_string(v)) {
			return v;
		}
	}
	fail(ErrorCode::InvalidArgument, "unknown incident status '" + std::string(s) + "'");
}

MessageStatus message_status_from_string(std::string_view s) {
	for (auto v : {MessageStatus::Sent,
			 MessageStatus::Delivered,
			 MessageStatus::Processing,
			 MessageStatus::Completed,
			 MessageStatus::Error,
			 MessageStatus::Dropped}) {
		if (s == to_string(v)) {
			return v;
		}
	}
	fail(ErrorCode::InvalidArgument, "unknown message status '" + std::string(s) + "'");
}

bool is_terminal(IncidentStatus s) {
	return s == IncidentStatus::Completed || s == IncidentStatus::Cancelled || s == IncidentStatus::Error;
}

bool is_terminal(MessageStatus s) {
	return s == MessageStatus::Completed || s == MessageStatus::Error || s == MessageStatus::Dropped;
}

bool is_legal_transition(IncidentStatus from, IncidentStatus to) {
	switch (from) {
	case IncidentStatus::Pending:
		return to == IncidentStatus::Active;
	case IncidentStatus::Active:
		return is_terminal(to);
	default:
		return false;
	}
}

namespace {

Json optional_ts(const std::optional<Timestamp> &t) {
	return t ? Json(to_micros(*t)) : Json(nullptr);
}

} // namespace

Json to_json(const IncidentRecord &r) {
	return Json {
		{"incident_id", r.incident_id},
		{"workflow_kind", r.workflow_kind},
		{"label", r.label},
		{"status", to_string(r.status)},
		{"created_timestamp", to_micros(r.created_timestamp)},
		{"status_changed_timestamp", to_micros(r.status_changed_timestamp)},
		{"outstanding_messages", r.outstanding_messages},
		{"cleared_timestamp", optional_ts(r.cleared_timestamp)},
	};
}

Json to_json(const MessageLogEntry &e) {
	return Json {
		{"message_id", e.message_id},
		{"incident_id", e.incident_id},
		{"queue", e.queue},
		{"parent_message_id", e.parent_message_id ? Json(*e.parent_message_id) : Json(nullptr)},
		{"status", to_string(e.status)},
		{"sent_timestamp", to_micros(e.sent_timestamp)},
		{"delivered_timestamp", optional_ts(e.delivered_timestamp)},
		{"processing_timestamp", optional_ts(e.processing_timestamp)},
		{"completed_timestamp", optional_ts(e.completed_timestamp)},
		{"consumer_id", e.consumer_id ? Json(*e.consumer_id) : Json(nullptr)},
		{"delivery_count", e.delivery_count},
		{"cleanup", e.cleanup},
		{"error", e.error},
	};
}

Json to_json(const PersistedStageRecord &r) {
	return Json {
		{"incident_id", r.incident_id},
		{"queue", r.queue},
		{"sequence", r.sequence},
		{"stored_timestamp", to_micros(r.stored_timestamp)},
		{"payload", r.payload},
	};
}

Json to_json(const StageLock &l) {
	return Json {
		{"incident_id", l.incident_id},
		{"queue", l.queue},
		{"holder", l.holder},
		{"acquired_timestamp", to_micros(l.acquired_timestamp)},
	};
}

Json to_json(const QueueStatistics &s) {
	return Json {
		{"queue", s.queue},
		{"count", s.count},
		{"mean_wait_ms", s.mean_wait_ms},
		{"max_wait_ms", s.max_wait_ms},
		{"mean_processing_ms", s.mean_processing_ms},
		{"max_processing_ms", s.max_processing_ms},
	};
}

} // namespace surgeflow::statestore
