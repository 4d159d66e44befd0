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

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "statestore/types.hpp"

namespace surgeflow::statestore {

namespace sql {
class Database;
}

// Source of truth for workflow progress: incidents, the message log, persisted
// stage data, stage locks and outstanding-message counters.
//
// Backed by a single SQLite file (or ":memory:"). Every public operation runs
// under one mutex and, when it writes more than one row, inside one
// transaction, so each call is atomic with respect to every other call.
class StateStore {
public:
	explicit StateStore(const std::filesystem::path &db_path);
	~StateStore();

	StateStore(const StateStore &) = delete;
	StateStore &operator=(const StateStore &) = delete;

	// Workflow kinds are registered per process by the runtime.
	void register_workflow_kind(const std::string &kind);
	bool has_workflow_kind(const std::string &kind) const;

	// --- incidents -------------------------------------------------------

	IncidentId create_incident(const std::string &workflow_kind, const std::string &label);
	void set_incident_status(const IncidentId &id, IncidentStatus status);
	IncidentRecord incident(const IncidentId &id) const;
	std::optional<IncidentRecord> find_incident(const IncidentId &id) const;
	std::vector<IncidentRecord> incidents() const;

	// --- message log -----------------------------------------------------

	// SENT creates the entry; later events must follow
	// SENT -> DELIVERED -> PROCESSING -> {COMPLETED, ERROR}, with DROPPED
	// allowed after SENT or DELIVERED. A redelivery (DELIVERED after
	// DELIVERED or PROCESSING) is accepted. Timestamps are clamped so they
	// never run backwards within one entry.
	void log_message_event(
		const MessageId &id, MessageStatus event, Timestamp ts, const MessageEventContext &context = {});

	// SENT plus, unless context.cleanup, an outstanding increment, atomically.
	void record_sent(const MessageId &id, Timestamp ts, const MessageEventContext &context);

	// Terminal event plus, unless the message is a cleanup message, an
	// outstanding decrement, atomically.
	void record_resolved(const MessageId &id, MessageStatus terminal, Timestamp ts, const std::string &error = {});

	std::optional<MessageLogEntry> message(const MessageId &id) const;
	std::vector<MessageLogEntry> messages_for_incident(const IncidentId &id) const;
	std::vector<MessageLogEntry> unresolved_messages() const;

	// --- persisted stage data ---------------------------------------------

	std::int64_t persist_stage_data(const IncidentId &id, const QueueName &queue, const Json &payload);
	std::vector<PersistedStageRecord> retrieve_stage_data(const IncidentId &id, const QueueName &queue) const;
	std::vector<PersistedStageRecord> stage_data_for_incident(const IncidentId &id) const;

	// --- locks ----------------------------------------------------------

	bool try_acquire_lock(const IncidentId &id, const QueueName &queue, const ConsumerId &holder);
	void release_lock(const IncidentId &id, const QueueName &queue);
	std::vector<StageLock> locks_for_incident(const IncidentId &id) const;
	// Drops every lock; used at startup when no holder can still be alive.
	std::size_t release_all_locks();

	// --- outstanding counter ------------------------------------------------

	std::int64_t adjust_outstanding(const IncidentId &id, int delta);
	std::int64_t outstanding(const IncidentId &id) const;

	// --- cleanup and statistics ---------------------------------------------

	// Deletes stage data and locks of a terminal incident. The incident and
	// its message log are kept. Returns the clear timestamp; repeated calls
	// keep the first one.
	Timestamp clear_incident_state(const IncidentId &id);

	std::vector<QueueStatistics> stage_statistics_for_kind(const std::string &workflow_kind) const;
	std::vector<QueueStatistics> stage_statistics_for_incident(const IncidentId &id) const;

private:
	void require_incident_locked(const IncidentId &id) const;
	std::optional<IncidentRecord> find_incident_locked(const IncidentId &id) const;
	std::optional<MessageLogEntry> message_locked(const MessageId &id) const;
	void log_event_locked(const MessageId &id, MessageStatus event, Timestamp ts, const MessageEventContext &context);
	std::int64_t adjust_outstanding_locked(const IncidentId &id, int delta);

	mutable std::mutex mutex_;
	std::unique_ptr<sql::Database> db_;
	std::set<std::string> workflow_kinds_;
};

} // namespace surgeflow::statestore
