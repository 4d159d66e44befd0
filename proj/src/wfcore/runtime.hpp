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

#include <atomic>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "broker/broker.hpp"
#include "statestore/state_store.hpp"
#include "wfcore/workflow.hpp"

namespace surgeflow::wfcore {

// Reserved internal queue carrying one cleanup message per finished incident.
inline constexpr const char *kCleanupQueue = "__cleanup__";

enum class Outcome {
	Completed,
	Failed,
	Dropped,
	Requeued,
	CleanupDeferred,
	CleanupDone,
	AlreadyResolved,
	Abandoned,
};

const char *to_string(Outcome outcome);

// The workflow runtime. Owns the handler registry and implements the task
// wrapper around every delivery:
//
//   1. log DELIVERED
//   2. incident not ACTIVE: log DROPPED, ack
//   3. critical stage: take the (incident, queue) lock or requeue
//   4. log PROCESSING, run the handler
//   5. clean exit: publish the outbox, log COMPLETED, unlock, ack
//      exception:  log ERROR, incident -> ERROR, unlock, ack
//
// All shared state lives in the broker and the state store, so any number of
// workers may call execute_delivery() concurrently.
class Runtime {
public:
	Runtime(broker::Broker &broker, statestore::StateStore &store);

	Runtime(const Runtime &) = delete;
	Runtime &operator=(const Runtime &) = delete;

	void register_workflow(WorkflowDefinition definition);
	bool has_workflow(const std::string &kind) const;
	std::vector<std::string> workflow_kinds() const;
	// Queues of one workflow, sorted; empty for an unknown kind.
	std::vector<QueueName> workflow_queues(const std::string &kind) const;
	std::optional<bool> is_critical(const QueueName &queue) const;
	// Every registered stage queue plus the cleanup queue.
	std::vector<QueueName> subscriptions() const;

	IncidentId start_incident(const std::string &kind, const std::string &label, const Json &initial_payload);
	void complete_incident(const IncidentId &id, const std::optional<MessageId> &parent = std::nullopt);
	void cancel_incident(const IncidentId &id, const std::optional<MessageId> &parent = std::nullopt);

	// Sends a message on behalf of something outside a handler (external
	// data, job notifications). The incident must be ACTIVE.
	MessageId publish_external(
		const IncidentId &incident, const QueueName &queue, const Json &payload,
		const std::optional<MessageId> &parent = std::nullopt);

	// Runs one delivery to completion. When abandon is set the call stops
	// before logging PROCESSING or after the handler returns, without
	// publishing or acknowledging anything, which is what a crash would do.
	Outcome execute_delivery(
		const broker::Delivery &delivery, const std::atomic<bool> *abandon = nullptr);

	// Publishes a fresh cleanup message for a COMPLETED or CANCELLED incident,
	// for when the original was lost.
	MessageId request_cleanup(const IncidentId &id);

	// Runs each workflow's resume hook for its ACTIVE incidents. Returns how
	// many incidents were resumed.
	std::size_t resume_incidents();

	// Called by the cleanup handler after an incident's state is cleared.
	void add_cleanup_listener(std::function<void(const IncidentId &)> listener);

	broker::Broker &broker() noexcept {
		return broker_;
	}
	statestore::StateStore &store() noexcept {
		return store_;
	}

private:
	friend class HandlerContext;

	struct Stage {
		std::string kind;
		StageRegistration registration;
	};

	struct Workflow {
		QueueName init_queue;
		InitHook on_init;
		ResumeHook on_resume;
		PayloadCheck check_payload;
		std::vector<QueueName> queues;
	};

	MessageId publish_tracked(
		const IncidentId &incident, const QueueName &queue, const Json &payload,
		const std::optional<MessageId> &parent, bool cleanup);
	void finish_incident(const IncidentId &id, statestore::IncidentStatus status, const std::optional<MessageId> &parent);
	Outcome run_cleanup(const broker::Delivery &delivery);
	bool stage_in_workflow(const QueueName &queue, const std::string &kind) const;

	broker::Broker &broker_;
	statestore::StateStore &store_;

	mutable std::shared_mutex registry_mutex_;
	std::map<QueueName, Stage> stages_;
	std::map<std::string, Workflow> workflows_;
	std::vector<std::function<void(const IncidentId &)>> cleanup_listeners_;
};

} // namespace surgeflow::wfcore
