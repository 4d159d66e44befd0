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
#include "wfcore/runtime.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include "common/error.hpp"
#include "common/log.hpp"
#include "wfcore/handler_context.hpp"

namespace surgeflow::wfcore {

using statestore::IncidentStatus;
using statestore::MessageEventContext;
using statestore::MessageStatus;

const char *to_string(Outcome outcome) {
	switch (outcome) {
	case Outcome::Completed:
		return "completed";
	case Outcome::Failed:
		return "failed";
	case Outcome::Dropped:
		return "dropped";
	case Outcome::Requeued:
		return "requeued";
	case Outcome::CleanupDeferred:
		return "cleanup-deferred";
	case Outcome::CleanupDone:
		return "cleanup-done";
	case Outcome::AlreadyResolved:
		return "already-resolved";
	case Outcome::Abandoned:
		return "abandoned";
	}
	return "?";
}

Runtime::Runtime(broker::Broker &broker, statestore::StateStore &store) :
	broker_(broker),
	store_(store) {
	broker_.declare_queue(kCleanupQueue);
}

void Runtime::register_workflow(WorkflowDefinition definition) {
	if (definition.kind.empty()) {
		fail(ErrorCode::InvalidArgument, "workflow kind must not be empty");
	}
	std::set<QueueName> names;
	for (const auto &stage : definition.stages) {
		if (!is_valid_queue_name(stage.queue) || stage.queue == kCleanupQueue) {
			fail(ErrorCode::InvalidArgument, "invalid stage queue '" + stage.queue + "'");
		}
		if (!stage.handler) {
			fail(ErrorCode::InvalidArgument, "stage '" + stage.queue + "' has no handler");
		}
		if (!names.insert(stage.queue).second) {
			fail(ErrorCode::InvalidArgument, "duplicate stage queue '" + stage.queue + "'");
		}
	}
	if (!names.contains(definition.init_queue)) {
		fail(ErrorCode::InvalidArgument, "init queue '" + definition.init_queue + "' is not a registered stage");
	}

	std::unique_lock lock(registry_mutex_);
	if (workflows_.contains(definition.kind)) {
		fail(ErrorCode::Conflict, "workflow '" + definition.kind + "' is already registered");
	}
	for (const auto &name : names) {
		if (auto it = stages_.find(name); it != stages_.end()) {
			fail(ErrorCode::Conflict, "queue '" + name + "' already belongs to workflow '" + it->second.kind + "'");
		}
	}
	for (const auto &name : names) {
		broker_.declare_queue(name);
	}
	Workflow wf {definition.init_queue, std::move(definition.on_init), std::move(definition.on_resume), std::move(definition.check_payload), {names.begin(), names.end()}};
	for (auto &stage : definition.stages) {
		QueueName name = stage.queue;
		stages_.emplace(std::move(name), Stage {definition.kind, std::move(stage)});
	}
	workflows_.emplace(definition.kind, std::move(wf));
	store_.register_workflow_kind(definition.kind);
	log().info("registered workflow {} with {} stages", definition.kind, names.size());
}

bool Runtime::has_workflow(const std::string &kind) const {
	std::shared_lock lock(registry_mutex_);
	return workflows_.contains(kind);
}

std::vector<std::string> Runtime::workflow_kinds() const {
	std::shared_lock lock(registry_mutex_);
	std::vector<std::string> out;
	for (const auto &[kind, wf] : workflows_) {
		out.push_back(kind);
	}
	return out;
}

std::vector<QueueName> Runtime::workflow_queues(const std::string &kind) const {
	std::shared_lock lock(registry_mutex_);
	auto it = workflows_.find(kind);
	return it == workflows_.end() ? std::vector<QueueName> {} : it->second.queues;
}

std::optional<bool> Runtime::is_critical(const QueueName &queue) const {
	std::shared_lock lock(registry_mutex_);
	auto it = stages_.find(queue);
	if (it == stages_.end()) {
		return std::nullopt;
	}
	return it->second.registration.critical;
}

std::vector<QueueName> Runtime::subscriptions() const {
	std::shared_lock lock(registry_mutex_);
	std::vector<QueueName> out;
	out.reserve(stages_.size() + 1);
	for (const auto &[name, stage] : stages_) {
		out.push_back(name);
	}
	out.push_back(kCleanupQueue);
	return out;
}

bool Runtime::stage_in_workflow(const QueueName &queue, const std::string &kind) const {
	std::shared_lock lock(registry_mutex_);
	auto it = stages_.find(queue);
	return it != stages_.end() && it->second.kind == kind;
}

MessageId Runtime::publish_tracked(
	const IncidentId &incident, const QueueName &queue, const Json &payload,
	const std::optional<MessageId> &parent, bool cleanup) {
	broker::Message m;
	m.message_id = random_id("msg");
	m.queue = queue;
	m.incident_id = incident;
	m.parent_message_id = parent;
	m.payload = payload;

	MessageEventContext ctx;
	ctx.incident_id = incident;
	ctx.queue = queue;
	ctx.parent_message_id = parent;
	ctx.cleanup = cleanup;
	// Count the message before the broker can hand it to a worker.
	store_.record_sent(m.message_id, now(), ctx);
	try {
		broker_.publish(m);
	} catch (...) {
		store_.record_resolved(m.message_id, MessageStatus::Dropped, now(), "publish failed");
		throw;
	}
	return m.message_id;
}

IncidentId Runtime::start_incident(const std::string &kind, const std::string &label, const Json &initial_payload) {
	QueueName init_queue;
	InitHook on_init;
	PayloadCheck check_payload;
	{
		std::shared_lock lock(registry_mutex_);
		auto it = workflows_.find(kind);
		if (it == workflows_.end()) {
			fail(ErrorCode::InvalidArgument, "unknown workflow kind '" + kind + "'");
		}
		init_queue = it->second.init_queue;
		on_init = it->second.on_init;
		check_payload = it->second.check_payload;
	}
	if (check_payload) {
		check_payload(initial_payload);
	}
	const IncidentId id = store_.create_incident(kind, label);
	store_.set_incident_status(id, IncidentStatus::Active);
	if (on_init) {
		try {
			on_init(IncidentInit {id, label, initial_payload});
		} catch (const std::exception &e) {
			log().error("incident {}: init hook failed: {}", id, e.what());
			store_.set_incident_status(id, IncidentStatus::Error);
			throw;
		}
	}
	publish_tracked(id, init_queue, initial_payload, std::nullopt, false);
	log().info("incident {} ({}, '{}') started", id, kind, label);
	return id;
}

void Runtime::finish_incident(const IncidentId &id, IncidentStatus status, const std::optional<MessageId> &parent) {
	const auto record = store_.incident(id);
	if (record.status != IncidentStatus::Active) {
		fail(ErrorCode::Conflict,
			"incident " + id + " is " + statestore::to_string(record.status) + ", not ACTIVE");
	}
	store_.set_incident_status(id, status);
	publish_tracked(id, kCleanupQueue, Json {{"incident_id", id}}, parent, true);
	log().info("incident {} -> {}", id, statestore::to_string(status));
}

void Runtime::complete_incident(const IncidentId &id, const std::optional<MessageId> &parent) {
	finish_incident(id, IncidentStatus::Completed, parent);
}

void Runtime::cancel_incident(const IncidentId &id, const std::optional<MessageId> &parent) {
	finish_incident(id, IncidentStatus::Cancelled, parent);
}

MessageId Runtime::publish_external(
	const IncidentId &incident, const QueueName &queue, const Json &payload, const std::optional<MessageId> &parent) {
	const auto record = store_.incident(incident);
	if (record.status != IncidentStatus::Active) {
		fail(ErrorCode::Conflict,
			"incident " + incident + " is " + statestore::to_string(record.status) + ", not ACTIVE");
	}
	if (!stage_in_workflow(queue, record.workflow_kind)) {
		fail(ErrorCode::NotFound, "queue '" + queue + "' is not a stage of workflow '" + record.workflow_kind + "'");
	}
	return publish_tracked(incident, queue, payload, parent, false);
}

MessageId Runtime::request_cleanup(const IncidentId &id) {
	const auto record = store_.incident(id);
	if (record.status != IncidentStatus::Completed && record.status != IncidentStatus::Cancelled) {
		fail(ErrorCode::PreconditionFailed,
			"incident " + id + " is " + statestore::to_string(record.status) + "; only finished incidents are cleaned up");
	}
	return publish_tracked(id, kCleanupQueue, Json {{"incident_id", id}}, std::nullopt, true);
}

std::size_t Runtime::resume_incidents() {
	std::map<std::string, ResumeHook> hooks;
	{
		std::shared_lock lock(registry_mutex_);
		for (const auto &[kind, wf] : workflows_) {
			if (wf.on_resume) {
				hooks.emplace(kind, wf.on_resume);
			}
		}
	}
	std::size_t resumed = 0;
	for (const auto &incident : store_.incidents()) {
		if (incident.status != IncidentStatus::Active) {
			continue;
		}
		auto it = hooks.find(incident.workflow_kind);
		if (it == hooks.end()) {
			continue;
		}
		try {
			it->second(incident.incident_id);
			++resumed;
		} catch (const std::exception &e) {
			log().warn("incident {}: resume failed: {}", incident.incident_id, e.what());
		}
	}
	return resumed;
}

void Runtime::add_cleanup_listener(std::function<void(const IncidentId &)> listener) {
	std::unique_lock lock(registry_mutex_);
	cleanup_listeners_.push_back(std::move(listener));
}

Outcome Runtime::execute_delivery(const broker::Delivery &delivery, const std::atomic<bool> *abandon) {
	const auto &m = delivery.message;
	const auto abandoned = [abandon] {
		return abandon && abandon->load();
	};

	const auto entry = store_.message(m.message_id);
	if (!entry) {
		log().warn("message {} on {} has no log entry; discarding", m.message_id, m.queue);
		broker_.ack(delivery.tag);
		return Outcome::AlreadyResolved;
	}
	if (statestore::is_terminal(entry->status)) {
		// Resolved before a crash cut the acknowledgement short.
		broker_.ack(delivery.tag);
		return Outcome::AlreadyResolved;
	}

	MessageEventContext delivered;
	delivered.consumer_id = delivery.tag.consumer_id;
	store_.log_message_event(m.message_id, MessageStatus::Delivered, now(), delivered);

	if (m.queue == kCleanupQueue) {
		return run_cleanup(delivery);
	}

	const auto incident = store_.find_incident(m.incident_id);
	if (!incident || incident->status != IncidentStatus::Active) {
		store_.record_resolved(m.message_id, MessageStatus::Dropped, now());
		broker_.ack(delivery.tag);
		return Outcome::Dropped;
	}

	std::optional<Stage> stage;
	{
		std::shared_lock lock(registry_mutex_);
		if (auto it = stages_.find(m.queue); it != stages_.end()) {
			stage = it->second;
		}
	}

	if (abandoned()) {
		return Outcome::Abandoned;
	}

	const bool critical = stage && stage->registration.critical;
	if (critical && !store_.try_acquire_lock(m.incident_id, m.queue, delivery.tag.consumer_id)) {
		broker_.requeue(delivery.tag);
		return Outcome::Requeued;
	}

	store_.log_message_event(m.message_id, MessageStatus::Processing, now());

	std::string error;
	HandlerContext ctx(*this, m, incident->workflow_kind, critical);
	try {
		if (!stage) {
			fail(ErrorCode::NotFound, "no handler registered for queue '" + m.queue + "'");
		}
		stage->registration.handler(ctx);
	} catch (const std::exception &e) {
		error = e.what();
		if (error.empty()) {
			error = "handler failed";
		}
	} catch (...) {
		error = "handler threw a non-standard exception";
	}

	if (abandoned()) {
		return Outcome::Abandoned;
	}

	if (!error.empty()) {
		log().error("incident {}: handler for {} failed: {}", m.incident_id, m.queue, error);
		store_.record_resolved(m.message_id, MessageStatus::Error, now(), error);
		try {
			store_.set_incident_status(m.incident_id, IncidentStatus::Error);
		} catch (const Error &e) {
			// Already terminal (completed or cancelled meanwhile); keep that status.
			log().warn("incident {}: not marked ERROR: {}", m.incident_id, e.what());
		}
		if (critical) {
			store_.release_lock(m.incident_id, m.queue);
		}
		broker_.ack(delivery.tag);
		return Outcome::Failed;
	}

	for (const auto &out : ctx.outbox()) {
		publish_tracked(m.incident_id, out.target, out.payload, m.message_id, false);
	}
	store_.record_resolved(m.message_id, MessageStatus::Completed, now());
	if (critical) {
		store_.release_lock(m.incident_id, m.queue);
	}
	broker_.ack(delivery.tag);
	return Outcome::Completed;
}

Outcome Runtime::run_cleanup(const broker::Delivery &delivery) {
	const auto &m = delivery.message;
	const auto incident = store_.find_incident(m.incident_id);
	if (incident && (!statestore::is_terminal(incident->status) || incident->outstanding_messages > 0)) {
		broker_.requeue(delivery.tag);
		return Outcome::CleanupDeferred;
	}
	store_.log_message_event(m.message_id, MessageStatus::Processing, now());
	if (incident) {
		store_.clear_incident_state(m.incident_id);
		std::vector<std::function<void(const IncidentId &)>> listeners;
		{
			std::shared_lock lock(registry_mutex_);
			listeners = cleanup_listeners_;
		}
		for (const auto &listener : listeners) {
			try {
				listener(m.incident_id);
			} catch (const std::exception &e) {
				log().warn("incident {}: cleanup listener failed: {}", m.incident_id, e.what());
			}
		}
	}
	store_.record_resolved(m.message_id, MessageStatus::Completed, now());
	broker_.ack(delivery.tag);
	log().info("incident {} cleaned up", m.incident_id);
	return Outcome::CleanupDone;
}

} // namespace surgeflow::wfcore
