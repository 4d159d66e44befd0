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
#include "edi/edi.hpp"

#include "common/error.hpp"
#include "common/log.hpp"
#include "simenv/machines.hpp"

namespace surgeflow::edi {

using statestore::IncidentStatus;

const char *to_string(EndpointKind kind) {
	return kind == EndpointKind::Push ? "PUSH" : "PULL";
}

Json to_json(const Endpoint &e) {
	Json j {
		{"endpoint_id", e.endpoint_id},
		{"incident_id", e.incident_id},
		{"kind", to_string(e.kind)},
		{"path", e.path},
		{"target_queue", e.target_queue},
		{"active", e.active},
		{"messages", e.messages},
	};
	if (e.kind == EndpointKind::Pull) {
		j["poll_interval_ms"] = e.poll_interval.count();
		j["last_signature"] = e.last_signature ? Json(*e.last_signature) : Json();
		j["polls"] = e.polls;
	}
	return j;
}

ExternalDataInterface::ExternalDataInterface(
	wfcore::Runtime &runtime, simenv::DataManager &data, SourceProbe &probe, EdiConfig config) :
	runtime_(runtime),
	data_(data),
	probe_(probe),
	config_(std::move(config)) {
}

ExternalDataInterface::~ExternalDataInterface() {
	shutdown();
}

std::string ExternalDataInterface::normalize_path(std::string_view path) {
	std::string p(path);
	if (p.empty() || p.front() != '/') {
		p.insert(p.begin(), '/');
	}
	while (p.size() > 1 && p.back() == '/') {
		p.pop_back();
	}
	return p;
}

void ExternalDataInterface::require_active_incident(const IncidentId &incident) const {
	const auto record = runtime_.store().incident(incident);
	if (record.status != IncidentStatus::Active) {
		fail(ErrorCode::Conflict,
			"incident " + incident + " is " + statestore::to_string(record.status) + ", not ACTIVE");
	}
}

void ExternalDataInterface::require_stage(const IncidentId &incident, const QueueName &queue) const {
	const auto kind = runtime_.store().incident(incident).workflow_kind;
	const auto queues = runtime_.workflow_queues(kind);
	if (std::find(queues.begin(), queues.end(), queue) == queues.end()) {
		fail(ErrorCode::NotFound, "queue '" + queue + "' is not a stage of workflow '" + kind + "'");
	}
}

std::string ExternalDataInterface::register_push_endpoint(
	const IncidentId &incident, std::string path, const QueueName &target_queue) {
	require_active_incident(incident);
	require_stage(incident, target_queue);
	path = normalize_path(path);

	std::lock_guard lock(mutex_);
	if (push_routes_.contains(path)) {
		fail(ErrorCode::Conflict, "push path " + path + " is already registered");
	}
	auto state = std::make_shared<State>();
	auto &e = state->endpoint;
	e.endpoint_id = "edp-" + std::to_string(next_id_++);
	e.incident_id = incident;
	e.kind = EndpointKind::Push;
	e.path = path;
	e.target_queue = target_queue;
	push_routes_.emplace(path, e.endpoint_id);
	states_.emplace(e.endpoint_id, state);
	log().info("incident {}: push endpoint {} -> {}", incident, path, target_queue);
	return e.endpoint_id;
}

Json ExternalDataInterface::capped_metadata(const Headers &headers) const {
	Json out = Json::object();
	std::size_t used = 0;
	for (const auto &[k, v] : headers) {
		const auto cost = k.size() + v.size();
		if (used + cost > config_.max_metadata_bytes) {
			continue;
		}
		used += cost;
		out[k] = v;
	}
	return out;
}

PushResult ExternalDataInterface::handle_push(std::string_view path, std::string_view body, const Headers &metadata) {
	const auto normalized = normalize_path(path);
	std::shared_ptr<State> state;
	{
		std::lock_guard lock(mutex_);
		auto it = push_routes_.find(normalized);
		if (it == push_routes_.end()) {
			fail(ErrorCode::NotFound, "no push endpoint at " + normalized);
		}
		state = states_.at(it->second);
	}
	if (body.size() > config_.max_push_bytes) {
		fail(ErrorCode::PayloadTooLarge,
			"push body of " + std::to_string(body.size()) + " bytes exceeds " + std::to_string(config_.max_push_bytes));
	}
	const auto incident = state->endpoint.incident_id;
	require_active_incident(incident);

	PushResult result;
	result.endpoint_id = state->endpoint.endpoint_id;
	result.data_id = data_.register_data(normalized, body, simenv::kLocalStore, "edi push " + normalized);
	Json payload {
		{"endpoint_id", result.endpoint_id},
		{"path", normalized},
		{"data_id", result.data_id},
		{"size_bytes", body.size()},
		{"metadata", capped_metadata(metadata)},
	};
	result.message_id = runtime_.publish_external(incident, state->endpoint.target_queue, payload);
	{
		std::lock_guard lock(mutex_);
		++state->endpoint.messages;
	}
	return result;
}

std::string ExternalDataInterface::register_pull_endpoint(
	const IncidentId &incident, const std::string &url, std::chrono::milliseconds poll_interval,
	const QueueName &target_queue) {
	require_active_incident(incident);
	require_stage(incident, target_queue);
	if (poll_interval.count() <= 0) {
		fail(ErrorCode::InvalidArgument, "poll_interval must be positive");
	}
	if (url.empty()) {
		fail(ErrorCode::InvalidArgument, "source url must not be empty");
	}
	auto state = std::make_shared<State>();
	auto &e = state->endpoint;
	std::string id;
	{
		std::lock_guard lock(mutex_);
		e.endpoint_id = "edp-" + std::to_string(next_id_++);
		e.incident_id = incident;
		e.kind = EndpointKind::Pull;
		e.path = url;
		e.target_queue = target_queue;
		e.poll_interval = poll_interval;
		id = e.endpoint_id;
		states_.emplace(id, state);
		if (config_.run_pollers) {
			state->poller = std::thread([this, state] { poll_loop(*state); });
		}
	}
	log().info("incident {}: pull endpoint {} every {} ms -> {}", incident, url, poll_interval.count(), target_queue);
	return id;
}

std::shared_ptr<ExternalDataInterface::State> ExternalDataInterface::find_state(const std::string &endpoint_id) const {
	std::lock_guard lock(mutex_);
	auto it = states_.find(endpoint_id);
	if (it == states_.end()) {
		fail(ErrorCode::NotFound, "unknown endpoint " + endpoint_id);
	}
	return it->second;
}

std::optional<MessageId> ExternalDataInterface::poll_now(const std::string &endpoint_id) {
	auto state = find_state(endpoint_id);
	if (state->endpoint.kind != EndpointKind::Pull) {
		fail(ErrorCode::InvalidArgument, "endpoint " + endpoint_id + " is not a pull endpoint");
	}
	return poll_once(*state);
}

std::optional<MessageId> ExternalDataInterface::poll_once(State &state) {
	std::lock_guard poll_lock(state.poll_mutex);
	std::string url;
	IncidentId incident;
	QueueName queue;
	std::optional<std::string> last;
	{
		std::lock_guard lock(mutex_);
		if (!state.endpoint.active) {
			return std::nullopt;
		}
		++state.endpoint.polls;
		url = state.endpoint.path;
		incident = state.endpoint.incident_id;
		queue = state.endpoint.target_queue;
		last = state.endpoint.last_signature;
	}
	const auto meta = probe_.probe(url);
	if (!meta) {
		return std::nullopt;
	}
	const auto signature = signature_of(meta->headers, config_.signature_headers);
	if (last == signature) {
		return std::nullopt;
	}
	Json payload {
		{"endpoint_id", state.endpoint.endpoint_id},
		{"source", url},
		{"signature", signature},
		{"metadata", capped_metadata(meta->headers)},
	};
	MessageId id;
	try {
		id = runtime_.publish_external(incident, queue, payload);
	} catch (const Error &e) {
		log().warn("pull endpoint {}: {}; stopping", state.endpoint.endpoint_id, e.what());
		std::lock_guard lock(mutex_);
		state.endpoint.active = false;
		state.stop = true;
		return std::nullopt;
	}
	std::lock_guard lock(mutex_);
	state.endpoint.last_signature = signature;
	++state.endpoint.messages;
	return id;
}

void ExternalDataInterface::poll_loop(State &state) {
	std::unique_lock lock(mutex_);
	while (!state.stop) {
		lock.unlock();
		try {
			poll_once(state);
		} catch (const std::exception &e) {
			log().warn("pull endpoint {}: poll failed: {}", state.endpoint.endpoint_id, e.what());
		}
		lock.lock();
		state.wake.wait_for(lock, state.endpoint.poll_interval, [&] { return state.stop; });
	}
}

void ExternalDataInterface::stop_states(std::vector<std::shared_ptr<State>> states) {
	for (auto &s : states) {
		s->wake.notify_all();
	}
	// A cleanup listener and shutdown() may stop the same endpoint at once;
	// whoever takes the thread joins it.
	std::vector<std::thread> threads;
	{
		std::lock_guard lock(mutex_);
		for (auto &s : states) {
			if (s->poller.joinable() && s->poller.get_id() != std::this_thread::get_id()) {
				threads.push_back(std::move(s->poller));
			}
		}
	}
	for (auto &t : threads) {
		t.join();
	}
}

std::size_t ExternalDataInterface::deregister_incident(const IncidentId &incident) {
	std::vector<std::shared_ptr<State>> stopping;
	{
		std::lock_guard lock(mutex_);
		for (auto &[id, state] : states_) {
			if (state->endpoint.incident_id != incident || !state->endpoint.active) {
				continue;
			}
			state->endpoint.active = false;
			state->stop = true;
			if (state->endpoint.kind == EndpointKind::Push) {
				push_routes_.erase(state->endpoint.path);
			}
			stopping.push_back(state);
		}
		// Pull endpoints that stopped on their own still need their thread joined.
		for (auto &[id, state] : states_) {
			if (state->endpoint.incident_id == incident && state->stop &&
				std::find(stopping.begin(), stopping.end(), state) == stopping.end()) {
				stopping.push_back(state);
			}
		}
	}
	const auto n = stopping.size();
	stop_states(std::move(stopping));
	if (n > 0) {
		log().info("incident {}: {} endpoints deregistered", incident, n);
	}
	return n;
}

void ExternalDataInterface::shutdown() {
	std::vector<std::shared_ptr<State>> stopping;
	{
		std::lock_guard lock(mutex_);
		for (auto &[id, state] : states_) {
			state->stop = true;
			stopping.push_back(state);
		}
	}
	stop_states(std::move(stopping));
}

std::vector<Endpoint> ExternalDataInterface::endpoints() const {
	std::lock_guard lock(mutex_);
	std::vector<Endpoint> out;
	for (const auto &[id, state] : states_) {
		out.push_back(state->endpoint);
	}
	return out;
}

std::vector<Endpoint> ExternalDataInterface::endpoints_for_incident(const IncidentId &incident) const {
	auto all = endpoints();
	std::erase_if(all, [&](const Endpoint &e) {
		return e.incident_id != incident;
	});
	return all;
}

std::optional<Endpoint> ExternalDataInterface::endpoint(const std::string &endpoint_id) const {
	std::lock_guard lock(mutex_);
	auto it = states_.find(endpoint_id);
	if (it == states_.end()) {
		return std::nullopt;
	}
	return it->second->endpoint;
}

} // namespace surgeflow::edi
