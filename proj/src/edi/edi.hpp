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

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "edi/sources.hpp"
#include "simenv/data_manager.hpp"
#include "wfcore/runtime.hpp"

namespace surgeflow::edi {

enum class EndpointKind {
	Push,
	Pull,
};

const char *to_string(EndpointKind kind);

struct Endpoint {
	std::string endpoint_id;
	IncidentId incident_id;
	EndpointKind kind = EndpointKind::Push;
	// URI path for PUSH, source URL for PULL.
	std::string path;
	QueueName target_queue;
	std::chrono::milliseconds poll_interval {0};
	std::optional<std::string> last_signature;
	bool active = true;
	std::size_t polls = 0;
	std::size_t messages = 0;
};

Json to_json(const Endpoint &e);

struct EdiConfig {
	std::size_t max_push_bytes = 8 * 1024 * 1024;
	std::set<std::string> signature_headers {"last-modified", "content-length"};
	// Header metadata copied into a message is capped at this many bytes.
	std::size_t max_metadata_bytes = 4096;
	// When false, pull endpoints only poll through poll_now().
	bool run_pollers = true;
};

struct PushResult {
	MessageId message_id;
	DataId data_id;
	std::string endpoint_id;
};

// Turns pushed bodies and changed pull sources into workflow messages. Bulk
// data goes to the data manager; messages carry only the handle.
class ExternalDataInterface {
public:
	ExternalDataInterface(wfcore::Runtime &runtime, simenv::DataManager &data, SourceProbe &probe, EdiConfig config = {});
	~ExternalDataInterface();

	ExternalDataInterface(const ExternalDataInterface &) = delete;
	ExternalDataInterface &operator=(const ExternalDataInterface &) = delete;

	std::string register_push_endpoint(const IncidentId &incident, std::string path, const QueueName &target_queue);
	PushResult handle_push(std::string_view path, std::string_view body, const Headers &metadata = {});

	std::string register_pull_endpoint(
		const IncidentId &incident, const std::string &url, std::chrono::milliseconds poll_interval,
		const QueueName &target_queue);
	// One poll cycle; returns the message sent, if the signature changed.
	std::optional<MessageId> poll_now(const std::string &endpoint_id);

	// Deactivates every endpoint of the incident and stops its pollers.
	std::size_t deregister_incident(const IncidentId &incident);
	void shutdown();

	std::vector<Endpoint> endpoints() const;
	std::vector<Endpoint> endpoints_for_incident(const IncidentId &incident) const;
	std::optional<Endpoint> endpoint(const std::string &endpoint_id) const;

	static std::string normalize_path(std::string_view path);

private:
	struct State {
		Endpoint endpoint;
		std::mutex poll_mutex;
		std::condition_variable_any wake;
		bool stop = false;
		std::thread poller;
	};

	void require_active_incident(const IncidentId &incident) const;
	void require_stage(const IncidentId &incident, const QueueName &queue) const;
	std::shared_ptr<State> find_state(const std::string &endpoint_id) const;
	std::optional<MessageId> poll_once(State &state);
	void poll_loop(State &state);
	void stop_states(std::vector<std::shared_ptr<State>> states);
	Json capped_metadata(const Headers &headers) const;

	wfcore::Runtime &runtime_;
	simenv::DataManager &data_;
	SourceProbe &probe_;
	EdiConfig config_;

	mutable std::mutex mutex_;
	std::map<std::string, std::shared_ptr<State>> states_;
	std::map<std::string, std::string> push_routes_;
	std::size_t next_id_ = 1;
};

} // namespace surgeflow::edi
