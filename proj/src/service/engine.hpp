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
#include <memory>
#include <mutex>
#include <string>

#include "broker/broker.hpp"
#include "edi/edi.hpp"
#include "service/config.hpp"
#include "simenv/hpc_simulator.hpp"
#include "statestore/state_store.hpp"
#include "wfcore/runtime.hpp"
#include "workers/worker_pool.hpp"

namespace surgeflow::service {

struct StartupReport {
	broker::RecoveryReport recovery;
	std::size_t locks_released = 0;
	// Messages logged as sent that the broker never received.
	std::size_t orphans_dropped = 0;
	// Terminal incidents whose cleanup message was lost and has been re-sent.
	std::size_t cleanups_reissued = 0;
};

Json to_json(const StartupReport &r);

struct ApiRequest {
	std::string method;
	std::string path;
	std::string body;
	std::map<std::string, std::string> headers;
};

struct ApiResponse {
	int status = 200;
	Json body;
};

int http_status_for(ErrorCode code);

class HttpServer;
class DirectoryLock;

// One engine process: broker, state store, runtime, worker pool, simulated
// environment, EDI and the management API.
class Engine {
public:
	// Opens the data directory and recovers the broker. Workflows may be
	// registered on runtime() between construction and start().
	explicit Engine(EngineConfig config);
	~Engine();

	Engine(const Engine &) = delete;
	Engine &operator=(const Engine &) = delete;

	// Reconciles state left by a previous run, then starts workers, the job
	// simulator and pull pollers.
	void start();
	// Starts the HTTP listener; returns the bound port.
	int serve();
	// drain=false abandons in-flight deliveries, as a crash would.
	void stop(bool drain = true);

	bool running() const;
	int port() const;
	const EngineConfig &config() const noexcept {
		return config_;
	}
	const StartupReport &startup_report() const noexcept {
		return report_;
	}

	// Routes a management request. Used by the HTTP listener and in-process
	// callers alike.
	ApiResponse handle(const ApiRequest &request);

	IncidentId create_incident(const std::string &kind, const std::string &label, const Json &initial_payload);
	void cancel_incident(const IncidentId &id);
	void complete_incident(const IncidentId &id);
	Json incidents_json() const;
	Json incident_detail(const IncidentId &id) const;
	Json workflows_json() const;
	Json workflow_stats(const std::string &kind) const;

	statestore::StateStore &store();
	broker::Broker &broker();
	wfcore::Runtime &runtime();
	simenv::DataManager &data();
	simenv::HpcSimulator &hpc();
	edi::ExternalDataInterface &edi();
	edi::MockSourceRegistry &mock_sources();
	workers::WorkerPool &pool();

private:
	void require_full(const char *what) const;
	ApiResponse route(const ApiRequest &request);

	EngineConfig config_;
	StartupReport report_;
	std::unique_ptr<DirectoryLock> dir_lock_;
	std::unique_ptr<broker::Broker> broker_;
	std::unique_ptr<statestore::StateStore> store_;
	std::unique_ptr<wfcore::Runtime> runtime_;
	std::unique_ptr<simenv::SimClock> clock_;
	std::unique_ptr<simenv::DataManager> data_;
	std::shared_ptr<edi::MockSourceRegistry> mocks_;
	std::unique_ptr<edi::SourceRouter> sources_;
	std::unique_ptr<simenv::HpcSimulator> hpc_;
	std::unique_ptr<edi::ExternalDataInterface> edi_;
	std::unique_ptr<workers::WorkerPool> pool_;
	std::unique_ptr<HttpServer> http_;

	mutable std::mutex lifecycle_mutex_;
	bool started_ = false;
};

} // namespace surgeflow::service
