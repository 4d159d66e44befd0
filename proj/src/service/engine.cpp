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
#include "service/engine.hpp"

#include <cerrno>
#include <cstring>
#include <ctime>
#include <set>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fmt/chrono.h>

#include "common/error.hpp"
#include "common/log.hpp"
#include "demo_wildfire/wildfire.hpp"
#include "service/http_server.hpp"
#include "service/task_graph.hpp"

namespace surgeflow::service {

namespace fs = std::filesystem;
using statestore::IncidentStatus;
using statestore::MessageStatus;

// Exclusive advisory lock held by a full engine for its data directory.
class DirectoryLock {
public:
	explicit DirectoryLock(const fs::path &dir) {
		const auto path = dir / "engine.lock";
		fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
		if (fd_ < 0) {
			fail(ErrorCode::Io, "cannot open " + path.string() + ": " + std::strerror(errno));
		}
		if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
			::close(fd_);
			fail(ErrorCode::Conflict, "data directory " + dir.string() + " is in use by another engine");
		}
	}
	~DirectoryLock() {
		::flock(fd_, LOCK_UN);
		::close(fd_);
	}
	DirectoryLock(const DirectoryLock &) = delete;
	DirectoryLock &operator=(const DirectoryLock &) = delete;

private:
	int fd_ = -1;
};

namespace {

std::vector<std::string> split_path(const std::string &path) {
	std::vector<std::string> out;
	std::size_t pos = 0;
	while (pos <= path.size()) {
		const auto next = path.find('/', pos);
		const auto part = path.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
		if (!part.empty()) {
			out.push_back(part);
		}
		if (next == std::string::npos) {
			break;
		}
		pos = next + 1;
	}
	return out;
}

ApiResponse error_response(int status, const std::string &message, const std::string &code) {
	return ApiResponse {status, Json {{"error", message}, {"code", code}}};
}

std::string http_date() {
	return fmt::format("{:%a, %d %b %Y %H:%M:%S} GMT", fmt::gmtime(std::time(nullptr)));
}

} // namespace

Json to_json(const StartupReport &r) {
	return Json {
		{"recovered", r.recovery.restored},
		{"pending", r.recovery.pending},
		{"truncated_records", r.recovery.truncated_records},
		{"locks_released", r.locks_released},
		{"orphans_dropped", r.orphans_dropped},
		{"cleanups_reissued", r.cleanups_reissued},
	};
}

int http_status_for(ErrorCode code) {
	switch (code) {
	case ErrorCode::InvalidArgument:
		return 400;
	case ErrorCode::NotFound:
		return 404;
	case ErrorCode::Conflict:
	case ErrorCode::PreconditionFailed:
		return 409;
	case ErrorCode::PayloadTooLarge:
		return 413;
	default:
		return 500;
	}
}

Engine::Engine(EngineConfig config) :
	config_(std::move(config)) {
	validate(config_);
	fs::create_directories(config_.data_dir);
	if (!config_.inspect_only) {
		dir_lock_ = std::make_unique<DirectoryLock>(config_.data_dir);
	}
	store_ = std::make_unique<statestore::StateStore>(config_.data_dir / "state.db");
	if (config_.inspect_only) {
		return;
	}

	broker::BrokerConfig bc;
	bc.data_dir = config_.data_dir;
	bc.requeue_delay = config_.requeue_delay;
	bc.sync_writes = config_.sync_writes;
	broker_ = std::make_unique<broker::Broker>(bc);
	report_.recovery = broker_->recover();
	log().info("{} recovered, {} pending in the broker", report_.recovery.restored, report_.recovery.pending);

	runtime_ = std::make_unique<wfcore::Runtime>(*broker_, *store_);

	const auto sim = config_.machines_file ? simenv::load_sim_config(*config_.machines_file) : simenv::default_sim_config();
	std::set<std::string> locations;
	for (const auto &m : sim.machines) {
		locations.insert(m.name);
	}
	clock_ = std::make_unique<simenv::SimClock>(simenv::SimClock::Mode::Wall);
	data_ = std::make_unique<simenv::DataManager>(config_.data_dir, locations, sim.transfer_rate, *clock_);
	hpc_ = std::make_unique<simenv::HpcSimulator>(sim, *data_, *clock_, [this](const simenv::JobNotification &n) {
		runtime_->publish_external(n.job.incident_id, n.queue, n.payload, n.parent_message_id);
	});

	mocks_ = std::make_shared<edi::MockSourceRegistry>();
	mocks_->set(demo_wildfire::kDefaultForecastSource, {{"last-modified", http_date()}, {"content-length", "1048576"}});
	sources_ = std::make_unique<edi::SourceRouter>(mocks_);
	edi_ = std::make_unique<edi::ExternalDataInterface>(*runtime_, *data_, *sources_);
	runtime_->add_cleanup_listener([this](const IncidentId &id) { edi_->deregister_incident(id); });

	if (config_.register_wildfire) {
		demo_wildfire::ensure_static_data(*data_);
		runtime_->register_workflow(demo_wildfire::build_wildfire_workflow({*runtime_, *data_, *hpc_, *edi_}));
	}

	pool_ = std::make_unique<workers::WorkerPool>(*runtime_, workers::WorkerPoolConfig {config_.workers, config_.idle_poll_interval});
	http_ = std::make_unique<HttpServer>(*this);
}

Engine::~Engine() {
	try {
		stop(true);
	} catch (const std::exception &e) {
		log().error("engine shutdown: {}", e.what());
	}
}

void Engine::require_full(const char *what) const {
	if (config_.inspect_only) {
		fail(ErrorCode::PreconditionFailed, std::string(what) + " is not available on a read-only inspection engine");
	}
}

void Engine::start() {
	require_full("start");
	std::lock_guard lock(lifecycle_mutex_);
	if (started_) {
		fail(ErrorCode::Conflict, "engine already started");
	}

	report_.locks_released = store_->release_all_locks();

	std::set<MessageId> held;
	for (const auto &m : broker_->held_messages()) {
		held.insert(m.message_id);
	}
	for (const auto &m : store_->unresolved_messages()) {
		if (held.contains(m.message_id)) {
			continue;
		}
		if (m.status == MessageStatus::Processing) {
			store_->record_resolved(m.message_id, MessageStatus::Error, now(), "lost while processing");
		} else {
			store_->record_resolved(m.message_id, MessageStatus::Dropped, now(), "never reached the broker");
		}
		++report_.orphans_dropped;
	}

	for (const auto &incident : store_->incidents()) {
		if ((incident.status != IncidentStatus::Completed && incident.status != IncidentStatus::Cancelled) ||
			incident.cleared_timestamp) {
			continue;
		}
		bool pending_cleanup = false;
		for (const auto &m : store_->messages_for_incident(incident.incident_id)) {
			pending_cleanup = pending_cleanup || (m.cleanup && !statestore::is_terminal(m.status));
		}
		if (!pending_cleanup) {
			runtime_->request_cleanup(incident.incident_id);
			++report_.cleanups_reissued;
		}
	}

	const auto resumed = runtime_->resume_incidents();
	log().info("startup: {} locks released, {} orphaned messages dropped, {} cleanups re-sent, {} incidents resumed",
		report_.locks_released, report_.orphans_dropped, report_.cleanups_reissued, resumed);

	hpc_->start();
	pool_->start();
	started_ = true;
}

int Engine::serve() {
	require_full("serve");
	return http_->listen(config_.host, config_.port);
}

void Engine::stop(bool drain) {
	if (config_.inspect_only) {
		return;
	}
	std::lock_guard lock(lifecycle_mutex_);
	http_->stop();
	edi_->shutdown();
	hpc_->stop();
	pool_->stop(drain);
	started_ = false;
}

bool Engine::running() const {
	std::lock_guard lock(lifecycle_mutex_);
	return started_;
}

int Engine::port() const {
	return http_ ? http_->port() : 0;
}

statestore::StateStore &Engine::store() {
	return *store_;
}

broker::Broker &Engine::broker() {
	require_full("broker");
	return *broker_;
}

wfcore::Runtime &Engine::runtime() {
	require_full("runtime");
	return *runtime_;
}

simenv::DataManager &Engine::data() {
	require_full("data manager");
	return *data_;
}

simenv::HpcSimulator &Engine::hpc() {
	require_full("job simulator");
	return *hpc_;
}

edi::ExternalDataInterface &Engine::edi() {
	require_full("EDI");
	return *edi_;
}

edi::MockSourceRegistry &Engine::mock_sources() {
	require_full("mock sources");
	return *mocks_;
}

workers::WorkerPool &Engine::pool() {
	require_full("worker pool");
	return *pool_;
}

IncidentId Engine::create_incident(const std::string &kind, const std::string &label, const Json &initial_payload) {
	require_full("creating incidents");
	return runtime_->start_incident(kind, label, initial_payload);
}

void Engine::cancel_incident(const IncidentId &id) {
	require_full("cancelling incidents");
	runtime_->cancel_incident(id);
}

void Engine::complete_incident(const IncidentId &id) {
	require_full("completing incidents");
	runtime_->complete_incident(id);
}

Json Engine::incidents_json() const {
	Json out = Json::array();
	for (const auto &r : store_->incidents()) {
		out.push_back(statestore::to_json(r));
	}
	return out;
}

Json Engine::incident_detail(const IncidentId &id) const {
	const auto record = store_->find_incident(id);
	if (!record) {
		fail(ErrorCode::NotFound, "incident " + id + " not found");
	}
	Json stats = Json::array();
	for (const auto &s : store_->stage_statistics_for_incident(id)) {
		stats.push_back(statestore::to_json(s));
	}
	Json stage_data = Json::array();
	for (const auto &r : store_->stage_data_for_incident(id)) {
		stage_data.push_back(statestore::to_json(r));
	}
	Json endpoints = Json::array();
	Json jobs = Json::array();
	if (!config_.inspect_only) {
		for (const auto &e : edi_->endpoints_for_incident(id)) {
			endpoints.push_back(edi::to_json(e));
		}
		for (const auto &j : hpc_->jobs_for_incident(id)) {
			jobs.push_back(simenv::to_json(j));
		}
	}
	return Json {
		{"incident", statestore::to_json(*record)},
		{"task_graph", build_task_graph(store_->messages_for_incident(id))},
		{"statistics", std::move(stats)},
		{"stage_data", std::move(stage_data)},
		{"endpoints", std::move(endpoints)},
		{"jobs", std::move(jobs)},
	};
}

Json Engine::workflows_json() const {
	Json out = Json::array();
	if (config_.inspect_only) {
		std::set<std::string> kinds;
		for (const auto &r : store_->incidents()) {
			kinds.insert(r.workflow_kind);
		}
		for (const auto &k : kinds) {
			out.push_back(Json {{"kind", k}, {"stages", Json::array()}});
		}
		return out;
	}
	for (const auto &kind : runtime_->workflow_kinds()) {
		Json stages = Json::array();
		for (const auto &q : runtime_->workflow_queues(kind)) {
			stages.push_back(Json {{"queue", q}, {"critical", runtime_->is_critical(q).value_or(false)}});
		}
		out.push_back(Json {{"kind", kind}, {"stages", std::move(stages)}});
	}
	return out;
}

Json Engine::workflow_stats(const std::string &kind) const {
	if (!config_.inspect_only && !runtime_->has_workflow(kind)) {
		fail(ErrorCode::NotFound, "workflow '" + kind + "' is not registered");
	}
	Json stages = Json::array();
	for (const auto &s : store_->stage_statistics_for_kind(kind)) {
		stages.push_back(statestore::to_json(s));
	}
	return Json {{"workflow_kind", kind}, {"stages", std::move(stages)}};
}

ApiResponse Engine::handle(const ApiRequest &request) {
	try {
		return route(request);
	} catch (const Error &e) {
		return error_response(http_status_for(e.code()), e.what(), to_string(e.code()));
	} catch (const Json::exception &e) {
		return error_response(400, std::string("malformed JSON: ") + e.what(), to_string(ErrorCode::InvalidArgument));
	} catch (const std::exception &e) {
		log().error("{} {}: {}", request.method, request.path, e.what());
		return error_response(500, e.what(), to_string(ErrorCode::Internal));
	}
}

ApiResponse Engine::route(const ApiRequest &request) {
	const auto parts = split_path(request.path);
	const bool get = request.method == "GET";
	const bool post = request.method == "POST";
	const auto method_not_allowed = [&] {
		return error_response(405, request.method + " not allowed on " + request.path, to_string(ErrorCode::InvalidArgument));
	};

	if (!parts.empty() && parts[0] == "edi") {
		if (!post) {
			return method_not_allowed();
		}
		require_full("EDI");
		const auto path = request.path.substr(request.path.find("/edi") + 4);
		const auto r = edi_->handle_push(path, request.body, request.headers);
		return ApiResponse {202, Json {{"message_id", r.message_id}, {"data_id", r.data_id}, {"endpoint_id", r.endpoint_id}}};
	}
	if (parts.size() == 1 && parts[0] == "health") {
		Json h {{"status", "ok"}, {"inspect_only", config_.inspect_only}};
		if (!config_.inspect_only) {
			h["running"] = running();
			h["workers"] = pool_->target_workers();
			h["startup"] = to_json(report_);
		}
		return ApiResponse {200, h};
	}
	if (parts.empty() || parts[0] != "api") {
		return error_response(404, "no route for " + request.path, to_string(ErrorCode::NotFound));
	}
	if (parts.size() == 2 && parts[1] == "incidents") {
		if (get) {
			return ApiResponse {200, incidents_json()};
		}
		if (!post) {
			return method_not_allowed();
		}
		const auto body = request.body.empty() ? Json::object() : Json::parse(request.body);
		if (!body.is_object()) {
			fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
		}
		std::string kind = body.value("workflow_kind", body.value("kind", ""));
		if (kind.empty()) {
			fail(ErrorCode::InvalidArgument, "workflow_kind is required");
		}
		const auto id = create_incident(kind, body.value("label", ""), body.value("initial_payload", Json::object()));
		return ApiResponse {201, Json {{"incident_id", id}, {"status", "ACTIVE"}}};
	}
	if (parts.size() == 3 && parts[1] == "incidents") {
		if (!get) {
			return method_not_allowed();
		}
		return ApiResponse {200, incident_detail(parts[2])};
	}
	if (parts.size() == 4 && parts[1] == "incidents" && parts[3] == "cancel") {
		if (!post) {
			return method_not_allowed();
		}
		if (!store_->find_incident(parts[2])) {
			fail(ErrorCode::NotFound, "incident " + parts[2] + " not found");
		}
		cancel_incident(parts[2]);
		return ApiResponse {200, Json {{"incident_id", parts[2]}, {"status", "CANCELLED"}}};
	}
	if (parts.size() == 2 && parts[1] == "workflows") {
		if (!get) {
			return method_not_allowed();
		}
		return ApiResponse {200, workflows_json()};
	}
	if (parts.size() == 4 && parts[1] == "workflows" && parts[3] == "stats") {
		if (!get) {
			return method_not_allowed();
		}
		return ApiResponse {200, workflow_stats(parts[2])};
	}
	return error_response(404, "no route for " + request.path, to_string(ErrorCode::NotFound));
}

} // namespace surgeflow::service
