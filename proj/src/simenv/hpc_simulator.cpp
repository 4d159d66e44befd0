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
#include "simenv/hpc_simulator.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/ids.hpp"
#include "common/log.hpp"

namespace surgeflow::simenv {

namespace {

SimDuration scaled(SimDuration d, double speed_factor) {
	return SimDuration(static_cast<SimDuration::rep>(std::llround(static_cast<double>(d.count()) / speed_factor)));
}

double to_ms(SimDuration d) {
	return static_cast<double>(d.count()) / 1000.0;
}

} // namespace

const char *to_string(JobKind kind) {
	return kind == JobKind::Batch ? "BATCH" : "PERSISTENT";
}

const char *to_string(JobStatus status) {
	switch (status) {
	case JobStatus::Queued:
		return "QUEUED";
	case JobStatus::Running:
		return "RUNNING";
	case JobStatus::Completed:
		return "COMPLETED";
	case JobStatus::Failed:
		return "FAILED";
	}
	return "?";
}

JobKind job_kind_from_string(const std::string &s) {
	if (s == "BATCH") {
		return JobKind::Batch;
	}
	if (s == "PERSISTENT") {
		return JobKind::Persistent;
	}
	fail(ErrorCode::InvalidArgument, "unknown job kind '" + s + "'");
}

Json to_json(const Job &job) {
	Json j {
		{"job_id", job.job_id},
		{"name", job.name},
		{"machine", job.machine},
		{"kind", to_string(job.kind)},
		{"status", to_string(job.status)},
		{"incident_id", job.incident_id},
		{"notify_queue", job.notify_queue},
		{"input_data", job.input_data},
		{"outputs", job.outputs},
		{"submitted_ms", to_ms(job.submitted_at)},
		{"started_ms", job.started_at ? Json(to_ms(*job.started_at)) : Json()},
		{"finished_ms", job.finished_at ? Json(to_ms(*job.finished_at)) : Json()},
	};
	if (job.kind == JobKind::Batch) {
		j["nominal_runtime_ms"] = to_ms(job.nominal_runtime);
	} else {
		j["emit_interval_ms"] = to_ms(job.emit_interval);
		j["emit_count"] = job.emit_count;
		j["emitted"] = job.emitted;
		j["completion_queue"] = job.completion_queue.value_or(job.notify_queue);
	}
	return j;
}

HpcSimulator::HpcSimulator(SimConfig config, DataManager &data, SimClock &clock, JobNotifier notifier) :
	config_(std::move(config)),
	data_(data),
	clock_(clock),
	notifier_(std::move(notifier)),
	rng_(config_.seed) {
	validate(config_);
}

HpcSimulator::~HpcSimulator() {
	stop();
}

void HpcSimulator::start() {
	if (clock_.mode() != SimClock::Mode::Wall) {
		return;
	}
	std::lock_guard lock(mutex_);
	if (driver_.joinable()) {
		return;
	}
	stopping_ = false;
	driver_ = std::thread([this] { drive(); });
}

void HpcSimulator::stop() {
	{
		std::lock_guard lock(mutex_);
		stopping_ = true;
	}
	wake_.notify_all();
	if (driver_.joinable()) {
		driver_.join();
	}
}

const Machine *HpcSimulator::find_machine(const std::string &name) const {
	for (const auto &m : config_.machines) {
		if (m.name == name) {
			return &m;
		}
	}
	return nullptr;
}

const Machine &HpcSimulator::machine(const std::string &name) const {
	const auto *m = find_machine(name);
	if (!m) {
		fail(ErrorCode::NotFound, "unknown machine '" + name + "'");
	}
	return *m;
}

int HpcSimulator::running_on(const std::string &machine) const {
	std::lock_guard lock(mutex_);
	return static_cast<int>(std::count_if(jobs_.begin(), jobs_.end(), [&](const auto &kv) {
		return kv.second.job.machine == machine && kv.second.job.status == JobStatus::Running;
	}));
}

JobId HpcSimulator::submit_job(JobSpec spec) {
	const Machine &m = machine(spec.machine);
	if (spec.notify_queue.empty()) {
		fail(ErrorCode::InvalidArgument, "notify_queue is required");
	}
	if (spec.kind == JobKind::Persistent && spec.emit_count < 1) {
		fail(ErrorCode::InvalidArgument, "emit_count must be at least 1");
	}
	if (spec.nominal_runtime.count() < 0 || spec.emit_interval.count() < 0) {
		fail(ErrorCode::InvalidArgument, "job durations must not be negative");
	}
	for (const auto &input : spec.inputs) {
		const auto item = data_.find(input);
		if (!item) {
			fail(ErrorCode::NotFound, "unknown input data item " + input);
		}
		if (item->location != m.name) {
			fail(ErrorCode::PreconditionFailed,
				"input " + input + " is on '" + item->location + "', not on '" + m.name + "'; move it first");
		}
	}

	std::unique_lock lock(mutex_);
	JobState state;
	state.seq = next_id_++;
	auto &job = state.job;
	job.job_id = random_id("job");
	job.name = spec.name.empty() ? job.job_id : spec.name;
	job.machine = m.name;
	job.kind = spec.kind;
	job.incident_id = spec.incident_id;
	job.notify_queue = spec.notify_queue;
	job.completion_queue = spec.completion_queue;
	job.parent_message_id = spec.parent_message_id;
	job.input_data = spec.inputs;
	job.nominal_runtime = spec.nominal_runtime;
	job.emit_interval = spec.emit_interval;
	job.emit_count = spec.kind == JobKind::Persistent ? spec.emit_count : 0;
	job.submitted_at = clock_.now();
	const auto id = job.job_id;
	jobs_.emplace(id, std::move(state));
	log().info("job {} ({} on {}) submitted for incident {}", id, to_string(spec.kind), m.name, spec.incident_id);
	start_queued_locked(m.name);
	lock.unlock();
	wake_.notify_all();
	return id;
}

void HpcSimulator::start_queued_locked(const std::string &machine_name) {
	const Machine &m = machine(machine_name);
	int running = 0;
	std::vector<JobState *> queued;
	for (auto &[id, state] : jobs_) {
		if (state.job.machine != machine_name) {
			continue;
		}
		if (state.job.status == JobStatus::Running) {
			++running;
		} else if (state.job.status == JobStatus::Queued) {
			queued.push_back(&state);
		}
	}
	std::sort(queued.begin(), queued.end(), [](const JobState *a, const JobState *b) {
		return a->seq < b->seq;
	});
	for (auto *state : queued) {
		if (running >= m.max_concurrent_jobs) {
			break;
		}
		begin_locked(*state);
		++running;
	}
}

void HpcSimulator::begin_locked(JobState &state) {
	const Machine &m = machine(state.job.machine);
	const auto now = clock_.now();
	state.job.status = JobStatus::Running;
	state.job.started_at = now;
	if (m.failure_probability > 0) {
		state.will_fail = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < m.failure_probability;
	}
	const auto step = state.job.kind == JobKind::Batch ? state.job.nominal_runtime : state.job.emit_interval;
	state.next_due = now + scaled(step, m.speed_factor);
}

void HpcSimulator::push_data_to_job(const JobId &id, const DataId &data) {
	const auto item = data_.find(data);
	std::lock_guard lock(mutex_);
	auto it = jobs_.find(id);
	if (it == jobs_.end()) {
		fail(ErrorCode::NotFound, "unknown job " + id);
	}
	auto &job = it->second.job;
	if (job.kind != JobKind::Persistent) {
		fail(ErrorCode::PreconditionFailed, "job " + id + " is not PERSISTENT");
	}
	if (job.status != JobStatus::Running) {
		fail(ErrorCode::PreconditionFailed, std::string("job ") + id + " is " + to_string(job.status) + ", not RUNNING");
	}
	if (!item) {
		fail(ErrorCode::NotFound, "unknown data item " + data);
	}
	if (item->location != job.machine) {
		fail(ErrorCode::PreconditionFailed, "data " + data + " is on '" + item->location + "', not on '" + job.machine + "'");
	}
	if (std::find(job.input_data.begin(), job.input_data.end(), data) == job.input_data.end()) {
		job.input_data.push_back(data);
	}
	log().info("job {}: received data {}", id, data);
}

Job HpcSimulator::job_status(const JobId &id) const {
	std::lock_guard lock(mutex_);
	auto it = jobs_.find(id);
	if (it == jobs_.end()) {
		fail(ErrorCode::NotFound, "unknown job " + id);
	}
	return it->second.job;
}

std::vector<Job> HpcSimulator::list_jobs() const {
	std::lock_guard lock(mutex_);
	std::vector<const JobState *> states;
	for (const auto &[id, state] : jobs_) {
		states.push_back(&state);
	}
	std::sort(states.begin(), states.end(), [](auto *a, auto *b) {
		return a->seq < b->seq;
	});
	std::vector<Job> out;
	for (const auto *s : states) {
		out.push_back(s->job);
	}
	return out;
}

std::vector<Job> HpcSimulator::jobs_for_incident(const IncidentId &incident) const {
	auto all = list_jobs();
	std::erase_if(all, [&](const Job &j) {
		return j.incident_id != incident;
	});
	return all;
}

std::optional<SimDuration> HpcSimulator::next_due_locked() const {
	std::optional<SimDuration> due;
	for (const auto &[id, state] : jobs_) {
		if (state.job.status == JobStatus::Running && (!due || state.next_due < *due)) {
			due = state.next_due;
		}
	}
	return due;
}

bool HpcSimulator::fire_one_locked(SimDuration now) {
	JobState *earliest = nullptr;
	for (auto &[id, state] : jobs_) {
		if (state.job.status != JobStatus::Running || state.next_due > now) {
			continue;
		}
		if (!earliest || state.next_due < earliest->next_due ||
			(state.next_due == earliest->next_due && state.seq < earliest->seq)) {
			earliest = &state;
		}
	}
	if (!earliest) {
		return false;
	}
	fire_locked(*earliest, earliest->next_due);
	return true;
}

void HpcSimulator::process_due() {
	std::lock_guard lock(mutex_);
	while (fire_one_locked(clock_.now())) {
	}
}

void HpcSimulator::advance(SimDuration by) {
	if (clock_.mode() != SimClock::Mode::Manual) {
		fail(ErrorCode::PreconditionFailed, "advance() requires a manual clock");
	}
	std::lock_guard lock(mutex_);
	const auto target = clock_.now() + by;
	for (;;) {
		const auto due = next_due_locked();
		if (!due || *due > target) {
			break;
		}
		if (*due > clock_.now()) {
			clock_.advance(*due - clock_.now());
		}
		fire_one_locked(clock_.now());
	}
	clock_.advance(target - clock_.now());
}

DataId HpcSimulator::register_output_locked(const JobState &state, int index) {
	const auto &job = state.job;
	Json content {{"job_id", job.job_id}, {"index", index}, {"inputs", job.input_data}};
	const auto name = job.name + "-output-" + std::to_string(index);
	return data_.register_data(name, content.dump(), job.machine, "job " + job.job_id);
}

void HpcSimulator::notify_locked(const JobState &state, const QueueName &queue, Json payload) {
	if (!notifier_) {
		return;
	}
	try {
		notifier_(JobNotification {state.job, queue, std::move(payload), state.job.parent_message_id});
	} catch (const std::exception &e) {
		log().warn("job {}: notification to {} not delivered: {}", state.job.job_id, queue, e.what());
	}
}

void HpcSimulator::fire_locked(JobState &state, SimDuration now) {
	auto &job = state.job;
	if (state.will_fail) {
		finish_locked(state, JobStatus::Failed, now);
		return;
	}
	if (job.kind == JobKind::Batch) {
		job.outputs.push_back(register_output_locked(state, 0));
		finish_locked(state, JobStatus::Completed, now);
		return;
	}
	const int index = job.emitted++;
	const auto output = register_output_locked(state, index);
	job.outputs.push_back(output);
	notify_locked(state, job.notify_queue, Json {
		{"event", "output"},
		{"job_id", job.job_id},
		{"machine", job.machine},
		{"index", index},
		{"data_id", output},
		{"inputs", job.input_data},
	});
	if (job.emitted >= job.emit_count) {
		finish_locked(state, JobStatus::Completed, now);
		return;
	}
	state.next_due = now + scaled(job.emit_interval, machine(job.machine).speed_factor);
}

void HpcSimulator::finish_locked(JobState &state, JobStatus status, SimDuration now) {
	auto &job = state.job;
	job.status = status;
	job.finished_at = now;
	log().info("job {} {}", job.job_id, to_string(status));
	Json payload {
		{"event", "completion"},
		{"job_id", job.job_id},
		{"machine", job.machine},
		{"kind", to_string(job.kind)},
		{"status", to_string(status)},
		{"outputs", job.outputs},
		{"inputs", job.input_data},
	};
	payload["output_data_id"] = job.outputs.empty() ? Json() : Json(job.outputs.back());
	const auto queue = job.kind == JobKind::Persistent ? job.completion_queue.value_or(job.notify_queue) : job.notify_queue;
	notify_locked(state, queue, std::move(payload));
	start_queued_locked(job.machine);
}

void HpcSimulator::drive() {
	std::unique_lock lock(mutex_);
	while (!stopping_) {
		while (fire_one_locked(clock_.now())) {
		}
		const auto due = next_due_locked();
		const auto wait = due ? std::max(SimDuration(0), *due - clock_.now()) : SimDuration(std::chrono::milliseconds(200));
		// Woken early by submissions and stop(); the loop re-evaluates.
		wake_.wait_for(lock, wait);
	}
}

} // namespace surgeflow::simenv
