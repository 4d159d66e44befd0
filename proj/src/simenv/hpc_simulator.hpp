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

#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "common/ids.hpp"
#include "common/json.hpp"
#include "simenv/clock.hpp"
#include "simenv/data_manager.hpp"
#include "simenv/machines.hpp"

namespace surgeflow::simenv {

enum class JobKind {
	Batch,
	Persistent,
};

enum class JobStatus {
	Queued,
	Running,
	Completed,
	Failed,
};

const char *to_string(JobKind kind);
const char *to_string(JobStatus status);
JobKind job_kind_from_string(const std::string &s);

struct JobSpec {
	std::string name;
	std::string machine;
	JobKind kind = JobKind::Batch;
	std::vector<DataId> inputs;
	// BATCH run time at speed factor 1.
	SimDuration nominal_runtime {std::chrono::milliseconds(50)};
	// PERSISTENT output cadence at speed factor 1.
	SimDuration emit_interval {std::chrono::milliseconds(30)};
	int emit_count = 1;
	IncidentId incident_id;
	QueueName notify_queue;
	// Where a PERSISTENT job's final completion goes; notify_queue when unset.
	std::optional<QueueName> completion_queue;
	std::optional<MessageId> parent_message_id;
};

struct Job {
	JobId job_id;
	std::string name;
	std::string machine;
	JobKind kind = JobKind::Batch;
	JobStatus status = JobStatus::Queued;
	IncidentId incident_id;
	QueueName notify_queue;
	std::optional<QueueName> completion_queue;
	std::optional<MessageId> parent_message_id;
	std::vector<DataId> input_data;
	SimDuration nominal_runtime {0};
	SimDuration emit_interval {0};
	int emit_count = 0;
	int emitted = 0;
	std::vector<DataId> outputs;
	SimDuration submitted_at {0};
	std::optional<SimDuration> started_at;
	std::optional<SimDuration> finished_at;
};

Json to_json(const Job &job);

struct JobNotification {
	Job job;
	QueueName queue;
	Json payload;
	std::optional<MessageId> parent_message_id;
};

// Publishes a job event into the workflow. Called with the simulator's lock
// held, so the notification is ordered with the status change it reports.
using JobNotifier = std::function<void(const JobNotification &)>;

// Mock HPC scheduler. Jobs queue per machine up to its capacity, run for
// their simulated duration, register their outputs with the data manager and
// notify the submitting workflow.
class HpcSimulator {
public:
	HpcSimulator(SimConfig config, DataManager &data, SimClock &clock, JobNotifier notifier);
	~HpcSimulator();

	HpcSimulator(const HpcSimulator &) = delete;
	HpcSimulator &operator=(const HpcSimulator &) = delete;

	// Wall clock only: starts the thread that fires due job events.
	void start();
	void stop();

	JobId submit_job(JobSpec spec);
	// The job's later outputs list this data item among their inputs.
	void push_data_to_job(const JobId &id, const DataId &data);
	Job job_status(const JobId &id) const;
	std::vector<Job> list_jobs() const;
	std::vector<Job> jobs_for_incident(const IncidentId &incident) const;

	// Manual clock only: moves time forward, firing every event on the way in
	// time order.
	void advance(SimDuration by);
	// Fires every event due at the current clock time.
	void process_due();

	const std::vector<Machine> &machines() const noexcept {
		return config_.machines;
	}
	const Machine &machine(const std::string &name) const;
	int running_on(const std::string &machine) const;

private:
	struct JobState {
		Job job;
		std::uint64_t seq = 0;
		bool will_fail = false;
		SimDuration next_due {0};
	};

	const Machine *find_machine(const std::string &name) const;
	void start_queued_locked(const std::string &machine);
	void begin_locked(JobState &state);
	std::optional<SimDuration> next_due_locked() const;
	bool fire_one_locked(SimDuration now);
	void fire_locked(JobState &state, SimDuration now);
	void finish_locked(JobState &state, JobStatus status, SimDuration now);
	void notify_locked(const JobState &state, const QueueName &queue, Json payload);
	DataId register_output_locked(const JobState &state, int index);
	void drive();

	SimConfig config_;
	DataManager &data_;
	SimClock &clock_;
	JobNotifier notifier_;

	mutable std::mutex mutex_;
	std::condition_variable wake_;
	std::map<JobId, JobState> jobs_;
	std::uint64_t next_id_ = 1;
	std::mt19937_64 rng_;
	std::thread driver_;
	bool stopping_ = false;
};

} // namespace surgeflow::simenv
