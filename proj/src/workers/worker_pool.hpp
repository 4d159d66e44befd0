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
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "wfcore/runtime.hpp"

namespace surgeflow::workers {

struct WorkerPoolConfig {
	int worker_count = 4;
	std::chrono::milliseconds idle_poll_interval {20};
	std::string name = "worker";
};

struct PoolCounters {
	std::size_t deliveries = 0;
	std::size_t completed = 0;
	std::size_t failed = 0;
	std::size_t dropped = 0;
	std::size_t requeued = 0;
	std::size_t errors = 0;
};

// Task farm: every worker subscribes to every registered queue and processes
// one delivery at a time. Workers are threads of this process.
class WorkerPool {
public:
	WorkerPool(wfcore::Runtime &runtime, WorkerPoolConfig config);
	~WorkerPool();

	WorkerPool(const WorkerPool &) = delete;
	WorkerPool &operator=(const WorkerPool &) = delete;

	void start();
	// Grows immediately; surplus workers retire after their current delivery.
	void scale(int worker_count);
	// drain=true finishes in-flight handlers normally. drain=false abandons
	// them: their deliveries stay unacknowledged until the broker recovers.
	void stop(bool drain);

	bool running() const;
	// Workers currently alive, including ones still finishing before retiring.
	int live_workers() const;
	int target_workers() const;
	PoolCounters counters() const;

private:
	struct Worker {
		std::string consumer_id;
		std::atomic<bool> retire {false};
		std::atomic<bool> finished {false};
		std::thread thread;
	};

	void spawn_locked();
	void reap_locked();
	void run(Worker &worker);
	void idle_wait(Worker &worker);

	wfcore::Runtime &runtime_;
	WorkerPoolConfig config_;

	mutable std::mutex mutex_;
	std::condition_variable wake_;
	std::vector<std::unique_ptr<Worker>> workers_;
	bool running_ = false;
	int target_ = 0;
	std::size_t spawned_ = 0;
	std::atomic<bool> stopping_ {false};
	std::atomic<bool> abandon_ {false};

	mutable std::mutex counters_mutex_;
	PoolCounters counters_;
};

} // namespace surgeflow::workers
