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
#include "workers/worker_pool.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "common/log.hpp"

namespace surgeflow::workers {

WorkerPool::WorkerPool(wfcore::Runtime &runtime, WorkerPoolConfig config) :
	runtime_(runtime),
	config_(std::move(config)) {
	if (config_.worker_count < 1) {
		fail(ErrorCode::InvalidArgument, "worker_count must be at least 1");
	}
}

WorkerPool::~WorkerPool() {
	if (running()) {
		stop(true);
	}
}

void WorkerPool::start() {
	std::lock_guard lock(mutex_);
	if (running_) {
		fail(ErrorCode::Conflict, "worker pool already running");
	}
	reap_locked();
	stopping_ = false;
	abandon_ = false;
	running_ = true;
	target_ = config_.worker_count;
	for (int i = 0; i < target_; ++i) {
		spawn_locked();
	}
	log().info("worker pool started with {} workers", target_);
}

void WorkerPool::spawn_locked() {
	auto worker = std::make_unique<Worker>();
	worker->consumer_id = config_.name + "-" + std::to_string(spawned_++);
	Worker &ref = *worker;
	workers_.push_back(std::move(worker));
	ref.thread = std::thread([this, &ref] { run(ref); });
}

void WorkerPool::reap_locked() {
	for (auto it = workers_.begin(); it != workers_.end();) {
		if ((*it)->finished) {
			if ((*it)->thread.joinable()) {
				(*it)->thread.join();
			}
			it = workers_.erase(it);
		} else {
			++it;
		}
	}
}

void WorkerPool::scale(int worker_count) {
	if (worker_count < 1) {
		fail(ErrorCode::InvalidArgument, "worker_count must be at least 1");
	}
	std::lock_guard lock(mutex_);
	if (!running_) {
		fail(ErrorCode::PreconditionFailed, "worker pool is not running");
	}
	reap_locked();
	std::vector<Worker *> active;
	for (auto &w : workers_) {
		if (!w->retire) {
			active.push_back(w.get());
		}
	}
	const int current = static_cast<int>(active.size());
	for (int i = current; i < worker_count; ++i) {
		spawn_locked();
	}
	for (int i = worker_count; i < current; ++i) {
		active[static_cast<std::size_t>(i)]->retire = true;
	}
	target_ = worker_count;
	wake_.notify_all();
	log().info("worker pool scaled {} -> {}", current, worker_count);
}

void WorkerPool::stop(bool drain) {
	std::vector<std::unique_ptr<Worker>> joining;
	{
		std::lock_guard lock(mutex_);
		if (!running_) {
			return;
		}
		running_ = false;
		abandon_ = !drain;
		stopping_ = true;
		joining.swap(workers_);
		target_ = 0;
	}
	wake_.notify_all();
	for (auto &w : joining) {
		if (w->thread.joinable()) {
			w->thread.join();
		}
	}
	log().info("worker pool stopped ({})", drain ? "drained" : "abandoned in-flight work");
}

bool WorkerPool::running() const {
	std::lock_guard lock(mutex_);
	return running_;
}

int WorkerPool::live_workers() const {
	std::lock_guard lock(mutex_);
	return static_cast<int>(std::count_if(workers_.begin(), workers_.end(), [](const auto &w) {
		return !w->finished;
	}));
}

int WorkerPool::target_workers() const {
	std::lock_guard lock(mutex_);
	return target_;
}

PoolCounters WorkerPool::counters() const {
	std::lock_guard lock(counters_mutex_);
	return counters_;
}

void WorkerPool::idle_wait(Worker &worker) {
	std::unique_lock lock(mutex_);
	wake_.wait_for(lock, config_.idle_poll_interval, [&] {
		return stopping_.load() || worker.retire.load();
	});
}

void WorkerPool::run(Worker &worker) {
	while (!stopping_ && !worker.retire) {
		std::optional<broker::Delivery> delivery;
		try {
			const auto subscriptions = runtime_.subscriptions();
			delivery = runtime_.broker().fetch(worker.consumer_id, subscriptions);
		} catch (const std::exception &e) {
			log().error("{}: fetch failed: {}", worker.consumer_id, e.what());
		}
		if (!delivery) {
			idle_wait(worker);
			continue;
		}

		wfcore::Outcome outcome = wfcore::Outcome::Abandoned;
		bool errored = false;
		try {
			outcome = runtime_.execute_delivery(*delivery, &abandon_);
		} catch (const std::exception &e) {
			errored = true;
			log().error("{}: delivery of {} failed in the runtime: {}", worker.consumer_id, delivery->message.message_id, e.what());
			try {
				runtime_.broker().requeue(delivery->tag);
			} catch (const std::exception &) {
			}
		}

		std::lock_guard lock(counters_mutex_);
		++counters_.deliveries;
		if (errored) {
			++counters_.errors;
			continue;
		}
		switch (outcome) {
		case wfcore::Outcome::Completed:
		case wfcore::Outcome::CleanupDone:
			++counters_.completed;
			break;
		case wfcore::Outcome::Failed:
			++counters_.failed;
			break;
		case wfcore::Outcome::Dropped:
			++counters_.dropped;
			break;
		case wfcore::Outcome::Requeued:
		case wfcore::Outcome::CleanupDeferred:
			++counters_.requeued;
			break;
		default:
			break;
		}
	}
	worker.finished = true;
}

} // namespace surgeflow::workers
