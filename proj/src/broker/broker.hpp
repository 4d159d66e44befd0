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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "broker/message.hpp"
#include "broker/queue_log.hpp"

namespace surgeflow::broker {

enum class RequeuePosition {
	Tail,
	Head,
};

struct BrokerConfig {
	std::filesystem::path data_dir = "data";
	std::size_t max_payload_bytes = 64 * 1024;
	std::chrono::milliseconds requeue_delay {100};
	RequeuePosition requeue_position = RequeuePosition::Tail;
	// fdatasync after every record. Off by default: records reach the OS before
	// publish/ack return, which survives a process crash but not power loss.
	bool sync_writes = false;
	// A queue log is compacted once it holds this many records and at least
	// four times as many records as live messages.
	std::size_t compaction_min_records = 4096;
};

struct RecoveryReport {
	std::size_t restored = 0;
	std::size_t pending = 0;
	std::size_t truncated_records = 0;
	std::size_t truncated_bytes = 0;
};

struct QueueStats {
	QueueName name;
	std::size_t pending = 0;
	std::size_t in_flight = 0;
	std::size_t log_records = 0;
};

// Durable named FIFO queues with single-consumer delivery.
//
// Every mutation is appended to the queue's log before the call returns.
// Fetches are logged too (DELIVER), so recover() can tell which messages were
// in flight when the process died and put them back at the head of their queue.
// All operations are serialized on one mutex, which makes them linearizable.
class Broker {
public:
	explicit Broker(BrokerConfig config);
	~Broker();

	Broker(const Broker &) = delete;
	Broker &operator=(const Broker &) = delete;

	// Idempotent. Loads the queue's log if one exists and has not been loaded.
	void declare_queue(std::string_view name);

	// Fills message_id (when empty) and enqueue_timestamp; resets delivery_count.
	MessageId publish(Message message);

	// Oldest available message across the subscriptions, scanning queues
	// round-robin per consumer. A consumer holds at most one delivery.
	std::optional<Delivery> fetch(std::string_view consumer_id, std::span<const QueueName> subscriptions);

	void ack(const DeliveryTag &tag);

	// Returns the message to its queue; it becomes fetchable after requeue_delay.
	void requeue(const DeliveryTag &tag);

	// Loads every queue log under the data directory and restores in-flight
	// messages to the head of their queue. Must not run while deliveries are
	// outstanding.
	RecoveryReport recover();

	bool has_queue(std::string_view name) const;
	std::vector<QueueName> queues() const;
	std::vector<QueueStats> stats() const;
	std::size_t pending_count(std::string_view queue) const;
	std::size_t in_flight_count() const;
	// Every message currently held (pending or in flight), in no particular order.
	std::vector<Message> held_messages() const;

	const BrokerConfig &config() const noexcept {
		return config_;
	}

private:
	struct Pending {
		Message message;
		std::chrono::steady_clock::time_point available_at;
	};

	struct QueueState {
		std::list<Pending> pending;
		std::size_t in_flight = 0;
		std::unique_ptr<QueueLog> log;
	};

	struct InFlight {
		QueueName queue;
		Message message;
		ConsumerId consumer_id;
	};

	std::filesystem::path queue_dir() const;
	std::filesystem::path log_path(std::string_view queue) const;
	QueueState &queue_locked(std::string_view name);
	RecoveryReport load_queue_locked(const QueueName &name);
	void maybe_compact_locked(const QueueName &name, QueueState &q);
	void compact_locked(const QueueName &name, QueueState &q);
	InFlight take_in_flight_locked(const DeliveryTag &tag);

	BrokerConfig config_;
	mutable std::mutex mutex_;
	std::map<QueueName, QueueState, std::less<>> queues_;
	std::map<std::uint64_t, InFlight> in_flight_;
	std::unordered_map<ConsumerId, std::uint64_t> consumer_delivery_;
	std::unordered_map<ConsumerId, std::size_t> consumer_cursor_;
	std::uint64_t next_tag_ = 1;
};

} // namespace surgeflow::broker
