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
#include "broker/broker.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "common/log.hpp"

namespace surgeflow::broker {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kLogSuffix = ".log";

} // namespace

Broker::Broker(BrokerConfig config) :
	config_(std::move(config)) {
	std::error_code ec;
	fs::create_directories(queue_dir(), ec);
	if (ec) {
		fail(ErrorCode::Io, "cannot create " + queue_dir().string() + ": " + ec.message());
	}
}

Broker::~Broker() = default;

fs::path Broker::queue_dir() const {
	return config_.data_dir / "queues";
}

fs::path Broker::log_path(std::string_view queue) const {
	return queue_dir() / (std::string(queue) + std::string(kLogSuffix));
}

void Broker::declare_queue(std::string_view name) {
	if (!is_valid_queue_name(name)) {
		fail(ErrorCode::InvalidArgument, "invalid queue name '" + std::string(name) + "'");
	}
	std::lock_guard lock(mutex_);
	if (queues_.find(name) != queues_.end()) {
		return;
	}
	load_queue_locked(QueueName(name));
}

Broker::QueueState &Broker::queue_locked(std::string_view name) {
	auto it = queues_.find(name);
	if (it == queues_.end()) {
		fail(ErrorCode::NotFound, "queue '" + std::string(name) + "' is not declared");
	}
	return it->second;
}

RecoveryReport Broker::load_queue_locked(const QueueName &name) {
	RecoveryReport report;
	const fs::path path = log_path(name);

	// Replay into an id-indexed pending list; delivered-but-unresolved
	// messages are collected separately in delivery order.
	std::list<Message> pending;
	std::unordered_map<MessageId, std::list<Message>::iterator> pending_index;
	std::list<Message> delivered;
	std::unordered_map<MessageId, std::list<Message>::iterator> delivered_index;

	auto take = [](std::list<Message> &from,
					std::unordered_map<MessageId, std::list<Message>::iterator> &index,
					const MessageId &id) -> std::optional<Message> {
		auto it = index.find(id);
		if (it == index.end()) {
			return std::nullopt;
		}
		Message m = std::move(*it->second);
		from.erase(it->second);
		index.erase(it);
		return m;
	};

	auto replay = QueueLog::replay(path, [&](const LogRecord &r) {
		switch (r.kind) {
		case RecordKind::Enqueue: {
			pending.push_back(*r.message);
			pending_index[r.message_id] = std::prev(pending.end());
			break;
		}
		case RecordKind::Deliver: {
			if (auto m = take(pending, pending_index, r.message_id)) {
				m->delivery_count = r.delivery_count;
				delivered.push_back(std::move(*m));
				delivered_index[r.message_id] = std::prev(delivered.end());
			}
			break;
		}
		case RecordKind::Ack: {
			if (!take(delivered, delivered_index, r.message_id)) {
				take(pending, pending_index, r.message_id);
			}
			break;
		}
		case RecordKind::Requeue: {
			if (auto m = take(delivered, delivered_index, r.message_id)) {
				if (config_.requeue_position == RequeuePosition::Head) {
					pending.push_front(std::move(*m));
					pending_index[r.message_id] = pending.begin();
				} else {
					pending.push_back(std::move(*m));
					pending_index[r.message_id] = std::prev(pending.end());
				}
			}
			break;
		}
		}
	});

	report.truncated_records = replay.truncated_records;
	report.truncated_bytes = replay.truncated_bytes;
	report.restored = delivered.size();

	QueueState state;
	const auto ready = std::chrono::steady_clock::now();
	for (auto &m : delivered) {
		state.pending.push_back(Pending {std::move(m), ready});
	}
	for (auto &m : pending) {
		state.pending.push_back(Pending {std::move(m), ready});
	}
	report.pending = state.pending.size();
	state.log = std::make_unique<QueueLog>(path, config_.sync_writes, replay.records);

	auto [it, inserted] = queues_.emplace(name, std::move(state));
	// Restored deliveries are not in flight any more; rewrite the log so that
	// the file mirrors the in-memory queue.
	if (replay.records > 0) {
		compact_locked(name, it->second);
	}
	if (report.restored > 0 || report.truncated_records > 0) {
		log().info(
			"queue {}: {} pending, {} restored from in-flight, {} torn records dropped",
			name,
			report.pending,
			report.restored,
			report.truncated_records);
	}
	return report;
}

MessageId Broker::publish(Message message) {
	const std::size_t size = message.payload.dump().size();
	if (size > config_.max_payload_bytes) {
		fail(ErrorCode::PayloadTooLarge,
			"payload of " + std::to_string(size) + " bytes exceeds cap of "
				+ std::to_string(config_.max_payload_bytes));
	}
	if (message.message_id.empty()) {
		message.message_id = random_id("msg");
	}
	message.enqueue_timestamp = now();
	message.delivery_count = 0;

	std::lock_guard lock(mutex_);
	QueueState &q = queue_locked(message.queue);
	LogRecord record {RecordKind::Enqueue, message.message_id, message.enqueue_timestamp, message, 0};
	q.log->append(record);
	MessageId id = message.message_id;
	q.pending.push_back(Pending {std::move(message), std::chrono::steady_clock::now()});
	return id;
}

std::optional<Delivery> Broker::fetch(std::string_view consumer_id, std::span<const QueueName> subscriptions) {
	if (subscriptions.empty()) {
		return std::nullopt;
	}
	std::lock_guard lock(mutex_);
	ConsumerId consumer(consumer_id);
	if (consumer_delivery_.contains(consumer)) {
		fail(ErrorCode::PreconditionFailed, "consumer " + consumer + " already holds a delivery");
	}
	for (const auto &name : subscriptions) {
		queue_locked(name);
	}

	std::size_t &cursor = consumer_cursor_[consumer];
	const auto ready = std::chrono::steady_clock::now();
	for (std::size_t i = 0; i < subscriptions.size(); ++i) {
		const std::size_t idx = (cursor + i) % subscriptions.size();
		const QueueName &name = subscriptions[idx];
		QueueState &q = queues_.find(name)->second;
		auto it = std::find_if(q.pending.begin(), q.pending.end(), [&](const Pending &p) {
			return p.available_at <= ready;
		});
		if (it == q.pending.end()) {
			continue;
		}
		Message message = std::move(it->message);
		++message.delivery_count;
		LogRecord record {RecordKind::Deliver, message.message_id, now(), std::nullopt, message.delivery_count};
		q.log->append(record);
		q.pending.erase(it);
		++q.in_flight;

		const DeliveryTag tag {next_tag_++, consumer};
		in_flight_.emplace(tag.tag, InFlight {name, message, consumer});
		consumer_delivery_[consumer] = tag.tag;
		cursor = (idx + 1) % subscriptions.size();
		return Delivery {tag, std::move(message)};
	}
	return std::nullopt;
}

Broker::InFlight Broker::take_in_flight_locked(const DeliveryTag &tag) {
	auto it = in_flight_.find(tag.tag);
	if (it == in_flight_.end() || it->second.consumer_id != tag.consumer_id) {
		fail(ErrorCode::NotFound, "delivery tag " + std::to_string(tag.tag) + " is not in flight");
	}
	InFlight entry = std::move(it->second);
	in_flight_.erase(it);
	consumer_delivery_.erase(entry.consumer_id);
	return entry;
}

void Broker::ack(const DeliveryTag &tag) {
	std::lock_guard lock(mutex_);
	InFlight entry = take_in_flight_locked(tag);
	QueueState &q = queue_locked(entry.queue);
	--q.in_flight;
	q.log->append(LogRecord {RecordKind::Ack, entry.message.message_id, now(), std::nullopt, 0});
	maybe_compact_locked(entry.queue, q);
}

void Broker::requeue(const DeliveryTag &tag) {
	std::lock_guard lock(mutex_);
	InFlight entry = take_in_flight_locked(tag);
	QueueState &q = queue_locked(entry.queue);
	--q.in_flight;
	q.log->append(LogRecord {RecordKind::Requeue, entry.message.message_id, now(), std::nullopt, 0});
	Pending p {std::move(entry.message), std::chrono::steady_clock::now() + config_.requeue_delay};
	if (config_.requeue_position == RequeuePosition::Head) {
		q.pending.push_front(std::move(p));
	} else {
		q.pending.push_back(std::move(p));
	}
	maybe_compact_locked(entry.queue, q);
}

void Broker::maybe_compact_locked(const QueueName &name, QueueState &q) {
	const std::size_t records = q.log->record_count();
	const std::size_t live = q.pending.size() + q.in_flight;
	if (records >= config_.compaction_min_records && records >= 4 * live) {
		compact_locked(name, q);
	}
}

void Broker::compact_locked(const QueueName &name, QueueState &q) {
	std::vector<LogRecord> records;
	records.reserve(q.pending.size() + 2 * q.in_flight);
	const Timestamp ts = now();
	std::vector<const InFlight *> flying;
	for (const auto &[tag, entry] : in_flight_) {
		if (entry.queue == name) {
			flying.push_back(&entry);
		}
	}
	// In-flight messages sit ahead of the pending ones; each is re-enqueued
	// and immediately marked delivered so that a later replay restores them.
	for (const InFlight *entry : flying) {
		Message m = entry->message;
		const auto count = m.delivery_count;
		m.delivery_count = count > 0 ? count - 1 : 0;
		records.push_back(LogRecord {RecordKind::Enqueue, m.message_id, ts, m, 0});
		records.push_back(LogRecord {RecordKind::Deliver, m.message_id, ts, std::nullopt, count});
	}
	for (const auto &p : q.pending) {
		records.push_back(LogRecord {RecordKind::Enqueue, p.message.message_id, ts, p.message, 0});
	}
	q.log->rewrite(records);
}

RecoveryReport Broker::recover() {
	std::lock_guard lock(mutex_);
	if (!in_flight_.empty()) {
		fail(ErrorCode::PreconditionFailed, "recover() requires exclusive access; deliveries are in flight");
	}
	RecoveryReport total;
	std::vector<QueueName> names;
	for (const auto &entry : fs::directory_iterator(queue_dir())) {
		const auto &p = entry.path();
		if (entry.is_regular_file() && p.extension() == kLogSuffix) {
			names.push_back(p.stem().string());
		}
	}
	std::sort(names.begin(), names.end());
	for (const auto &name : names) {
		if (queues_.contains(name) || !is_valid_queue_name(name)) {
			continue;
		}
		const auto r = load_queue_locked(name);
		total.restored += r.restored;
		total.pending += r.pending;
		total.truncated_records += r.truncated_records;
		total.truncated_bytes += r.truncated_bytes;
	}
	return total;
}

bool Broker::has_queue(std::string_view name) const {
	std::lock_guard lock(mutex_);
	return queues_.find(name) != queues_.end();
}

std::vector<QueueName> Broker::queues() const {
	std::lock_guard lock(mutex_);
	std::vector<QueueName> out;
	for (const auto &[name, q] : queues_) {
		out.push_back(name);
	}
	return out;
}

std::vector<QueueStats> Broker::stats() const {
	std::lock_guard lock(mutex_);
	std::vector<QueueStats> out;
	for (const auto &[name, q] : queues_) {
		out.push_back(QueueStats {name, q.pending.size(), q.in_flight, q.log->record_count()});
	}
	return out;
}

std::size_t Broker::pending_count(std::string_view queue) const {
	std::lock_guard lock(mutex_);
	auto it = queues_.find(queue);
	return it == queues_.end() ? 0 : it->second.pending.size();
}

std::size_t Broker::in_flight_count() const {
	std::lock_guard lock(mutex_);
	return in_flight_.size();
}

std::vector<Message> Broker::held_messages() const {
	std::lock_guard lock(mutex_);
	std::vector<Message> out;
	for (const auto &[name, q] : queues_) {
		for (const auto &p : q.pending) {
			out.push_back(p.message);
		}
	}
	for (const auto &[tag, entry] : in_flight_) {
		out.push_back(entry.message);
	}
	return out;
}

} // namespace surgeflow::broker
