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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "broker/message.hpp"

namespace surgeflow::broker {

enum class RecordKind : std::uint8_t {
	Enqueue,
	Deliver,
	Ack,
	Requeue,
};

const char *to_string(RecordKind kind);

struct LogRecord {
	RecordKind kind = RecordKind::Enqueue;
	MessageId message_id;
	Timestamp timestamp {};
	// Enqueue only.
	std::optional<Message> message;
	// Deliver only: the message's delivery count after this delivery.
	std::uint32_t delivery_count = 0;
};

struct ReplayResult {
	std::size_t records = 0;
	std::size_t truncated_records = 0;
	std::size_t truncated_bytes = 0;
};

// Append-only record file for one queue.
//
// On-disk framing, repeated until end of file:
//
//   u32 little-endian  body length
//   u32 little-endian  CRC-32 of body
//   body               JSON document {kind, message_id, timestamp[, message][, delivery_count]}
//
// A record whose header or body is short, or whose CRC does not match, ends the
// valid prefix of the file; replay() truncates the file there.
class QueueLog {
public:
	// existing_records is the count reported by a prior replay() of the same file.
	QueueLog(std::filesystem::path path, bool sync_writes, std::size_t existing_records = 0);
	~QueueLog();

	QueueLog(const QueueLog &) = delete;
	QueueLog &operator=(const QueueLog &) = delete;

	void append(const LogRecord &record);

	// Atomically replaces the file contents with the given records.
	void rewrite(const std::vector<LogRecord> &records);

	std::size_t record_count() const noexcept {
		return records_;
	}

	const std::filesystem::path &path() const noexcept {
		return path_;
	}

	static ReplayResult replay(
		const std::filesystem::path &path, const std::function<void(const LogRecord &)> &visit);

	static std::vector<std::uint8_t> encode(const LogRecord &record);

private:
	void open_for_append();

	std::filesystem::path path_;
	bool sync_writes_;
	int fd_ = -1;
	std::size_t records_ = 0;
};

} // namespace surgeflow::broker
