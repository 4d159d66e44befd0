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
#include "broker/queue_log.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include "common/error.hpp"
#include "common/log.hpp"

namespace surgeflow::broker {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kHeaderBytes = 8;
constexpr std::uint32_t kMaxBodyBytes = 64u * 1024u * 1024u;

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
	for (int i = 0; i < 4; ++i) {
		out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
	}
}

std::uint32_t get_u32(const std::uint8_t *p) {
	return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16
		| std::uint32_t(p[3]) << 24;
}

std::uint32_t crc_of(const std::uint8_t *data, std::size_t n) {
	return static_cast<std::uint32_t>(::crc32(0L, data, static_cast<uInt>(n)));
}

[[noreturn]] void fail_errno(const std::string &what, const fs::path &path) {
	fail(ErrorCode::Io, what + " " + path.string() + ": " + std::strerror(errno));
}

void write_all(int fd, const std::uint8_t *data, std::size_t n, const fs::path &path) {
	while (n > 0) {
		ssize_t w = ::write(fd, data, n);
		if (w < 0) {
			if (errno == EINTR) {
				continue;
			}
			fail_errno("write", path);
		}
		data += w;
		n -= static_cast<std::size_t>(w);
	}
}

RecordKind kind_from_string(const std::string &s) {
	if (s == "ENQUEUE") {
		return RecordKind::Enqueue;
	}
	if (s == "DELIVER") {
		return RecordKind::Deliver;
	}
	if (s == "ACK") {
		return RecordKind::Ack;
	}
	if (s == "REQUEUE") {
		return RecordKind::Requeue;
	}
	fail(ErrorCode::Corrupt, "unknown record kind " + s);
}

LogRecord decode_body(const std::uint8_t *data, std::size_t n) {
	auto j = Json::parse(data, data + n);
	LogRecord r;
	r.kind = kind_from_string(j.at("kind").get<std::string>());
	r.message_id = j.at("message_id").get<std::string>();
	r.timestamp = from_micros(j.at("timestamp").get<std::int64_t>());
	if (r.kind == RecordKind::Enqueue) {
		r.message = message_from_json(j.at("message"));
	}
	if (r.kind == RecordKind::Deliver) {
		r.delivery_count = j.at("delivery_count").get<std::uint32_t>();
	}
	return r;
}

} // namespace

const char *to_string(RecordKind kind) {
	switch (kind) {
	case RecordKind::Enqueue:
		return "ENQUEUE";
	case RecordKind::Deliver:
		return "DELIVER";
	case RecordKind::Ack:
		return "ACK";
	case RecordKind::Requeue:
		return "REQUEUE";
	}
	return "?";
}

std::vector<std::uint8_t> QueueLog::encode(const LogRecord &record) {
	Json body {
		{"kind", to_string(record.kind)},
		{"message_id", record.message_id},
		{"timestamp", to_micros(record.timestamp)},
	};
	if (record.kind == RecordKind::Enqueue) {
		if (!record.message) {
			fail(ErrorCode::Internal, "ENQUEUE record without message");
		}
		body["message"] = to_json(*record.message);
	}
	if (record.kind == RecordKind::Deliver) {
		body["delivery_count"] = record.delivery_count;
	}
	const std::string text = body.dump();
	std::vector<std::uint8_t> out;
	out.reserve(kHeaderBytes + text.size());
	put_u32(out, static_cast<std::uint32_t>(text.size()));
	put_u32(out, crc_of(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
	out.insert(out.end(), text.begin(), text.end());
	return out;
}

QueueLog::QueueLog(fs::path path, bool sync_writes, std::size_t existing_records) :
	path_(std::move(path)),
	sync_writes_(sync_writes),
	records_(existing_records) {
	std::error_code ec;
	fs::create_directories(path_.parent_path(), ec);
	open_for_append();
}

QueueLog::~QueueLog() {
	if (fd_ >= 0) {
		::close(fd_);
	}
}

void QueueLog::open_for_append() {
	fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
	if (fd_ < 0) {
		fail_errno("open", path_);
	}
}

void QueueLog::append(const LogRecord &record) {
	const auto bytes = encode(record);
	write_all(fd_, bytes.data(), bytes.size(), path_);
	if (sync_writes_ && ::fdatasync(fd_) != 0) {
		fail_errno("fdatasync", path_);
	}
	++records_;
}

void QueueLog::rewrite(const std::vector<LogRecord> &records) {
	fs::path tmp = path_;
	tmp += ".compact";
	int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
	if (fd < 0) {
		fail_errno("open", tmp);
	}
	try {
		for (const auto &r : records) {
			const auto bytes = encode(r);
			write_all(fd, bytes.data(), bytes.size(), tmp);
		}
		if (::fsync(fd) != 0) {
			fail_errno("fsync", tmp);
		}
	} catch (...) {
		::close(fd);
		throw;
	}
	::close(fd);
	if (::rename(tmp.c_str(), path_.c_str()) != 0) {
		fail_errno("rename", tmp);
	}
	::close(fd_);
	fd_ = -1;
	open_for_append();
	records_ = records.size();
}

ReplayResult QueueLog::replay(
	const fs::path &path, const std::function<void(const LogRecord &)> &visit) {
	ReplayResult result;
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		return result;
	}
	std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
	in.close();

	std::size_t offset = 0;
	while (offset < data.size()) {
		const std::size_t remaining = data.size() - offset;
		if (remaining < kHeaderBytes) {
			break;
		}
		const std::uint32_t len = get_u32(&data[offset]);
		const std::uint32_t crc = get_u32(&data[offset + 4]);
		if (len > kMaxBodyBytes || remaining - kHeaderBytes < len) {
			break;
		}
		const std::uint8_t *body = &data[offset + kHeaderBytes];
		if (crc_of(body, len) != crc) {
			break;
		}
		LogRecord record;
		try {
			record = decode_body(body, len);
		} catch (const std::exception &e) {
			log().warn("queue log {}: undecodable record at offset {}: {}", path.string(), offset, e.what());
			break;
		}
		visit(record);
		++result.records;
		offset += kHeaderBytes + len;
	}

	if (offset < data.size()) {
		result.truncated_bytes = data.size() - offset;
		result.truncated_records = 1;
		log().warn(
			"queue log {}: dropping {} trailing bytes after {} valid records",
			path.string(),
			result.truncated_bytes,
			result.records);
		std::error_code ec;
		fs::resize_file(path, offset, ec);
		if (ec) {
			fail(ErrorCode::Io, "truncate " + path.string() + ": " + ec.message());
		}
	}
	return result;
}

} // namespace surgeflow::broker
