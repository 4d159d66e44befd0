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
#include "statestore/state_store.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "statestore/sqlite.hpp"

namespace surgeflow::statestore {

namespace {

constexpr const char *kSchema = R"sql(
CREATE TABLE IF NOT EXISTS incidents (
	incident_id TEXT PRIMARY KEY,
	workflow_kind TEXT NOT NULL,
	label TEXT NOT NULL,
	status TEXT NOT NULL,
	created_ts INTEGER NOT NULL,
	status_changed_ts INTEGER NOT NULL,
	outstanding INTEGER NOT NULL DEFAULT 0 CHECK (outstanding >= 0),
	cleared_ts INTEGER
);
CREATE TABLE IF NOT EXISTS messages (
	message_id TEXT PRIMARY KEY,
	incident_id TEXT NOT NULL,
	queue TEXT NOT NULL,
	parent_message_id TEXT,
	status TEXT NOT NULL,
	sent_ts INTEGER NOT NULL,
	delivered_ts INTEGER,
	processing_ts INTEGER,
	completed_ts INTEGER,
	consumer_id TEXT,
	delivery_count INTEGER NOT NULL DEFAULT 0,
	cleanup INTEGER NOT NULL DEFAULT 0,
	error TEXT NOT NULL DEFAULT ''
);
CREATE INDEX IF NOT EXISTS messages_by_incident ON messages (incident_id, sent_ts);
CREATE TABLE IF NOT EXISTS stage_data (
	incident_id TEXT NOT NULL,
	queue TEXT NOT NULL,
	sequence INTEGER NOT NULL,
	stored_ts INTEGER NOT NULL,
	payload TEXT NOT NULL,
	PRIMARY KEY (incident_id, queue, sequence)
);
CREATE TABLE IF NOT EXISTS stage_locks (
	incident_id TEXT NOT NULL,
	queue TEXT NOT NULL,
	holder TEXT NOT NULL,
	acquired_ts INTEGER NOT NULL,
	PRIMARY KEY (incident_id, queue)
);
)sql";

constexpr const char *kIncidentColumns =
	"incident_id, workflow_kind, label, status, created_ts, status_changed_ts, outstanding, cleared_ts";

constexpr const char *kMessageColumns =
	"message_id, incident_id, queue, parent_message_id, status, sent_ts, delivered_ts, processing_ts, "
	"completed_ts, consumer_id, delivery_count, cleanup, error";

IncidentRecord read_incident(const sql::Statement &s) {
	IncidentRecord r;
	r.incident_id = s.column_text(0);
	r.workflow_kind = s.column_text(1);
	r.label = s.column_text(2);
	r.status = incident_status_from_string(s.column_text(3));
	r.created_timestamp = from_micros(s.column_int(4));
	r.status_changed_timestamp = from_micros(s.column_int(5));
	r.outstanding_messages = s.column_int(6);
	if (auto ts = s.column_optional_int(7)) {
		r.cleared_timestamp = from_micros(*ts);
	}
	return r;
}

std::optional<Timestamp> opt_ts(const std::optional<std::int64_t> &v) {
	if (!v) {
		return std::nullopt;
	}
	return from_micros(*v);
}

MessageLogEntry read_message(const sql::Statement &s) {
	MessageLogEntry e;
	e.message_id = s.column_text(0);
	e.incident_id = s.column_text(1);
	e.queue = s.column_text(2);
	e.parent_message_id = s.column_optional_text(3);
	e.status = message_status_from_string(s.column_text(4));
	e.sent_timestamp = from_micros(s.column_int(5));
	e.delivered_timestamp = opt_ts(s.column_optional_int(6));
	e.processing_timestamp = opt_ts(s.column_optional_int(7));
	e.completed_timestamp = opt_ts(s.column_optional_int(8));
	e.consumer_id = s.column_optional_text(9);
	e.delivery_count = s.column_int(10);
	e.cleanup = s.column_int(11) != 0;
	e.error = s.column_text(12);
	return e;
}

PersistedStageRecord read_stage_record(const sql::Statement &s) {
	PersistedStageRecord r;
	r.incident_id = s.column_text(0);
	r.queue = s.column_text(1);
	r.sequence = s.column_int(2);
	r.stored_timestamp = from_micros(s.column_int(3));
	r.payload = Json::parse(s.column_text(4));
	return r;
}

std::vector<QueueStatistics> read_statistics(sql::Statement &s) {
	std::vector<QueueStatistics> out;
	while (s.step()) {
		QueueStatistics q;
		q.queue = s.column_text(0);
		q.count = s.column_int(1);
		q.mean_wait_ms = s.column_double(2) / 1000.0;
		q.max_wait_ms = s.column_double(3) / 1000.0;
		q.mean_processing_ms = s.column_double(4) / 1000.0;
		q.max_processing_ms = s.column_double(5) / 1000.0;
		out.push_back(std::move(q));
	}
	return out;
}

bool event_allowed(MessageStatus current, MessageStatus event) {
	switch (event) {
	case MessageStatus::Sent:
		return false;
	case MessageStatus::Delivered:
		return current == MessageStatus::Sent || current == MessageStatus::Delivered
			|| current == MessageStatus::Processing;
	case MessageStatus::Processing:
		return current == MessageStatus::Delivered;
	case MessageStatus::Completed:
	case MessageStatus::Error:
		return current == MessageStatus::Processing;
	case MessageStatus::Dropped:
		return current == MessageStatus::Sent || current == MessageStatus::Delivered;
	}
	return false;
}

} // namespace

StateStore::StateStore(const std::filesystem::path &db_path) {
	if (db_path != ":memory:" && db_path.has_parent_path()) {
		std::error_code ec;
		std::filesystem::create_directories(db_path.parent_path(), ec);
	}
	db_ = std::make_unique<sql::Database>(db_path.string());
	db_->exec("PRAGMA journal_mode=WAL");
	db_->exec("PRAGMA synchronous=NORMAL");
	db_->exec("PRAGMA foreign_keys=ON");
	db_->exec(kSchema);
}

StateStore::~StateStore() = default;

void StateStore::register_workflow_kind(const std::string &kind) {
	std::lock_guard lock(mutex_);
	workflow_kinds_.insert(kind);
}

bool StateStore::has_workflow_kind(const std::string &kind) const {
	std::lock_guard lock(mutex_);
	return workflow_kinds_.contains(kind);
}

IncidentId StateStore::create_incident(const std::string &workflow_kind, const std::string &label) {
	std::lock_guard lock(mutex_);
	if (!workflow_kinds_.contains(workflow_kind)) {
		fail(ErrorCode::InvalidArgument, "unknown workflow kind '" + workflow_kind + "'");
	}
	IncidentId id = random_id("inc");
	const auto ts = to_micros(now());
	db_->prepare(
		   "INSERT INTO incidents (incident_id, workflow_kind, label, status, created_ts, status_changed_ts) "
		   "VALUES (?1, ?2, ?3, 'PENDING', ?4, ?4)")
		.bind(1, id)
		.bind(2, workflow_kind)
		.bind(3, label)
		.bind(4, ts)
		.run();
	return id;
}

std::optional<IncidentRecord> StateStore::find_incident_locked(const IncidentId &id) const {
	static const std::string sql = std::string("SELECT ") + kIncidentColumns + " FROM incidents WHERE incident_id = ?1";
	auto s = db_->prepare(sql.c_str());
	s.bind(1, id);
	if (!s.step()) {
		return std::nullopt;
	}
	return read_incident(s);
}

void StateStore::require_incident_locked(const IncidentId &id) const {
	auto s = db_->prepare("SELECT 1 FROM incidents WHERE incident_id = ?1");
	s.bind(1, id);
	if (!s.step()) {
		fail(ErrorCode::NotFound, "unknown incident " + id);
	}
}

void StateStore::set_incident_status(const IncidentId &id, IncidentStatus status) {
	std::lock_guard lock(mutex_);
	sql::Transaction tx(*db_);
	auto current = find_incident_locked(id);
	if (!current) {
		fail(ErrorCode::NotFound, "unknown incident " + id);
	}
	if (!is_legal_transition(current->status, status)) {
		fail(ErrorCode::Conflict,
			std::string("illegal incident transition ") + to_string(current->status) + " -> " + to_string(status));
	}
	db_->prepare("UPDATE incidents SET status = ?2, status_changed_ts = ?3 WHERE incident_id = ?1")
		.bind(1, id)
		.bind(2, std::string_view(to_string(status)))
		.bind(3, to_micros(now()))
		.run();
	tx.commit();
}

IncidentRecord StateStore::incident(const IncidentId &id) const {
	auto r = find_incident(id);
	if (!r) {
		fail(ErrorCode::NotFound, "unknown incident " + id);
	}
	return *r;
}

std::optional<IncidentRecord> StateStore::find_incident(const IncidentId &id) const {
	std::lock_guard lock(mutex_);
	return find_incident_locked(id);
}

std::vector<IncidentRecord> StateStore::incidents() const {
	std::lock_guard lock(mutex_);
	static const std::string sql = std::string("SELECT ") + kIncidentColumns + " FROM incidents ORDER BY created_ts, incident_id";
	auto s = db_->prepare(sql.c_str());
	std::vector<IncidentRecord> out;
	while (s.step()) {
		out.push_back(read_incident(s));
	}
	return out;
}

std::optional<MessageLogEntry> StateStore::message_locked(const MessageId &id) const {
	static const std::string sql = std::string("SELECT ") + kMessageColumns + " FROM messages WHERE message_id = ?1";
	auto s = db_->prepare(sql.c_str());
	s.bind(1, id);
	if (!s.step()) {
		return std::nullopt;
	}
	return read_message(s);
}

void StateStore::log_event_locked(
	const MessageId &id, MessageStatus event, Timestamp ts, const MessageEventContext &context) {
	if (event == MessageStatus::Sent) {
		if (context.incident_id.empty() || context.queue.empty()) {
			fail(ErrorCode::InvalidArgument, "SENT requires incident_id and queue");
		}
		require_incident_locked(context.incident_id);
		if (message_locked(id)) {
			fail(ErrorCode::Conflict, "message " + id + " already logged");
		}
		db_->prepare(
			   "INSERT INTO messages (message_id, incident_id, queue, parent_message_id, status, sent_ts, cleanup) "
			   "VALUES (?1, ?2, ?3, ?4, 'SENT', ?5, ?6)")
			.bind(1, id)
			.bind(2, context.incident_id)
			.bind(3, context.queue)
			.bind(4, context.parent_message_id)
			.bind(5, to_micros(ts))
			.bind(6, std::int64_t {context.cleanup ? 1 : 0})
			.run();
		return;
	}

	auto entry = message_locked(id);
	if (!entry) {
		fail(ErrorCode::NotFound, "unknown message " + id);
	}
	if (!event_allowed(entry->status, event)) {
		fail(ErrorCode::Conflict,
			std::string("out-of-order message event ") + to_string(entry->status) + " -> " + to_string(event)
				+ " for " + id);
	}

	// Clamp so that sent <= delivered <= processing <= completed always holds.
	Timestamp floor = entry->sent_timestamp;
	for (const auto &t : {entry->delivered_timestamp, entry->processing_timestamp}) {
		if (t && *t > floor) {
			floor = *t;
		}
	}
	const std::int64_t at = to_micros(std::max(ts, floor));
	const std::string_view status = to_string(event);

	switch (event) {
	case MessageStatus::Delivered:
		db_->prepare(
			   "UPDATE messages SET status = ?2, delivered_ts = ?3, processing_ts = NULL, consumer_id = ?4, "
			   "delivery_count = delivery_count + 1 WHERE message_id = ?1")
			.bind(1, id)
			.bind(2, status)
			.bind(3, at)
			.bind(4, context.consumer_id)
			.run();
		break;
	case MessageStatus::Processing:
		db_->prepare("UPDATE messages SET status = ?2, processing_ts = ?3 WHERE message_id = ?1")
			.bind(1, id)
			.bind(2, status)
			.bind(3, at)
			.run();
		break;
	default:
		db_->prepare("UPDATE messages SET status = ?2, completed_ts = ?3, error = ?4 WHERE message_id = ?1")
			.bind(1, id)
			.bind(2, status)
			.bind(3, at)
			.bind(4, context.error)
			.run();
		break;
	}
}

void StateStore::log_message_event(
	const MessageId &id, MessageStatus event, Timestamp ts, const MessageEventContext &context) {
	std::lock_guard lock(mutex_);
	sql::Transaction tx(*db_);
	log_event_locked(id, event, ts, context);
	tx.commit();
}

void StateStore::record_sent(const MessageId &id, Timestamp ts, const MessageEventContext &context) {
	std::lock_guard lock(mutex_);
	sql::Transaction tx(*db_);
	log_event_locked(id, MessageStatus::Sent, ts, context);
	if (!context.cleanup) {
		adjust_outstanding_locked(context.incident_id, +1);
	}
	tx.commit();
}

void StateStore::record_resolved(const MessageId &id, MessageStatus terminal, Timestamp ts, const std::string &error) {
	if (!is_terminal(terminal)) {
		fail(ErrorCode::InvalidArgument, std::string("not a terminal status: ") + to_string(terminal));
	}
	std::lock_guard lock(mutex_);
	sql::Transaction tx(*db_);
	auto entry = message_locked(id);
	if (!entry) {
		fail(ErrorCode::NotFound, "unknown message " + id);
	}
	MessageEventContext context;
	context.error = error;
	log_event_locked(id, terminal, ts, context);
	if (!entry->cleanup) {
		adjust_outstanding_locked(entry->incident_id, -1);
	}
	tx.commit();
}

std::optional<MessageLogEntry> StateStore::message(const MessageId &id) const {
	std::lock_guard lock(mutex_);
	return message_locked(id);
}

std::vector<MessageLogEntry> StateStore::messages_for_incident(const IncidentId &id) const {
	std::lock_guard lock(mutex_);
	static const std::string sql = std::string("SELECT ") + kMessageColumns
		+ " FROM messages WHERE incident_id = ?1 ORDER BY sent_ts, rowid";
	auto s = db_->prepare(sql.c_str());
	s.bind(1, id);
	std::vector<MessageLogEntry> out;
	while (s.step()) {
		out.push_back(read_message(s));
	}
	return out;
}

std::vector<MessageLogEntry> StateStore::unresolved_messages() const {
	std::lock_guard lock(mutex_);
	static const std::string sql = std::string("SELECT ") + kMessageColumns
		+ " FROM messages WHERE status IN ('SENT', 'DELIVERED', 'PROCESSING') ORDER BY sent_ts, rowid";
	auto s = db_->prepare(sql.c_str());
	std::vector<MessageLogEntry> out;
	while (s.step()) {
		out.push_back(read_message(s));
	}
	return out;
}

std::int64_t StateStore::persist_stage_data(const IncidentId &id, const QueueName &queue, const Json &payload) {
	std::lock_guard lock(mutex_);
	sql::Transaction tx(*db_);
	require_incident_locked(id);
	std::int64_t next = 1;
	{
		auto s = db_->prepare("SELECT COALESCE(MAX(sequence), 0) + 1 FROM stage_data WHERE incident_id = ?1 AND queue = ?2");
		s.bind(1, id).bind(2, queue);
		if (s.step()) {
			next = s.column_int(0);
		}
	}
	db_->prepare("INSERT INTO stage_data (incident_id, queue, sequence, stored_ts, payload) VALUES (?1, ?2, ?3, ?4, ?5)")
		.bind(1, id)
		.bind(2, queue)
		.bind(3, next)
		.bind(4, to_micros(now()))
		.bind(5, payload.dump())
		.run();
	tx.commit();
	return next;
}

std::vector<PersistedStageRecord> StateStore::retrieve_stage_data(const IncidentId &id, const QueueName &queue) const {
	std::lock_guard lock(mutex_);
	require_incident_locked(id);
	auto s = db_->prepare(
		"SELECT incident_id, queue, sequence, stored_ts, payload FROM stage_data "
		"WHERE incident_id = ?1 AND queue = ?2 ORDER BY sequence");
	s.bind(1, id).bind(2, queue);
	std::vector<PersistedStageRecord> out;
	while (s.step()) {
		out.push_back(read_stage_record(s));
	}
	return out;
}

std::vector<PersistedStageRecord> StateStore::stage_data_for_incident(const IncidentId &id) const {
	std::lock_guard lock(mutex_);
	auto s = db_->prepare(
		"SELECT incident_id, queue, sequence, stored_ts, payload FROM stage_data "
		"WHERE incident_id = ?1 ORDER BY queue, sequence");
	s.bind(1, id);
	std::vector<PersistedStageRecord> out;
	while (s.step()) {
		out.push_back(read_stage_record(s));
	}
	return out;
}

bool StateStore::try_acquire_lock(const IncidentId &id, const QueueName &queue, const ConsumerId &holder) {
	std::lock_guard lock(mutex_);
	db_->prepare("INSERT OR IGNORE INTO stage_locks (incident_id, queue, holder, acquired_ts) VALUES (?1, ?2, ?3, ?4)")
		.bind(1, id)
		.bind(2, queue)
		.bind(3, holder)
		.bind(4, to_micros(now()))
		.run();
	return db_->changes() == 1;
}

void StateStore::release_lock(const IncidentId &id, const QueueName &queue) {
	std::lock_guard lock(mutex_);
	db_->prepare("DELETE FROM stage_locks WHERE incident_id = ?1 AND queue = ?2").bind(1, id).bind(2, queue).run();
}

std::vector<StageLock> StateStore::locks_for_incident(const IncidentId &id) const {
	std::lock_guard lock(mutex_);
	auto s = db_->prepare("SELECT incident_id, queue, holder, acquired_ts FROM stage_locks WHERE incident_id = ?1 ORDER BY queue");
	s.bind(1, id);
	std::vector<StageLock> out;
	while (s.step()) {
		out.push_back(StageLock {s.column_text(0), s.column_text(1), s.column_text(2), from_micros(s.column_int(3))});
	}
	return out;
}

std::size_t StateStore::release_all_locks() {
	std::lock_guard lock(mutex_);
	db_->prepare("DELETE FROM stage_locks").run();
	return static_cast<std::size_t>(db_->changes());
}

std::int64_t StateStore::adjust_outstanding_locked(const IncidentId &id, int delta) {
	if (delta != 1 && delta != -1) {
		fail(ErrorCode::InvalidArgument, "outstanding delta must be +1 or -1");
	}
	auto s = db_->prepare("SELECT outstanding FROM incidents WHERE incident_id = ?1");
	s.bind(1, id);
	if (!s.step()) {
		fail(ErrorCode::NotFound, "unknown incident " + id);
	}
	const std::int64_t next = s.column_int(0) + delta;
	if (next < 0) {
		fail(ErrorCode::PreconditionFailed, "outstanding counter of " + id + " would drop below zero");
	}
	db_->prepare("UPDATE incidents SET outstanding = ?2 WHERE incident_id = ?1").bind(1, id).bind(2, next).run();
	return next;
}

std::int64_t StateStore::adjust_outstanding(const IncidentId &id, int delta) {
	std::lock_guard lock(mutex_);
	sql::Transaction tx(*db_);
	const auto next = adjust_outstanding_locked(id, delta);
	tx.commit();
	return next;
}

std::int64_t StateStore::outstanding(const IncidentId &id) const {
	std::lock_guard lock(mutex_);
	auto s = db_->prepare("SELECT outstanding FROM incidents WHERE incident_id = ?1");
	s.bind(1, id);
	if (!s.step()) {
		fail(ErrorCode::NotFound, "unknown incident " + id);
	}
	return s.column_int(0);
}

Timestamp StateStore::clear_incident_state(const IncidentId &id) {
	std::lock_guard lock(mutex_);
	sql::Transaction tx(*db_);
	auto record = find_incident_locked(id);
	if (!record) {
		fail(ErrorCode::NotFound, "unknown incident " + id);
	}
	if (!is_terminal(record->status)) {
		fail(ErrorCode::PreconditionFailed,
			"incident " + id + " is " + to_string(record->status) + "; only terminal incidents can be cleared");
	}
	db_->prepare("DELETE FROM stage_data WHERE incident_id = ?1").bind(1, id).run();
	db_->prepare("DELETE FROM stage_locks WHERE incident_id = ?1").bind(1, id).run();
	Timestamp cleared = record->cleared_timestamp.value_or(now());
	if (!record->cleared_timestamp) {
		db_->prepare("UPDATE incidents SET cleared_ts = ?2 WHERE incident_id = ?1").bind(1, id).bind(2, to_micros(cleared)).run();
	}
	tx.commit();
	return cleared;
}

std::vector<QueueStatistics> StateStore::stage_statistics_for_kind(const std::string &workflow_kind) const {
	std::lock_guard lock(mutex_);
	auto s = db_->prepare(
		"SELECT m.queue, COUNT(*), AVG(m.delivered_ts - m.sent_ts), MAX(m.delivered_ts - m.sent_ts), "
		"AVG(m.completed_ts - m.delivered_ts), MAX(m.completed_ts - m.delivered_ts) "
		"FROM messages m JOIN incidents i ON i.incident_id = m.incident_id "
		"WHERE m.status = 'COMPLETED' AND m.cleanup = 0 AND i.workflow_kind = ?1 "
		"GROUP BY m.queue ORDER BY m.queue");
	s.bind(1, workflow_kind);
	return read_statistics(s);
}

std::vector<QueueStatistics> StateStore::stage_statistics_for_incident(const IncidentId &id) const {
	std::lock_guard lock(mutex_);
	auto s = db_->prepare(
		"SELECT queue, COUNT(*), AVG(delivered_ts - sent_ts), MAX(delivered_ts - sent_ts), "
		"AVG(completed_ts - delivered_ts), MAX(completed_ts - delivered_ts) "
		"FROM messages WHERE status = 'COMPLETED' AND cleanup = 0 AND incident_id = ?1 "
		"GROUP BY queue ORDER BY queue");
	s.bind(1, id);
	return read_statistics(s);
}

} // namespace surgeflow::statestore
