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
#include "statestore/sqlite.hpp"

#include "common/error.hpp"

namespace surgeflow::statestore::sql {

namespace {

[[noreturn]] void fail_sql(sqlite3 *db, const std::string &what) {
	fail(ErrorCode::Io, what + ": " + (db ? sqlite3_errmsg(db) : "out of memory"));
}

} // namespace

Statement::~Statement() {
	sqlite3_reset(stmt_);
	sqlite3_clear_bindings(stmt_);
}

Statement &Statement::bind(int index, std::string_view value) {
	if (sqlite3_bind_text(stmt_, index, value.data(), static_cast<int>(value.size()), SQLITE_TRANSIENT) != SQLITE_OK) {
		fail_sql(db_, "bind");
	}
	return *this;
}

Statement &Statement::bind(int index, std::int64_t value) {
	if (sqlite3_bind_int64(stmt_, index, value) != SQLITE_OK) {
		fail_sql(db_, "bind");
	}
	return *this;
}

Statement &Statement::bind(int index, const std::optional<std::string> &value) {
	return value ? bind(index, std::string_view(*value)) : bind_null(index);
}

Statement &Statement::bind(int index, const std::optional<std::int64_t> &value) {
	return value ? bind(index, *value) : bind_null(index);
}

Statement &Statement::bind_null(int index) {
	if (sqlite3_bind_null(stmt_, index) != SQLITE_OK) {
		fail_sql(db_, "bind");
	}
	return *this;
}

bool Statement::step() {
	const int rc = sqlite3_step(stmt_);
	if (rc == SQLITE_ROW) {
		return true;
	}
	if (rc == SQLITE_DONE) {
		return false;
	}
	fail_sql(db_, "step");
}

void Statement::run() {
	while (step()) {
	}
}

std::int64_t Statement::column_int(int index) const {
	return sqlite3_column_int64(stmt_, index);
}

std::optional<std::int64_t> Statement::column_optional_int(int index) const {
	if (sqlite3_column_type(stmt_, index) == SQLITE_NULL) {
		return std::nullopt;
	}
	return sqlite3_column_int64(stmt_, index);
}

std::string Statement::column_text(int index) const {
	const auto *text = sqlite3_column_text(stmt_, index);
	const int n = sqlite3_column_bytes(stmt_, index);
	return text ? std::string(reinterpret_cast<const char *>(text), static_cast<std::size_t>(n)) : std::string();
}

std::optional<std::string> Statement::column_optional_text(int index) const {
	if (sqlite3_column_type(stmt_, index) == SQLITE_NULL) {
		return std::nullopt;
	}
	return column_text(index);
}

double Statement::column_double(int index) const {
	return sqlite3_column_double(stmt_, index);
}

Database::Database(const std::string &path) {
	const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX;
	if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
		std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
		sqlite3_close(db_);
		db_ = nullptr;
		fail(ErrorCode::Io, "cannot open state store " + path + ": " + msg);
	}
	sqlite3_busy_timeout(db_, 5000);
}

Database::~Database() {
	for (auto &[sql, stmt] : cache_) {
		sqlite3_finalize(stmt);
	}
	sqlite3_close_v2(db_);
}

void Database::exec(const char *sql) {
	char *err = nullptr;
	if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
		std::string msg = err ? err : "unknown";
		sqlite3_free(err);
		fail(ErrorCode::Io, std::string("sql: ") + msg);
	}
}

Statement Database::prepare(const char *sql) {
	// SQL text is always a string literal, so its address keys the cache.
	auto it = cache_.find(sql);
	if (it == cache_.end()) {
		sqlite3_stmt *stmt = nullptr;
		if (sqlite3_prepare_v3(db_, sql, -1, SQLITE_PREPARE_PERSISTENT, &stmt, nullptr) != SQLITE_OK) {
			fail_sql(db_, std::string("prepare '") + sql + "'");
		}
		it = cache_.emplace(sql, stmt).first;
	}
	return Statement(db_, it->second);
}

std::int64_t Database::changes() const {
	return sqlite3_changes(db_);
}

Transaction::Transaction(Database &db) :
	db_(db) {
	db_.exec("BEGIN IMMEDIATE");
}

Transaction::~Transaction() {
	if (!done_) {
		try {
			db_.exec("ROLLBACK");
		} catch (...) {
		}
	}
}

void Transaction::commit() {
	db_.exec("COMMIT");
	done_ = true;
}

} // namespace surgeflow::statestore::sql
