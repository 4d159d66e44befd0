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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <sqlite3.h>

namespace surgeflow::statestore::sql {

class Statement {
public:
	Statement(sqlite3 *db, sqlite3_stmt *stmt) :
		db_(db),
		stmt_(stmt) {
	}
	~Statement();

	Statement(const Statement &) = delete;
	Statement &operator=(const Statement &) = delete;

	Statement &bind(int index, std::string_view value);
	Statement &bind(int index, const std::string &value) {
		return bind(index, std::string_view(value));
	}
	Statement &bind(int index, std::int64_t value);
	Statement &bind(int index, const std::optional<std::string> &value);
	Statement &bind(int index, const std::optional<std::int64_t> &value);
	Statement &bind_null(int index);

	// True while a row is available.
	bool step();
	void run();

	std::int64_t column_int(int index) const;
	std::optional<std::int64_t> column_optional_int(int index) const;
	std::string column_text(int index) const;
	std::optional<std::string> column_optional_text(int index) const;
	double column_double(int index) const;

private:
	sqlite3 *db_;
	sqlite3_stmt *stmt_;
};

// Thin owner of one connection with a prepared-statement cache. Not
// thread-safe on its own; callers serialize access.
class Database {
public:
	explicit Database(const std::string &path);
	~Database();

	Database(const Database &) = delete;
	Database &operator=(const Database &) = delete;

	void exec(const char *sql);
	Statement prepare(const char *sql);
	std::int64_t changes() const;

private:
	sqlite3 *db_ = nullptr;
	std::map<const char *, sqlite3_stmt *> cache_;
};

// RAII "BEGIN IMMEDIATE ... COMMIT"; rolls back if not committed.
class Transaction {
public:
	explicit Transaction(Database &db);
	~Transaction();
	void commit();

private:
	Database &db_;
	bool done_ = false;
};

} // namespace surgeflow::statestore::sql
