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
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "common/ids.hpp"
#include "common/json.hpp"
#include "common/time.hpp"
#include "simenv/clock.hpp"

namespace surgeflow::simenv {

struct DataItem {
	DataId data_id;
	std::string name;
	std::string location;
	std::filesystem::path path;
	std::uint64_t size_bytes = 0;
	std::string origin;
	Timestamp registered_timestamp {};
};

Json to_json(const DataItem &item);

// Catalog of data items and their blobs. Blobs live under
// <root>/blobs/<location>/<data_id>; the catalog is an append-only JSON-lines
// file replayed on construction.
class DataManager {
public:
	// locations: every machine name; the local store is always known.
	DataManager(std::filesystem::path root, std::set<std::string> locations, double transfer_rate,
		const SimClock &clock);

	DataManager(const DataManager &) = delete;
	DataManager &operator=(const DataManager &) = delete;

	DataId register_data(std::string name, std::string_view content, std::string location, std::string origin);

	// Returns the simulated transfer time. With a wall clock the call also
	// sleeps for it.
	SimDuration move_data(const DataId &id, const std::string &destination);

	DataItem item(const DataId &id) const;
	std::optional<DataItem> find(const DataId &id) const;
	// Most recently registered item with this name.
	std::optional<DataItem> find_by_name(const std::string &name) const;
	std::vector<DataItem> items() const;
	std::string read(const DataId &id) const;

	bool is_location(const std::string &name) const;
	SimDuration transfer_time(std::uint64_t bytes) const;

private:
	void replay();
	void append_catalog(const Json &record);
	std::filesystem::path blob_path(const std::string &location, const DataId &id) const;

	std::filesystem::path root_;
	std::set<std::string> locations_;
	double transfer_rate_;
	const SimClock &clock_;

	mutable std::mutex mutex_;
	std::map<DataId, DataItem> items_;
	std::vector<DataId> order_;
	std::uint64_t next_id_ = 1;
	std::ofstream catalog_;
};

} // namespace surgeflow::simenv
