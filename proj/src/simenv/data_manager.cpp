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
#include "simenv/data_manager.hpp"

#include <cmath>
#include <thread>

#include "common/error.hpp"
#include "common/log.hpp"
#include "simenv/machines.hpp"

namespace surgeflow::simenv {

namespace fs = std::filesystem;

namespace {

constexpr const char *kPrefix = "data-";

std::uint64_t id_number(const DataId &id) {
	if (id.rfind(kPrefix, 0) != 0) {
		return 0;
	}
	try {
		return std::stoull(id.substr(std::char_traits<char>::length(kPrefix)));
	} catch (const std::exception &) {
		return 0;
	}
}

} // namespace

Json to_json(const DataItem &item) {
	return Json {
		{"data_id", item.data_id},
		{"name", item.name},
		{"location", item.location},
		{"path", item.path.string()},
		{"size_bytes", item.size_bytes},
		{"origin", item.origin},
		{"registered_timestamp", to_micros(item.registered_timestamp)},
	};
}

DataManager::DataManager(fs::path root, std::set<std::string> locations, double transfer_rate, const SimClock &clock) :
	root_(std::move(root)),
	locations_(std::move(locations)),
	transfer_rate_(transfer_rate),
	clock_(clock) {
	if (!(transfer_rate_ > 0)) {
		fail(ErrorCode::InvalidArgument, "transfer_rate must be positive");
	}
	locations_.insert(kLocalStore);
	fs::create_directories(root_ / "blobs");
	replay();
	catalog_.open(root_ / "blobs" / "catalog.jsonl", std::ios::app);
	if (!catalog_) {
		fail(ErrorCode::Io, "cannot open data catalog under " + root_.string());
	}
}

fs::path DataManager::blob_path(const std::string &location, const DataId &id) const {
	return root_ / "blobs" / location / id;
}

void DataManager::replay() {
	std::ifstream in(root_ / "blobs" / "catalog.jsonl");
	std::string line;
	std::size_t lineno = 0;
	while (std::getline(in, line)) {
		++lineno;
		if (line.empty()) {
			continue;
		}
		try {
			const auto rec = Json::parse(line);
			const auto op = rec.at("op").get<std::string>();
			const auto id = rec.at("data_id").get<DataId>();
			if (op == "register") {
				DataItem item;
				item.data_id = id;
				item.name = rec.at("name").get<std::string>();
				item.location = rec.at("location").get<std::string>();
				item.path = rec.at("path").get<std::string>();
				item.size_bytes = rec.at("size_bytes").get<std::uint64_t>();
				item.origin = rec.at("origin").get<std::string>();
				item.registered_timestamp = from_micros(rec.at("registered_timestamp").get<std::int64_t>());
				if (!items_.contains(id)) {
					order_.push_back(id);
				}
				items_[id] = item;
			} else if (op == "move") {
				auto &item = items_.at(id);
				item.location = rec.at("location").get<std::string>();
				item.path = rec.at("path").get<std::string>();
			}
			next_id_ = std::max(next_id_, id_number(id) + 1);
		} catch (const std::exception &e) {
			log().warn("data catalog line {} ignored: {}", lineno, e.what());
		}
	}
}

void DataManager::append_catalog(const Json &record) {
	catalog_ << record.dump() << '\n';
	catalog_.flush();
	if (!catalog_) {
		fail(ErrorCode::Io, "cannot append to the data catalog");
	}
}

bool DataManager::is_location(const std::string &name) const {
	return locations_.contains(name);
}

SimDuration DataManager::transfer_time(std::uint64_t bytes) const {
	return SimDuration(static_cast<SimDuration::rep>(std::llround(static_cast<double>(bytes) / transfer_rate_ * 1e6)));
}

DataId DataManager::register_data(std::string name, std::string_view content, std::string location, std::string origin) {
	if (!is_location(location)) {
		fail(ErrorCode::NotFound, "unknown location '" + location + "'");
	}
	std::lock_guard lock(mutex_);
	DataItem item;
	item.data_id = kPrefix + std::to_string(next_id_++);
	item.name = std::move(name);
	item.location = std::move(location);
	item.path = blob_path(item.location, item.data_id);
	item.size_bytes = content.size();
	item.origin = std::move(origin);
	item.registered_timestamp = now();

	fs::create_directories(item.path.parent_path());
	{
		std::ofstream out(item.path, std::ios::binary | std::ios::trunc);
		out.write(content.data(), static_cast<std::streamsize>(content.size()));
		if (!out) {
			fail(ErrorCode::Io, "cannot write blob " + item.path.string());
		}
	}
	auto rec = to_json(item);
	rec["op"] = "register";
	append_catalog(rec);
	order_.push_back(item.data_id);
	const auto id = item.data_id;
	items_.emplace(id, std::move(item));
	return id;
}

SimDuration DataManager::move_data(const DataId &id, const std::string &destination) {
	if (!is_location(destination)) {
		fail(ErrorCode::NotFound, "unknown location '" + destination + "'");
	}
	SimDuration delay {0};
	{
		std::lock_guard lock(mutex_);
		auto it = items_.find(id);
		if (it == items_.end()) {
			fail(ErrorCode::NotFound, "unknown data item " + id);
		}
		auto &item = it->second;
		if (item.location == destination) {
			return delay;
		}
		const auto target = blob_path(destination, id);
		fs::create_directories(target.parent_path());
		fs::copy_file(item.path, target, fs::copy_options::overwrite_existing);
		append_catalog(Json {{"op", "move"}, {"data_id", id}, {"location", destination}, {"path", target.string()}});
		std::error_code ec;
		fs::remove(item.path, ec);
		item.location = destination;
		item.path = target;
		delay = transfer_time(item.size_bytes);
	}
	if (clock_.mode() == SimClock::Mode::Wall && delay.count() > 0) {
		std::this_thread::sleep_for(delay);
	}
	return delay;
}

std::optional<DataItem> DataManager::find(const DataId &id) const {
	std::lock_guard lock(mutex_);
	auto it = items_.find(id);
	if (it == items_.end()) {
		return std::nullopt;
	}
	return it->second;
}

DataItem DataManager::item(const DataId &id) const {
	auto item = find(id);
	if (!item) {
		fail(ErrorCode::NotFound, "unknown data item " + id);
	}
	return *item;
}

std::optional<DataItem> DataManager::find_by_name(const std::string &name) const {
	std::lock_guard lock(mutex_);
	for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
		const auto &item = items_.at(*it);
		if (item.name == name) {
			return item;
		}
	}
	return std::nullopt;
}

std::vector<DataItem> DataManager::items() const {
	std::lock_guard lock(mutex_);
	std::vector<DataItem> out;
	out.reserve(order_.size());
	for (const auto &id : order_) {
		out.push_back(items_.at(id));
	}
	return out;
}

std::string DataManager::read(const DataId &id) const {
	std::lock_guard lock(mutex_);
	auto it = items_.find(id);
	if (it == items_.end()) {
		fail(ErrorCode::NotFound, "unknown data item " + id);
	}
	std::ifstream in(it->second.path, std::ios::binary);
	if (!in) {
		fail(ErrorCode::Io, "cannot read blob " + it->second.path.string());
	}
	return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace surgeflow::simenv
