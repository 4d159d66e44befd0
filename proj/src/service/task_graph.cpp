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
#include "service/task_graph.hpp"

#include <functional>
#include <map>
#include <set>

#include <fmt/format.h>

namespace surgeflow::service {

Json build_task_graph(const std::vector<statestore::MessageLogEntry> &messages) {
	std::set<std::string> ids;
	for (const auto &m : messages) {
		ids.insert(m.message_id);
	}
	Json nodes = Json::array();
	Json edges = Json::array();
	for (const auto &m : messages) {
		auto node = statestore::to_json(m);
		if (m.delivered_timestamp && m.completed_timestamp) {
			node["duration_ms"] = millis_between(*m.delivered_timestamp, *m.completed_timestamp);
		} else {
			node["duration_ms"] = nullptr;
		}
		nodes.push_back(std::move(node));
		if (m.parent_message_id && ids.contains(*m.parent_message_id)) {
			edges.push_back(Json {{"from", *m.parent_message_id}, {"to", m.message_id}});
		}
	}
	return Json {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

std::string render_task_graph(const Json &graph) {
	std::map<std::string, const Json *> by_id;
	for (const auto &n : graph.at("nodes")) {
		by_id.emplace(n.at("message_id").get<std::string>(), &n);
	}
	std::map<std::string, std::vector<std::string>> children;
	std::set<std::string> has_parent;
	for (const auto &e : graph.at("edges")) {
		children[e.at("from").get<std::string>()].push_back(e.at("to").get<std::string>());
		has_parent.insert(e.at("to").get<std::string>());
	}
	std::string out;
	std::function<void(const std::string &, int)> visit = [&](const std::string &id, int depth) {
		const Json &n = *by_id.at(id);
		std::string duration = "-";
		if (!n.at("duration_ms").is_null()) {
			duration = fmt::format("{:.1f} ms", n.at("duration_ms").get<double>());
		}
		out += fmt::format("{:{}}{} [{}] {}{}\n", "", depth * 2, n.at("queue").get<std::string>(),
			n.at("status").get<std::string>(), duration, n.at("cleanup").get<bool>() ? " (cleanup)" : "");
		for (const auto &child : children[id]) {
			visit(child, depth + 1);
		}
	};
	for (const auto &n : graph.at("nodes")) {
		const auto id = n.at("message_id").get<std::string>();
		if (!has_parent.contains(id)) {
			visit(id, 0);
		}
	}
	return out;
}

} // namespace surgeflow::service
