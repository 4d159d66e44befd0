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
#include "simenv/machines.hpp"

#include <fstream>
#include <set>

#include "common/error.hpp"

namespace surgeflow::simenv {

SimConfig default_sim_config() {
	SimConfig c;
	c.machines = {
		{"archer2", 4, 1.0, 0.0},
		{"cirrus", 2, 0.5, 0.0},
	};
	return c;
}

void validate(const SimConfig &config) {
	std::set<std::string> names;
	for (std::size_t i = 0; i < config.machines.size(); ++i) {
		const auto &m = config.machines[i];
		const auto field = "machines[" + std::to_string(i) + "]";
		if (m.name.empty() || m.name == kLocalStore) {
			fail(ErrorCode::InvalidArgument, field + ".name must be non-empty and not '" + kLocalStore + "'");
		}
		if (!names.insert(m.name).second) {
			fail(ErrorCode::InvalidArgument, field + ".name '" + m.name + "' is duplicated");
		}
		if (m.max_concurrent_jobs < 1) {
			fail(ErrorCode::InvalidArgument, field + ".max_concurrent_jobs must be at least 1");
		}
		if (!(m.speed_factor > 0)) {
			fail(ErrorCode::InvalidArgument, field + ".speed_factor must be positive");
		}
		if (!(m.failure_probability >= 0 && m.failure_probability <= 1)) {
			fail(ErrorCode::InvalidArgument, field + ".failure_probability must be within [0, 1]");
		}
	}
	if (!(config.transfer_rate > 0)) {
		fail(ErrorCode::InvalidArgument, "transfer_rate must be positive");
	}
}

SimConfig sim_config_from_json(const Json &doc) {
	if (!doc.is_object()) {
		fail(ErrorCode::InvalidArgument, "machine configuration must be a JSON object");
	}
	SimConfig c = default_sim_config();
	try {
		if (doc.contains("machines")) {
			c.machines.clear();
			for (const auto &m : doc.at("machines")) {
				Machine machine;
				machine.name = m.at("name").get<std::string>();
				machine.max_concurrent_jobs = m.value("max_concurrent_jobs", 1);
				machine.speed_factor = m.value("speed_factor", 1.0);
				machine.failure_probability = m.value("failure_probability", 0.0);
				c.machines.push_back(std::move(machine));
			}
		}
		c.transfer_rate = doc.value("transfer_rate", c.transfer_rate);
		c.seed = doc.value("seed", c.seed);
	} catch (const Json::exception &e) {
		fail(ErrorCode::InvalidArgument, std::string("machine configuration: ") + e.what());
	}
	validate(c);
	return c;
}

SimConfig load_sim_config(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		fail(ErrorCode::NotFound, "cannot open machine configuration " + path.string());
	}
	Json doc;
	try {
		doc = Json::parse(in);
	} catch (const Json::exception &e) {
		fail(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
	}
	return sim_config_from_json(doc);
}

} // namespace surgeflow::simenv
