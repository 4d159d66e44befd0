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
#include "broker/message.hpp"

#include "common/error.hpp"

namespace surgeflow::broker {

Json to_json(const Message &m) {
	Json j {
		{"message_id", m.message_id},
		{"queue", m.queue},
		{"incident_id", m.incident_id},
		{"parent_message_id", nullptr},
		{"payload", m.payload},
		{"enqueue_timestamp", to_micros(m.enqueue_timestamp)},
		{"delivery_count", m.delivery_count},
	};
	if (m.parent_message_id) {
		j["parent_message_id"] = *m.parent_message_id;
	}
	return j;
}

Message message_from_json(const Json &j) {
	try {
		Message m;
		m.message_id = j.at("message_id").get<std::string>();
		m.queue = j.at("queue").get<std::string>();
		m.incident_id = j.at("incident_id").get<std::string>();
		if (const auto &parent = j.at("parent_message_id"); !parent.is_null()) {
			m.parent_message_id = parent.get<std::string>();
		}
		m.payload = j.at("payload");
		m.enqueue_timestamp = from_micros(j.at("enqueue_timestamp").get<std::int64_t>());
		m.delivery_count = j.at("delivery_count").get<std::uint32_t>();
		return m;
	} catch (const Json::exception &e) {
		fail(ErrorCode::Corrupt, std::string("malformed message document: ") + e.what());
	}
}

} // namespace surgeflow::broker
