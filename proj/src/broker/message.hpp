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
#include <optional>
#include <string>

#include "common/ids.hpp"
#include "common/json.hpp"
#include "common/time.hpp"

namespace surgeflow::broker {

// The unit of work. The payload carries handles to data, never the data itself.
struct Message {
	MessageId message_id;
	QueueName queue;
	IncidentId incident_id;
	std::optional<MessageId> parent_message_id;
	Json payload = Json::object();
	Timestamp enqueue_timestamp {};
	std::uint32_t delivery_count = 0;
};

Json to_json(const Message &m);
Message message_from_json(const Json &j);

// One in-flight delivery. Resolved exactly once by ack() or requeue().
struct DeliveryTag {
	std::uint64_t tag = 0;
	ConsumerId consumer_id;

	friend bool operator==(const DeliveryTag &, const DeliveryTag &) = default;
};

struct Delivery {
	DeliveryTag tag;
	Message message;
};

} // namespace surgeflow::broker
