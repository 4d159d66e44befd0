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

#include <string>
#include <string_view>

namespace surgeflow {

using IncidentId = std::string;
using MessageId = std::string;
using QueueName = std::string;
using ConsumerId = std::string;
using DataId = std::string;
using JobId = std::string;

// Returns a prefixed 128-bit random identifier, e.g. "msg-3f0c...". Unique
// across processes and restarts with overwhelming probability.
std::string random_id(std::string_view prefix);

// Queue names double as file names in the broker's data directory.
bool is_valid_queue_name(std::string_view name);

} // namespace surgeflow
