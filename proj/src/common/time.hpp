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

#include <chrono>
#include <cstdint>

namespace surgeflow {

// Wall-clock instants are carried at microsecond resolution everywhere they are
// persisted or compared across modules.
using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;

inline Timestamp now() {
	return std::chrono::time_point_cast<std::chrono::microseconds>(std::chrono::system_clock::now());
}

inline std::int64_t to_micros(Timestamp t) {
	return t.time_since_epoch().count();
}

inline Timestamp from_micros(std::int64_t us) {
	return Timestamp {std::chrono::microseconds {us}};
}

inline double millis_between(Timestamp from, Timestamp to) {
	return std::chrono::duration<double, std::milli>(to - from).count();
}

} // namespace surgeflow
