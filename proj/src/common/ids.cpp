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

#include "common/ids.hpp"

#include <array>
#include <cstdint>
#include <mutex>
#include <random>

#include <fmt/format.h>

namespace surgeflow {

std::string random_id(std::string_view prefix) {
	static std::mutex mutex;
	static std::mt19937_64 engine {[] {
		std::random_device rd;
		std::seed_seq seq {rd(), rd(), rd(), rd(), rd(), rd()};
		return std::mt19937_64 {seq};
	}()};
	std::uint64_t hi;
	std::uint64_t lo;
	{
		std::lock_guard lock(mutex);
		hi = engine();
		lo = engine();
	}
	return fmt::format("{}-{:016x}{:016x}", prefix, hi, lo);
}

bool is_valid_queue_name(std::string_view name) {
	if (name.empty() || name == "." || name == "..") {
		return false;
	}
	for (unsigned char c : name) {
		if (c <= 0x20 || c == 0x7f || c == '/' || c == '\\') {
			return false;
		}
	}
	return true;
}

} // namespace surgeflow
