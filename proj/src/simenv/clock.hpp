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

#include <atomic>
#include <chrono>

#include "common/error.hpp"

namespace surgeflow::simenv {

using SimDuration = std::chrono::microseconds;

// Simulation time. In wall mode it follows the steady clock from
// construction; in manual mode it only moves when advance() is called.
class SimClock {
public:
	enum class Mode {
		Wall,
		Manual,
	};

	explicit SimClock(Mode mode = Mode::Wall) :
		mode_(mode),
		origin_(std::chrono::steady_clock::now()) {
	}

	Mode mode() const noexcept {
		return mode_;
	}

	SimDuration now() const {
		if (mode_ == Mode::Manual) {
			return SimDuration(manual_.load());
		}
		return std::chrono::duration_cast<SimDuration>(std::chrono::steady_clock::now() - origin_);
	}

	void advance(SimDuration by) {
		if (mode_ != Mode::Manual) {
			fail(ErrorCode::PreconditionFailed, "advance() requires a manual clock");
		}
		if (by.count() < 0) {
			fail(ErrorCode::InvalidArgument, "cannot move the clock backwards");
		}
		manual_ += by.count();
	}

private:
	Mode mode_;
	std::chrono::steady_clock::time_point origin_;
	std::atomic<SimDuration::rep> manual_ {0};
};

} // namespace surgeflow::simenv
