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

#include "common/error.hpp"

namespace surgeflow {

const char *to_string(ErrorCode code) {
	switch (code) {
	case ErrorCode::InvalidArgument:
		return "invalid argument";
	case ErrorCode::NotFound:
		return "not found";
	case ErrorCode::Conflict:
		return "conflict";
	case ErrorCode::PreconditionFailed:
		return "precondition failed";
	case ErrorCode::PayloadTooLarge:
		return "payload too large";
	case ErrorCode::Io:
		return "i/o error";
	case ErrorCode::Corrupt:
		return "corrupt data";
	case ErrorCode::Internal:
		return "internal error";
	}
	return "unknown error";
}

} // namespace surgeflow
