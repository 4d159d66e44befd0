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

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>

namespace surgeflow::edi {

// Lower-cased response header names to values.
using Headers = std::map<std::string, std::string>;

struct SourceMetadata {
	int status = 200;
	Headers headers;
};

// Fetches the metadata (headers only) of an external data source. Returns
// nothing when the source cannot be reached.
class SourceProbe {
public:
	virtual ~SourceProbe() = default;
	virtual std::optional<SourceMetadata> probe(const std::string &url) = 0;
};

// In-process sources addressed as mock://<name>, with scriptable headers.
class MockSourceRegistry : public SourceProbe {
public:
	void set(const std::string &url, Headers headers);
	// Subsequent probes of url fail as unreachable.
	void set_unreachable(const std::string &url);
	std::optional<SourceMetadata> probe(const std::string &url) override;
	std::size_t probe_count(const std::string &url) const;

private:
	mutable std::mutex mutex_;
	std::map<std::string, std::optional<Headers>> sources_;
	std::map<std::string, std::size_t> probes_;
};

// HEAD request over plain HTTP.
class HttpProbe : public SourceProbe {
public:
	std::optional<SourceMetadata> probe(const std::string &url) override;
};

// Dispatches mock:// URLs to the registry and http:// URLs to HttpProbe.
class SourceRouter : public SourceProbe {
public:
	explicit SourceRouter(std::shared_ptr<MockSourceRegistry> mocks);
	std::optional<SourceMetadata> probe(const std::string &url) override;
	MockSourceRegistry &mocks() {
		return *mocks_;
	}

private:
	std::shared_ptr<MockSourceRegistry> mocks_;
	HttpProbe http_;
};

std::string to_lower(std::string s);

// FNV-1a over the selected headers, rendered as 16 hex digits. Header names
// are matched case-insensitively; absent headers contribute nothing.
std::string signature_of(const Headers &headers, const std::set<std::string> &names);

} // namespace surgeflow::edi
