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
#include "edi/sources.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>
#include <httplib.h>

#include "common/log.hpp"

namespace surgeflow::edi {

std::string to_lower(std::string s) {
	std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
		return static_cast<char>(std::tolower(c));
	});
	return s;
}

std::string signature_of(const Headers &headers, const std::set<std::string> &names) {
	std::uint64_t h = 14695981039346656037ull;
	const auto mix = [&h](std::string_view s) {
		for (unsigned char c : s) {
			h ^= c;
			h *= 1099511628211ull;
		}
	};
	std::set<std::string> wanted;
	for (const auto &n : names) {
		wanted.insert(to_lower(n));
	}
	for (const auto &name : wanted) {
		auto it = headers.find(name);
		if (it == headers.end()) {
			continue;
		}
		mix(name);
		mix(":");
		mix(it->second);
		mix("\n");
	}
	return fmt::format("{:016x}", h);
}

void MockSourceRegistry::set(const std::string &url, Headers headers) {
	Headers lowered;
	for (auto &[k, v] : headers) {
		lowered[to_lower(k)] = v;
	}
	std::lock_guard lock(mutex_);
	sources_[url] = std::move(lowered);
}

void MockSourceRegistry::set_unreachable(const std::string &url) {
	std::lock_guard lock(mutex_);
	sources_[url] = std::nullopt;
}

std::optional<SourceMetadata> MockSourceRegistry::probe(const std::string &url) {
	std::lock_guard lock(mutex_);
	++probes_[url];
	auto it = sources_.find(url);
	if (it == sources_.end() || !it->second) {
		return std::nullopt;
	}
	return SourceMetadata {200, *it->second};
}

std::size_t MockSourceRegistry::probe_count(const std::string &url) const {
	std::lock_guard lock(mutex_);
	auto it = probes_.find(url);
	return it == probes_.end() ? 0 : it->second;
}

std::optional<SourceMetadata> HttpProbe::probe(const std::string &url) {
	constexpr std::string_view scheme = "http://";
	if (url.rfind(scheme, 0) != 0) {
		log().warn("unsupported source url {}", url);
		return std::nullopt;
	}
	const auto slash = url.find('/', scheme.size());
	const auto origin = url.substr(0, slash);
	const auto path = slash == std::string::npos ? std::string("/") : url.substr(slash);
	httplib::Client client(origin);
	client.set_connection_timeout(2, 0);
	client.set_read_timeout(5, 0);
	auto res = client.Head(path);
	if (!res) {
		log().warn("source {} unreachable: {}", url, httplib::to_string(res.error()));
		return std::nullopt;
	}
	if (res->status >= 400) {
		log().warn("source {} answered {}", url, res->status);
		return std::nullopt;
	}
	SourceMetadata meta;
	meta.status = res->status;
	for (const auto &[k, v] : res->headers) {
		meta.headers[to_lower(k)] = v;
	}
	return meta;
}

SourceRouter::SourceRouter(std::shared_ptr<MockSourceRegistry> mocks) :
	mocks_(std::move(mocks)) {
}

std::optional<SourceMetadata> SourceRouter::probe(const std::string &url) {
	if (url.rfind("mock://", 0) == 0) {
		return mocks_->probe(url);
	}
	return http_.probe(url);
}

} // namespace surgeflow::edi
