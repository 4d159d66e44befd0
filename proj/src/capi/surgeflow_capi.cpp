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
#include "surgeflow/surgeflow.h"

#include <atomic>
#include <cstring>
#include <thread>

#include <httplib.h>

#include "common/error.hpp"
#include "common/log.hpp"
#include "service/demo_driver.hpp"
#include "service/engine.hpp"
#include "service/task_graph.hpp"

using namespace surgeflow;

struct sf_engine {
	std::unique_ptr<service::Engine> engine;
	std::atomic<bool> stop_requested {false};
};

namespace {

thread_local std::string last_error;

sf_status status_of(ErrorCode code) {
	switch (code) {
	case ErrorCode::InvalidArgument:
		return SF_INVALID_ARGUMENT;
	case ErrorCode::NotFound:
		return SF_NOT_FOUND;
	case ErrorCode::Conflict:
		return SF_CONFLICT;
	case ErrorCode::PreconditionFailed:
		return SF_PRECONDITION_FAILED;
	case ErrorCode::PayloadTooLarge:
		return SF_PAYLOAD_TOO_LARGE;
	case ErrorCode::Io:
		return SF_IO;
	case ErrorCode::Corrupt:
		return SF_CORRUPT;
	case ErrorCode::Internal:
		break;
	}
	return SF_INTERNAL;
}

template <typename F>
sf_status guarded(F &&fn) {
	last_error.clear();
	try {
		fn();
		return SF_OK;
	} catch (const Error &e) {
		last_error = e.what();
		return status_of(e.code());
	} catch (const Json::exception &e) {
		last_error = std::string("malformed JSON: ") + e.what();
		return SF_INVALID_ARGUMENT;
	} catch (const std::bad_alloc &) {
		last_error = "out of memory";
		return SF_INTERNAL;
	} catch (const std::exception &e) {
		last_error = e.what();
		return SF_INTERNAL;
	} catch (...) {
		last_error = "unknown error";
		return SF_INTERNAL;
	}
}

void require(const void *p, const char *name) {
	if (p == nullptr) {
		fail(ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
	}
}

service::Engine &engine_of(sf_engine *e) {
	require(e, "engine");
	return *e->engine;
}

char *copy_out(const std::string &s) {
	auto *out = static_cast<char *>(std::malloc(s.size() + 1));
	if (out == nullptr) {
		throw std::bad_alloc();
	}
	std::memcpy(out, s.data(), s.size());
	out[s.size()] = '\0';
	return out;
}

void emit(char **out, const Json &doc) {
	*out = copy_out(doc.dump());
}

Json parse_optional(const char *json) {
	if (json == nullptr || *json == '\0') {
		return Json::object();
	}
	auto doc = Json::parse(json);
	if (!doc.is_object()) {
		fail(ErrorCode::InvalidArgument, "expected a JSON object");
	}
	return doc;
}

} // namespace

extern "C" {

const char *sf_version(void) {
	return "0.1.0";
}

const char *sf_status_name(sf_status status) {
	switch (status) {
	case SF_OK:
		return "ok";
	case SF_INVALID_ARGUMENT:
		return to_string(ErrorCode::InvalidArgument);
	case SF_NOT_FOUND:
		return to_string(ErrorCode::NotFound);
	case SF_CONFLICT:
		return to_string(ErrorCode::Conflict);
	case SF_PRECONDITION_FAILED:
		return to_string(ErrorCode::PreconditionFailed);
	case SF_PAYLOAD_TOO_LARGE:
		return to_string(ErrorCode::PayloadTooLarge);
	case SF_IO:
		return to_string(ErrorCode::Io);
	case SF_CORRUPT:
		return to_string(ErrorCode::Corrupt);
	case SF_INTERNAL:
		return to_string(ErrorCode::Internal);
	}
	return "unknown status";
}

const char *sf_last_error(void) {
	return last_error.c_str();
}

sf_status sf_set_log_level(const char *level) {
	return guarded([&] {
		require(level, "level");
		const auto parsed = spdlog::level::from_str(level);
		if (parsed == spdlog::level::off && std::strcmp(level, "off") != 0) {
			fail(ErrorCode::InvalidArgument, std::string("unknown log level '") + level + "'");
		}
		log().set_level(parsed);
	});
}

void sf_string_free(char *s) {
	std::free(s);
}

sf_status sf_engine_open(const char *config_json, sf_engine **out) {
	return guarded([&] {
		require(out, "out");
		*out = nullptr;
		const auto config = service::config_from_json(parse_optional(config_json), service::config_from_env());
		auto handle = std::make_unique<sf_engine>();
		handle->engine = std::make_unique<service::Engine>(config);
		*out = handle.release();
	});
}

sf_status sf_engine_start(sf_engine *engine) {
	return guarded([&] { engine_of(engine).start(); });
}

sf_status sf_engine_serve(sf_engine *engine, int *port_out) {
	return guarded([&] {
		const int port = engine_of(engine).serve();
		if (port_out != nullptr) {
			*port_out = port;
		}
	});
}

void sf_engine_request_stop(sf_engine *engine) {
	if (engine != nullptr) {
		engine->stop_requested.store(true);
	}
}

sf_status sf_engine_wait(sf_engine *engine, int timeout_ms, int *stop_requested) {
	return guarded([&] {
		require(engine, "engine");
		const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
		while (!engine->stop_requested.load() && (timeout_ms < 0 || std::chrono::steady_clock::now() < deadline)) {
			std::this_thread::sleep_for(std::chrono::milliseconds(20));
		}
		if (stop_requested != nullptr) {
			*stop_requested = engine->stop_requested.load() ? 1 : 0;
		}
	});
}

sf_status sf_engine_stop(sf_engine *engine, int drain) {
	return guarded([&] { engine_of(engine).stop(drain != 0); });
}

void sf_engine_close(sf_engine *engine) {
	if (engine == nullptr) {
		return;
	}
	guarded([&] { engine->engine->stop(true); });
	delete engine;
}

sf_status sf_incident_create(
	sf_engine *engine, const char *workflow_kind, const char *label, const char *initial_payload_json,
	char **incident_id_out) {
	return guarded([&] {
		require(workflow_kind, "workflow_kind");
		require(incident_id_out, "incident_id_out");
		const auto id = engine_of(engine).create_incident(workflow_kind, label ? label : "", parse_optional(initial_payload_json));
		*incident_id_out = copy_out(id);
	});
}

sf_status sf_incident_cancel(sf_engine *engine, const char *incident_id) {
	return guarded([&] {
		require(incident_id, "incident_id");
		auto &e = engine_of(engine);
		e.store().incident(incident_id);
		e.cancel_incident(incident_id);
	});
}

sf_status sf_incident_complete(sf_engine *engine, const char *incident_id) {
	return guarded([&] {
		require(incident_id, "incident_id");
		auto &e = engine_of(engine);
		e.store().incident(incident_id);
		e.complete_incident(incident_id);
	});
}

sf_status sf_incident_list(sf_engine *engine, char **json_out) {
	return guarded([&] {
		require(json_out, "json_out");
		emit(json_out, engine_of(engine).incidents_json());
	});
}

sf_status sf_incident_detail(sf_engine *engine, const char *incident_id, char **json_out) {
	return guarded([&] {
		require(incident_id, "incident_id");
		require(json_out, "json_out");
		emit(json_out, engine_of(engine).incident_detail(incident_id));
	});
}

sf_status sf_render_task_graph(const char *graph_json, char **text_out) {
	return guarded([&] {
		require(graph_json, "graph_json");
		require(text_out, "text_out");
		*text_out = copy_out(service::render_task_graph(Json::parse(graph_json)));
	});
}

sf_status sf_workflow_stats(sf_engine *engine, const char *workflow_kind, char **json_out) {
	return guarded([&] {
		require(workflow_kind, "workflow_kind");
		require(json_out, "json_out");
		emit(json_out, engine_of(engine).workflow_stats(workflow_kind));
	});
}

sf_status sf_demo_wildfire(sf_engine *engine, const char *options_json, char **result_json_out) {
	return guarded([&] {
		require(result_json_out, "result_json_out");
		const auto doc = parse_optional(options_json);
		service::WildfireDemoOptions options;
		options.hotspot_source = doc.value("hotspot_source", options.hotspot_source);
		options.forecast_kind = doc.value("forecast_kind", options.forecast_kind);
		options.label = doc.value("label", options.label);
		options.timeout = std::chrono::milliseconds(doc.value("timeout_ms", options.timeout.count()));
		const auto r = service::run_wildfire_demo(engine_of(engine), options);
		emit(result_json_out, Json {
			{"incident_id", r.incident_id},
			{"forecast_results", r.forecast_results},
			{"elapsed_ms", r.elapsed_ms},
			{"task_graph_text", r.task_graph_text},
			{"detail", r.detail},
		});
	});
}

sf_status sf_engine_request(
	sf_engine *engine, const char *method, const char *path, const char *body, size_t body_len,
	int *http_status_out, char **json_out) {
	return guarded([&] {
		require(method, "method");
		require(path, "path");
		require(http_status_out, "http_status_out");
		require(json_out, "json_out");
		service::ApiRequest request;
		request.method = method;
		request.path = path;
		if (body != nullptr) {
			request.body.assign(body, body_len);
		}
		const auto response = engine_of(engine).handle(request);
		*http_status_out = response.status;
		emit(json_out, response.body);
	});
}

sf_status sf_http_request(
	const char *base_url, const char *method, const char *path, const char *body, size_t body_len,
	int *http_status_out, char **json_out) {
	return guarded([&] {
		require(base_url, "base_url");
		require(method, "method");
		require(path, "path");
		require(http_status_out, "http_status_out");
		require(json_out, "json_out");
		httplib::Client client(base_url);
		if (!client.is_valid()) {
			fail(ErrorCode::InvalidArgument, std::string("invalid engine URL '") + base_url + "'");
		}
		client.set_connection_timeout(std::chrono::seconds(5));
		const std::string payload = body != nullptr ? std::string(body, body_len) : std::string();
		const std::string m = method;
		httplib::Result result;
		if (m == "GET") {
			result = client.Get(path);
		} else if (m == "POST") {
			result = client.Post(path, payload, "application/json");
		} else {
			fail(ErrorCode::InvalidArgument, "unsupported method " + m);
		}
		if (!result) {
			fail(ErrorCode::Io, std::string("cannot reach ") + base_url + ": " + httplib::to_string(result.error()));
		}
		*http_status_out = result->status;
		emit(json_out, result->body.empty() ? Json::object() : Json::parse(result->body));
	});
}

} // extern "C"
