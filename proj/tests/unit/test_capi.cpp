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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include <json.hpp>

#include "surgeflow/surgeflow.h"

using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Dir {
	fs::path path = fs::temp_directory_path() / ("surgeflow-capi-" + std::to_string(std::random_device {}()));
	~Dir() {
		std::error_code ec;
		fs::remove_all(path, ec);
	}
};

std::string take(char *s) {
	std::string out = s ? s : "";
	sf_string_free(s);
	return out;
}

Json config_for(const Dir &dir) {
	return Json {{"data_dir", dir.path.string()}, {"workers", 2}, {"port", 0}, {"requeue_delay_ms", 5}};
}

} // namespace

TEST_CASE("status names and NULL handling") {
	sf_set_log_level("warn");
	CHECK(std::string(sf_status_name(SF_OK)) == "ok");
	CHECK(std::string(sf_status_name(SF_NOT_FOUND)) == "not found");
	CHECK(std::string(sf_version()) == "0.1.0");
	CHECK(sf_set_log_level("loud") == SF_INVALID_ARGUMENT);
	CHECK(sf_engine_start(nullptr) == SF_INVALID_ARGUMENT);
	CHECK(std::string(sf_last_error()).find("engine") != std::string::npos);
	CHECK(sf_engine_open(nullptr, nullptr) == SF_INVALID_ARGUMENT);
	sf_engine_close(nullptr);
	sf_string_free(nullptr);
	sf_engine_request_stop(nullptr);
}

TEST_CASE("bad configuration is rejected with the field name") {
	sf_engine *engine = reinterpret_cast<sf_engine *>(0x1);
	CHECK(sf_engine_open("{not json", &engine) == SF_INVALID_ARGUMENT);
	CHECK(engine == nullptr);
	CHECK(sf_engine_open(R"({"workers": 0})", &engine) == SF_INVALID_ARGUMENT);
	CHECK(std::string(sf_last_error()).find("workers") != std::string::npos);
	CHECK(engine == nullptr);
}

TEST_CASE("engine lifecycle through the C API") {
	Dir dir;
	sf_engine *engine = nullptr;
	REQUIRE(sf_engine_open(config_for(dir).dump().c_str(), &engine) == SF_OK);
	CHECK(std::string(sf_last_error()).empty());
	REQUIRE(sf_engine_start(engine) == SF_OK);
	CHECK(sf_engine_start(engine) == SF_CONFLICT);

	char *id_raw = nullptr;
	CHECK(sf_incident_create(engine, "flood", "x", nullptr, &id_raw) == SF_INVALID_ARGUMENT);
	REQUIRE(sf_incident_create(engine, "wildfire", "capi", R"({"forecast_kind":"EXPOSURE_SHED"})", &id_raw) == SF_OK);
	const auto id = take(id_raw);
	CHECK(id.rfind("inc-", 0) == 0);

	char *out = nullptr;
	REQUIRE(sf_incident_list(engine, &out) == SF_OK);
	const auto list = Json::parse(take(out));
	REQUIRE(list.size() == 1);
	CHECK(list.at(0).at("incident_id") == id);

	CHECK(sf_incident_detail(engine, "inc-none", &out) == SF_NOT_FOUND);
	REQUIRE(sf_incident_detail(engine, id.c_str(), &out) == SF_OK);
	const auto detail = Json::parse(take(out));
	REQUIRE(sf_render_task_graph(detail.at("task_graph").dump().c_str(), &out) == SF_OK);
	CHECK(take(out).find("wildfire_init") != std::string::npos);

	int status = 0;
	const std::string body = R"({"kind":"wildfire"})";
	REQUIRE(sf_engine_request(engine, "POST", "/api/incidents", body.data(), body.size(), &status, &out) == SF_OK);
	CHECK(status == 201);
	take(out);
	REQUIRE(sf_engine_request(engine, "GET", "/api/incidents/nope", nullptr, 0, &status, &out) == SF_OK);
	CHECK(status == 404);
	take(out);

	int port = 0;
	REQUIRE(sf_engine_serve(engine, &port) == SF_OK);
	const auto url = "http://127.0.0.1:" + std::to_string(port);
	REQUIRE(sf_http_request(url.c_str(), "GET", "/api/workflows", nullptr, 0, &status, &out) == SF_OK);
	CHECK(status == 200);
	CHECK(Json::parse(take(out)).at(0).at("kind") == "wildfire");

	CHECK(sf_incident_cancel(engine, "inc-none") == SF_NOT_FOUND);
	CHECK(sf_incident_cancel(engine, id.c_str()) == SF_OK);
	CHECK(sf_incident_cancel(engine, id.c_str()) == SF_CONFLICT);

	int stopped = -1;
	REQUIRE(sf_engine_wait(engine, 30, &stopped) == SF_OK);
	CHECK(stopped == 0);
	sf_engine_request_stop(engine);
	REQUIRE(sf_engine_wait(engine, -1, &stopped) == SF_OK);
	CHECK(stopped == 1);
	CHECK(sf_engine_stop(engine, 1) == SF_OK);
	sf_engine_close(engine);
}

TEST_CASE("demo through the C API") {
	Dir dir;
	sf_engine *engine = nullptr;
	REQUIRE(sf_engine_open(config_for(dir).dump().c_str(), &engine) == SF_OK);
	REQUIRE(sf_engine_start(engine) == SF_OK);
	char *out = nullptr;
	CHECK(sf_demo_wildfire(engine, R"({"hotspot_source":"SONAR"})", &out) == SF_INVALID_ARGUMENT);
	REQUIRE(sf_demo_wildfire(engine, R"({"hotspot_source":"VIIRS"})", &out) == SF_OK);
	const auto result = Json::parse(take(out));
	CHECK(result.at("forecast_results") == 3);
	CHECK(result.at("task_graph_text").get<std::string>().find("viirs_extract [COMPLETED]") != std::string::npos);
	sf_engine_close(engine);
}
