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
#include <doctest.h>

#include <random>

#include <httplib.h>

#include "common/error.hpp"
#include "edi/edi.hpp"
#include "support.hpp"
#include "wfcore/handler_context.hpp"

using namespace surgeflow;
using namespace surgeflow::edi;
using namespace std::chrono_literals;
using statestore::IncidentStatus;
using surgeflow::testing::TempDir;
using surgeflow::testing::wait_until;

namespace {

ErrorCode code_of(const std::function<void()> &fn) {
	try {
		fn();
	} catch (const Error &e) {
		return e.code();
	}
	FAIL("expected an error");
	return ErrorCode::Internal;
}

broker::BrokerConfig broker_config(const TempDir &dir) {
	broker::BrokerConfig c;
	c.data_dir = dir.path();
	c.requeue_delay = 2ms;
	return c;
}

EdiConfig manual_polling() {
	EdiConfig c;
	c.run_pollers = false;
	return c;
}

struct Fixture {
	TempDir dir;
	broker::Broker broker {broker_config(dir)};
	statestore::StateStore store {dir.path() / "state.db"};
	wfcore::Runtime runtime {broker, store};
	simenv::SimClock clock {simenv::SimClock::Mode::Manual};
	simenv::DataManager data {dir.path(), {}, 1e9, clock};
	std::shared_ptr<MockSourceRegistry> mocks = std::make_shared<MockSourceRegistry>();
	SourceRouter router {mocks};
	ExternalDataInterface edi;

	explicit Fixture(EdiConfig config = manual_polling()) :
		edi(runtime, data, router, config) {
		wfcore::WorkflowDefinition wf;
		wf.kind = "edi";
		wf.init_queue = "start";
		wf.stages = {
			{"start", [](wfcore::HandlerContext &) {}, false},
			{"ingest", [](wfcore::HandlerContext &) {}, false},
			{"forecast", [](wfcore::HandlerContext &) {}, false},
		};
		runtime.register_workflow(wf);
		runtime.add_cleanup_listener([this](const IncidentId &id) { edi.deregister_incident(id); });
	}

	IncidentId incident() {
		return runtime.start_incident("edi", "t", Json::object());
	}

	std::vector<statestore::MessageLogEntry> on_queue(const IncidentId &id, const QueueName &q) {
		std::vector<statestore::MessageLogEntry> out;
		for (auto &m : store.messages_for_incident(id)) {
			if (m.queue == q) {
				out.push_back(m);
			}
		}
		return out;
	}

	std::vector<broker::Message> held_on(const QueueName &q) {
		std::vector<broker::Message> out;
		for (auto &m : broker.held_messages()) {
			if (m.queue == q) {
				out.push_back(m);
			}
		}
		return out;
	}

	void pump() {
		const auto subs = runtime.subscriptions();
		for (int idle = 0; idle < 200;) {
			if (auto d = broker.fetch("pump", subs)) {
				runtime.execute_delivery(*d);
				idle = 0;
			} else {
				++idle;
				std::this_thread::sleep_for(1ms);
			}
		}
	}
};

} // namespace

TEST_CASE("push endpoint turns a body into a message carrying a data handle") {
	Fixture f;
	const auto inc = f.incident();
	const auto ep = f.edi.register_push_endpoint(inc, "/incident/" + inc + "/hotspots", "ingest");
	const std::string polygon = R"({"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]})";
	const auto r = f.edi.handle_push("/incident/" + inc + "/hotspots/", polygon, {{"content-type", "application/json"}});
	CHECK(r.endpoint_id == ep);
	const auto held = f.held_on("ingest");
	REQUIRE(held.size() == 1);
	const auto &m = held[0];
	CHECK(m.message_id == r.message_id);
	CHECK(m.incident_id == inc);
	CHECK(m.payload.at("data_id") == r.data_id);
	CHECK(m.payload.at("metadata").at("content-type") == "application/json");
	CHECK(m.payload.dump().find("Polygon") == std::string::npos);
	CHECK(f.data.read(r.data_id) == polygon);
	CHECK(f.store.outstanding(inc) == 2);
	CHECK(f.edi.endpoint(ep)->messages == 1);
}

TEST_CASE("push endpoint registration rules") {
	Fixture f;
	const auto inc = f.incident();
	f.edi.register_push_endpoint(inc, "hotspots", "ingest");
	CHECK(code_of([&] { f.edi.register_push_endpoint(inc, "/hotspots", "ingest"); }) == ErrorCode::Conflict);
	CHECK(code_of([&] { f.edi.register_push_endpoint(inc, "/other", "nowhere"); }) == ErrorCode::NotFound);
	CHECK(code_of([&] { f.edi.register_push_endpoint("inc-missing", "/x", "ingest"); }) == ErrorCode::NotFound);
	f.runtime.cancel_incident(inc);
	CHECK(code_of([&] { f.edi.register_push_endpoint(inc, "/late", "ingest"); }) == ErrorCode::Conflict);
}

TEST_CASE("rejected pushes produce no message") {
	Fixture f;
	const auto inc = f.incident();
	f.edi.register_push_endpoint(inc, "/p", "ingest");
	CHECK(code_of([&] { f.edi.handle_push("/unknown", "x"); }) == ErrorCode::NotFound);
	CHECK(code_of([&] { f.edi.handle_push("/p", std::string(8 * 1024 * 1024 + 1, 'x')); }) == ErrorCode::PayloadTooLarge);
	CHECK(f.held_on("ingest").empty());

	f.store.set_incident_status(inc, IncidentStatus::Error);
	CHECK(code_of([&] { f.edi.handle_push("/p", "x"); }) == ErrorCode::Conflict);
	CHECK(f.held_on("ingest").empty());
	CHECK(f.on_queue(inc, "ingest").empty());
}

TEST_CASE("empty push body gives a zero-length item") {
	Fixture f;
	const auto inc = f.incident();
	f.edi.register_push_endpoint(inc, "/p", "ingest");
	const auto r = f.edi.handle_push("/p", "");
	CHECK(f.data.item(r.data_id).size_bytes == 0);
	CHECK(f.data.read(r.data_id).empty());
}

TEST_CASE("cleanup deregisters the incident's endpoints") {
	Fixture f;
	const auto inc = f.incident();
	f.edi.register_push_endpoint(inc, "/incident/x/hotspots", "ingest");
	const auto pull = f.edi.register_pull_endpoint(inc, "mock://gfs", 50ms, "forecast");
	f.runtime.cancel_incident(inc);
	f.pump();
	CHECK(f.store.incident(inc).cleared_timestamp.has_value());
	CHECK(code_of([&] { f.edi.handle_push("/incident/x/hotspots", "x"); }) == ErrorCode::NotFound);
	CHECK_FALSE(f.edi.endpoint(pull)->active);
	f.mocks->set("mock://gfs", {{"last-modified", "t1"}});
	CHECK_FALSE(f.edi.poll_now(pull).has_value());
	// The path can be claimed again by another incident.
	const auto other = f.incident();
	f.edi.register_push_endpoint(other, "/incident/x/hotspots", "ingest");
}

TEST_CASE("concurrent pushes each yield exactly one message") {
	Fixture f;
	const auto inc = f.incident();
	f.edi.register_push_endpoint(inc, "/p", "ingest");
	std::vector<std::thread> threads;
	for (int t = 0; t < 8; ++t) {
		threads.emplace_back([&, t] {
			for (int i = 0; i < 25; ++i) {
				f.edi.handle_push("/p", std::to_string(t * 100 + i));
			}
		});
	}
	for (auto &t : threads) {
		t.join();
	}
	const auto held = f.held_on("ingest");
	CHECK(held.size() == 200);
	std::set<std::string> bodies;
	for (const auto &m : held) {
		bodies.insert(f.data.read(m.payload.at("data_id").get<std::string>()));
	}
	CHECK(bodies.size() == 200);
}

TEST_CASE("pull endpoint emits on first observation and on each change") {
	Fixture f;
	const auto inc = f.incident();
	f.mocks->set("mock://gfs", {{"Last-Modified", "Mon, 01 Jan 2024 00:00:00 GMT"}, {"Content-Length", "100"}});
	const auto ep = f.edi.register_pull_endpoint(inc, "mock://gfs", 1s, "forecast");
	CHECK(f.edi.poll_now(ep).has_value());
	for (int i = 0; i < 5; ++i) {
		CHECK_FALSE(f.edi.poll_now(ep).has_value());
	}
	// Headers outside the signature subset do not count as new data.
	f.mocks->set("mock://gfs", {{"Last-Modified", "Mon, 01 Jan 2024 00:00:00 GMT"}, {"Content-Length", "100"}, {"Date", "now"}});
	CHECK_FALSE(f.edi.poll_now(ep).has_value());
	f.mocks->set("mock://gfs", {{"Last-Modified", "Tue, 02 Jan 2024 00:00:00 GMT"}, {"Content-Length", "100"}});
	const auto changed = f.edi.poll_now(ep);
	REQUIRE(changed.has_value());
	f.mocks->set("mock://gfs", {{"Last-Modified", "Tue, 02 Jan 2024 00:00:00 GMT"}, {"Content-Length", "120"}});
	CHECK(f.edi.poll_now(ep).has_value());
	CHECK(f.on_queue(inc, "forecast").size() == 3);

	const auto held = f.held_on("forecast");
	REQUIRE(held.size() == 3);
	for (const auto &m : held) {
		CHECK(m.payload.at("source") == "mock://gfs");
		CHECK(m.payload.at("metadata").contains("last-modified"));
	}
	CHECK(f.edi.endpoint(ep)->polls == 9);
}

TEST_CASE("unreachable source is retried without a message") {
	Fixture f;
	const auto inc = f.incident();
	const auto ep = f.edi.register_pull_endpoint(inc, "mock://down", 1s, "forecast");
	CHECK_FALSE(f.edi.poll_now(ep).has_value());
	f.mocks->set_unreachable("mock://down");
	CHECK_FALSE(f.edi.poll_now(ep).has_value());
	f.mocks->set("mock://down", {{"last-modified", "a"}});
	CHECK(f.edi.poll_now(ep).has_value());
	CHECK(f.mocks->probe_count("mock://down") == 3);
	CHECK(code_of([&] { f.edi.poll_now("edp-404"); }) == ErrorCode::NotFound);
	CHECK(code_of([&] { f.edi.register_pull_endpoint(inc, "mock://x", 0ms, "forecast"); }) == ErrorCode::InvalidArgument);
}

// Oracle: count the polls at which the scripted value differs from the value
// seen at the previous successful poll, plus the first observation.
TEST_CASE("property: pull messages equal observed signature changes plus one") {
	std::mt19937 rng(11);
	for (int trial = 0; trial < 25; ++trial) {
		Fixture f;
		const auto inc = f.incident();
		const auto url = "mock://src-" + std::to_string(trial);
		f.mocks->set(url, {{"last-modified", "v0"}});
		const auto ep = f.edi.register_pull_endpoint(inc, url, 1s, "forecast");
		int version = 0;
		std::optional<int> seen;
		int expected = 0;
		for (int poll = 0; poll < 20; ++poll) {
			if (rng() % 4 == 0) {
				f.mocks->set(url, {{"last-modified", "v" + std::to_string(++version)}});
			}
			if (!seen || *seen != version) {
				++expected;
				seen = version;
			}
			f.edi.poll_now(ep);
		}
		CHECK(static_cast<int>(f.on_queue(inc, "forecast").size()) == expected);
	}
}

TEST_CASE("pull endpoint stops once its incident is no longer active") {
	Fixture f;
	const auto inc = f.incident();
	f.mocks->set("mock://s", {{"last-modified", "1"}});
	const auto ep = f.edi.register_pull_endpoint(inc, "mock://s", 1s, "forecast");
	f.store.set_incident_status(inc, IncidentStatus::Error);
	CHECK_FALSE(f.edi.poll_now(ep).has_value());
	CHECK_FALSE(f.edi.endpoint(ep)->active);
	CHECK(f.on_queue(inc, "forecast").empty());
}

TEST_CASE("pollers watch a plain HTTP source on their own") {
	httplib::Server server;
	std::mutex mutex;
	std::string last_modified = "Wed, 01 May 2024 00:00:00 GMT";
	server.Get("/gfs.grib", [&](const httplib::Request &, httplib::Response &res) {
		std::lock_guard lock(mutex);
		res.set_header("Last-Modified", last_modified);
		res.set_content("grib", "application/octet-stream");
	});
	const int port = server.bind_to_any_port("127.0.0.1");
	std::thread serving([&] { server.listen_after_bind(); });
	server.wait_until_ready();
	REQUIRE(port > 0);

	EdiConfig config;
	config.run_pollers = true;
	Fixture f(config);
	const auto inc = f.incident();
	const auto url = "http://127.0.0.1:" + std::to_string(port) + "/gfs.grib";
	const auto ep = f.edi.register_pull_endpoint(inc, url, 20ms, "forecast");
	CHECK(wait_until([&] { return f.edi.endpoint(ep)->messages == 1; }, 5s));
	CHECK(wait_until([&] { return f.edi.endpoint(ep)->polls >= 4; }, 5s));
	CHECK(f.edi.endpoint(ep)->messages == 1);
	{
		std::lock_guard lock(mutex);
		last_modified = "Thu, 02 May 2024 00:00:00 GMT";
	}
	CHECK(wait_until([&] { return f.edi.endpoint(ep)->messages == 2; }, 5s));
	const auto held = f.held_on("forecast");
	REQUIRE(held.size() == 2);
	CHECK(held[1].payload.at("metadata").at("last-modified") == "Thu, 02 May 2024 00:00:00 GMT");
	f.edi.shutdown();
	server.stop();
	serving.join();
}
