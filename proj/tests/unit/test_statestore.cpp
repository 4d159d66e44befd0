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

#include <barrier>
#include <map>
#include <thread>

#include "common/error.hpp"
#include "statestore/state_store.hpp"
#include "support.hpp"

using namespace surgeflow;
using namespace surgeflow::statestore;
using namespace std::chrono_literals;
using surgeflow::testing::TempDir;

namespace {

struct Fixture {
	TempDir dir;
	StateStore store {dir.path() / "state.db"};

	Fixture() {
		store.register_workflow_kind("wildfire");
	}

	IncidentId active_incident() {
		auto id = store.create_incident("wildfire", "test");
		store.set_incident_status(id, IncidentStatus::Active);
		return id;
	}

	MessageEventContext ctx(const IncidentId &inc, const std::string &queue = "q") {
		MessageEventContext c;
		c.incident_id = inc;
		c.queue = queue;
		return c;
	}
};

ErrorCode code_of(const std::function<void()> &fn) {
	try {
		fn();
	} catch (const Error &e) {
		return e.code();
	}
	FAIL("expected an error");
	return ErrorCode::Internal;
}

} // namespace

TEST_CASE_FIXTURE(Fixture, "create_incident returns fresh ids in PENDING") {
	auto a = store.create_incident("wildfire", "La Jonquera");
	auto b = store.create_incident("wildfire", "La Jonquera");
	CHECK(a != b);
	auto rec = store.incident(a);
	CHECK(rec.status == IncidentStatus::Pending);
	CHECK(rec.label == "La Jonquera");
	CHECK(rec.outstanding_messages == 0);
	CHECK(code_of([&] { store.create_incident("unknown_kind", "x"); }) == ErrorCode::InvalidArgument);
	CHECK(code_of([&] { store.incident("inc-nope"); }) == ErrorCode::NotFound);
}

TEST_CASE_FIXTURE(Fixture, "incident status follows its lifecycle") {
	auto id = store.create_incident("wildfire", "x");
	CHECK(code_of([&] { store.set_incident_status(id, IncidentStatus::Completed); }) == ErrorCode::Conflict);
	store.set_incident_status(id, IncidentStatus::Active);
	store.set_incident_status(id, IncidentStatus::Error);
	for (auto s : {IncidentStatus::Active, IncidentStatus::Completed, IncidentStatus::Cancelled, IncidentStatus::Error}) {
		CHECK(code_of([&] { store.set_incident_status(id, s); }) == ErrorCode::Conflict);
	}
	auto done = active_incident();
	store.set_incident_status(done, IncidentStatus::Completed);
	CHECK(code_of([&] { store.set_incident_status(done, IncidentStatus::Error); }) == ErrorCode::Conflict);
	CHECK(code_of([&] { store.set_incident_status("inc-nope", IncidentStatus::Active); }) == ErrorCode::NotFound);
}

TEST_CASE_FIXTURE(Fixture, "message events record timestamps in order") {
	auto inc = active_incident();
	const auto t0 = now();
	store.log_message_event("m1", MessageStatus::Sent, t0, ctx(inc));
	store.log_message_event("m1", MessageStatus::Delivered, t0 + 1ms, MessageEventContext {.consumer_id = "w0"});
	store.log_message_event("m1", MessageStatus::Processing, t0 + 2ms);
	store.log_message_event("m1", MessageStatus::Completed, t0 + 3ms);
	auto e = store.message("m1");
	REQUIRE(e);
	CHECK(e->status == MessageStatus::Completed);
	CHECK(e->sent_timestamp == t0);
	CHECK(*e->delivered_timestamp == t0 + 1ms);
	CHECK(*e->completed_timestamp == t0 + 3ms);
	CHECK(*e->consumer_id == "w0");

	store.log_message_event("m2", MessageStatus::Sent, t0, ctx(inc));
	CHECK(code_of([&] { store.log_message_event("m2", MessageStatus::Completed, t0); }) == ErrorCode::Conflict);
	store.log_message_event("m2", MessageStatus::Dropped, t0 + 1ms);
	CHECK(store.message("m2")->status == MessageStatus::Dropped);

	CHECK(code_of([&] { store.log_message_event("m1", MessageStatus::Sent, t0, ctx(inc)); }) == ErrorCode::Conflict);
	CHECK(code_of([&] { store.log_message_event("m9", MessageStatus::Delivered, t0); }) == ErrorCode::NotFound);
}

TEST_CASE_FIXTURE(Fixture, "timestamps never run backwards within an entry") {
	auto inc = active_incident();
	const auto t0 = now();
	store.log_message_event("m", MessageStatus::Sent, t0, ctx(inc));
	store.log_message_event("m", MessageStatus::Delivered, t0 - 5ms);
	store.log_message_event("m", MessageStatus::Processing, t0 - 10ms);
	store.log_message_event("m", MessageStatus::Completed, t0 - 20ms);
	auto e = *store.message("m");
	CHECK(e.sent_timestamp <= *e.delivered_timestamp);
	CHECK(*e.delivered_timestamp <= *e.completed_timestamp);
}

TEST_CASE_FIXTURE(Fixture, "redelivery is accepted until the message resolves") {
	auto inc = active_incident();
	const auto t0 = now();
	store.log_message_event("m", MessageStatus::Sent, t0, ctx(inc));
	store.log_message_event("m", MessageStatus::Delivered, t0);
	store.log_message_event("m", MessageStatus::Processing, t0);
	store.log_message_event("m", MessageStatus::Delivered, t0 + 1ms);
	CHECK(store.message("m")->delivery_count == 2);
	store.log_message_event("m", MessageStatus::Processing, t0 + 2ms);
	store.log_message_event("m", MessageStatus::Error, t0 + 3ms, MessageEventContext {.error = "boom"});
	CHECK(store.message("m")->error == "boom");
	CHECK(code_of([&] { store.log_message_event("m", MessageStatus::Delivered, t0); }) == ErrorCode::Conflict);
}

TEST_CASE_FIXTURE(Fixture, "record_sent and record_resolved keep the counter in step") {
	auto inc = active_incident();
	store.record_sent("m1", now(), ctx(inc));
	store.record_sent("m2", now(), ctx(inc));
	auto cleanup = ctx(inc, "__cleanup__");
	cleanup.cleanup = true;
	store.record_sent("c1", now(), cleanup);
	CHECK(store.outstanding(inc) == 2);
	store.record_resolved("m1", MessageStatus::Dropped, now());
	CHECK(store.outstanding(inc) == 1);
	store.log_message_event("c1", MessageStatus::Delivered, now());
	store.log_message_event("c1", MessageStatus::Processing, now());
	store.record_resolved("c1", MessageStatus::Completed, now());
	CHECK(store.outstanding(inc) == 1);
	CHECK(store.unresolved_messages().size() == 1);
}

TEST_CASE_FIXTURE(Fixture, "persisted stage data is sequenced per incident and queue") {
	auto inc = active_incident();
	CHECK(store.retrieve_stage_data(inc, "q").empty());
	CHECK(store.persist_stage_data(inc, "q", Json {{"p", 1}}) == 1);
	CHECK(store.persist_stage_data(inc, "q", Json {{"p", 2}}) == 2);
	CHECK(store.persist_stage_data(inc, "q", Json {{"p", 3}}) == 3);
	CHECK(store.persist_stage_data(inc, "other", Json {{"p", 9}}) == 1);
	auto records = store.retrieve_stage_data(inc, "q");
	REQUIRE(records.size() == 3);
	for (int i = 0; i < 3; ++i) {
		CHECK(records[i].sequence == i + 1);
		CHECK(records[i].payload["p"] == i + 1);
	}
	CHECK(code_of([&] { store.persist_stage_data("inc-nope", "q", Json::object()); }) == ErrorCode::NotFound);
	CHECK(code_of([&] { store.retrieve_stage_data("inc-nope", "q"); }) == ErrorCode::NotFound);

	store.set_incident_status(inc, IncidentStatus::Cancelled);
	store.clear_incident_state(inc);
	CHECK(store.retrieve_stage_data(inc, "q").empty());
	CHECK(store.persist_stage_data(inc, "q", Json {{"p", 4}}) == 1);
}

TEST_CASE_FIXTURE(Fixture, "retrieval never crosses incidents or queues") {
	std::vector<IncidentId> incidents;
	std::map<std::pair<std::string, std::string>, std::vector<int>> expected;
	for (int i = 0; i < 10; ++i) {
		incidents.push_back(active_incident());
	}
	int value = 0;
	for (int round = 0; round < 5; ++round) {
		for (const auto &inc : incidents) {
			for (const std::string q : {"a", "b"}) {
				if ((value * 7 + round) % 3 == 0) {
					++value;
					continue;
				}
				store.persist_stage_data(inc, q, Json {{"v", value}, {"inc", inc}, {"q", q}});
				expected[{inc, q}].push_back(value++);
			}
		}
	}
	for (const auto &inc : incidents) {
		for (const std::string q : {"a", "b"}) {
			auto records = store.retrieve_stage_data(inc, q);
			std::vector<int> values;
			for (const auto &r : records) {
				CHECK(r.incident_id == inc);
				CHECK(r.payload["inc"] == inc);
				CHECK(r.payload["q"] == q);
				values.push_back(r.payload["v"].get<int>());
			}
			CHECK(values == expected[{inc, q}]);
		}
	}
}

TEST_CASE_FIXTURE(Fixture, "stage locks are exclusive") {
	auto inc = active_incident();
	CHECK(store.try_acquire_lock(inc, "join", "w1"));
	CHECK_FALSE(store.try_acquire_lock(inc, "join", "w2"));
	CHECK(store.try_acquire_lock(inc, "other", "w2"));
	auto locks = store.locks_for_incident(inc);
	REQUIRE(locks.size() == 2);
	CHECK(locks[0].holder == "w1");
	store.release_lock(inc, "join");
	CHECK(store.try_acquire_lock(inc, "join", "w2"));
	CHECK(store.release_all_locks() == 2);
}

TEST_CASE_FIXTURE(Fixture, "concurrent acquirers: exactly one wins each trial") {
	auto inc = active_incident();
	constexpr int kThreads = 8;
	constexpr int kTrials = 1000;
	std::vector<std::array<bool, kThreads>> wins(kTrials);
	std::barrier sync(kThreads);
	std::vector<std::thread> threads;
	for (int t = 0; t < kThreads; ++t) {
		threads.emplace_back([&, t] {
			for (int trial = 0; trial < kTrials; ++trial) {
				sync.arrive_and_wait();
				wins[trial][t] = store.try_acquire_lock(inc, "q" + std::to_string(trial), "w" + std::to_string(t));
			}
		});
	}
	for (auto &th : threads) {
		th.join();
	}
	int bad = 0;
	for (const auto &w : wins) {
		bad += std::count(w.begin(), w.end(), true) != 1;
	}
	CHECK(bad == 0);
}

TEST_CASE_FIXTURE(Fixture, "outstanding counter is atomic and floored at zero") {
	auto inc = active_incident();
	CHECK(store.adjust_outstanding(inc, +1) == 1);
	CHECK(store.adjust_outstanding(inc, -1) == 0);
	CHECK(code_of([&] { store.adjust_outstanding(inc, -1); }) == ErrorCode::PreconditionFailed);
	CHECK(code_of([&] { store.adjust_outstanding(inc, 2); }) == ErrorCode::InvalidArgument);

	std::vector<std::thread> threads;
	for (int t = 0; t < 50; ++t) {
		threads.emplace_back([&] {
			store.adjust_outstanding(inc, +1);
			std::this_thread::yield();
			store.adjust_outstanding(inc, -1);
		});
	}
	for (auto &th : threads) {
		th.join();
	}
	CHECK(store.outstanding(inc) == 0);
}

TEST_CASE_FIXTURE(Fixture, "clear_incident_state removes stage data and locks but keeps the audit trail") {
	auto inc = active_incident();
	store.persist_stage_data(inc, "q", Json {{"x", 1}});
	store.try_acquire_lock(inc, "q", "w1");
	store.record_sent("m1", now(), ctx(inc));
	CHECK(code_of([&] { store.clear_incident_state(inc); }) == ErrorCode::PreconditionFailed);

	store.set_incident_status(inc, IncidentStatus::Cancelled);
	const auto cleared = store.clear_incident_state(inc);
	CHECK(store.retrieve_stage_data(inc, "q").empty());
	CHECK(store.locks_for_incident(inc).empty());
	CHECK(store.messages_for_incident(inc).size() == 1);
	CHECK(store.incident(inc).cleared_timestamp == cleared);
	// Idempotent: a second clear keeps the first timestamp.
	CHECK(store.clear_incident_state(inc) == cleared);
}

TEST_CASE_FIXTURE(Fixture, "statistics aggregate completed messages") {
	auto inc = active_incident();
	CHECK(store.stage_statistics_for_kind("wildfire").empty());

	const auto t0 = from_micros(1'000'000);
	store.log_message_event("m1", MessageStatus::Sent, t0, ctx(inc, "stage"));
	store.log_message_event("m1", MessageStatus::Delivered, t0 + 2s);
	store.log_message_event("m1", MessageStatus::Processing, t0 + 2s);
	store.log_message_event("m1", MessageStatus::Completed, t0 + 5s);
	store.log_message_event("m2", MessageStatus::Sent, t0, ctx(inc, "stage"));

	auto stats = store.stage_statistics_for_incident(inc);
	REQUIRE(stats.size() == 1);
	CHECK(stats[0].queue == "stage");
	CHECK(stats[0].count == 1);
	CHECK(stats[0].mean_wait_ms == doctest::Approx(2000.0));
	CHECK(stats[0].max_wait_ms == doctest::Approx(2000.0));
	CHECK(stats[0].mean_processing_ms == doctest::Approx(3000.0));
	CHECK(store.stage_statistics_for_kind("wildfire").size() == 1);
	CHECK(store.stage_statistics_for_kind("other").empty());
}

TEST_CASE_FIXTURE(Fixture, "statistics track injected handler time") {
	auto inc = active_incident();
	for (int i = 0; i < 20; ++i) {
		const auto id = "m" + std::to_string(i);
		store.log_message_event(id, MessageStatus::Sent, now(), ctx(inc, "sleepy"));
		store.log_message_event(id, MessageStatus::Delivered, now());
		store.log_message_event(id, MessageStatus::Processing, now());
		std::this_thread::sleep_for(100ms);
		store.log_message_event(id, MessageStatus::Completed, now());
	}
	auto stats = store.stage_statistics_for_incident(inc);
	REQUIRE(stats.size() == 1);
	CHECK(stats[0].count == 20);
	CHECK(stats[0].mean_processing_ms >= 100.0);
	CHECK(stats[0].mean_processing_ms <= 140.0);
}

TEST_CASE("state survives reopening the store") {
	TempDir dir;
	IncidentId inc;
	{
		StateStore store(dir.path() / "state.db");
		store.register_workflow_kind("k");
		inc = store.create_incident("k", "persisted");
		store.set_incident_status(inc, IncidentStatus::Active);
		store.persist_stage_data(inc, "q", Json {{"x", 1}});
	}
	StateStore store(dir.path() / "state.db");
	CHECK(store.incident(inc).status == IncidentStatus::Active);
	CHECK(store.retrieve_stage_data(inc, "q").size() == 1);
}
