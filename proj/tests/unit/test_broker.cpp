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

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "broker/broker.hpp"
#include "common/error.hpp"
#include "support.hpp"

using namespace surgeflow;
using namespace surgeflow::broker;
using surgeflow::testing::TempDir;

namespace {

BrokerConfig config_for(const TempDir &dir) {
	BrokerConfig c;
	c.data_dir = dir.path();
	c.requeue_delay = std::chrono::milliseconds(0);
	return c;
}

Message msg(const std::string &queue, const std::string &tag) {
	Message m;
	m.queue = queue;
	m.incident_id = "inc-1";
	m.payload = Json {{"tag", tag}};
	return m;
}

const std::vector<QueueName> kQ {"q"};

// Independent reading of the on-disk framing: u32 length, u32 crc, JSON body.
// Counts ENQUEUE records not followed by an ACK for the same id.
std::set<std::string> live_ids_from_log(const std::filesystem::path &file) {
	std::ifstream in(file, std::ios::binary);
	std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
	std::set<std::string> live;
	std::size_t off = 0;
	while (off + 8 <= bytes.size()) {
		std::uint32_t len = bytes[off] | bytes[off + 1] << 8 | bytes[off + 2] << 16 | std::uint32_t(bytes[off + 3]) << 24;
		if (off + 8 + len > bytes.size()) {
			break;
		}
		auto j = Json::parse(bytes.begin() + off + 8, bytes.begin() + off + 8 + len);
		const auto kind = j["kind"].get<std::string>();
		if (kind == "ENQUEUE") {
			live.insert(j["message_id"].get<std::string>());
		} else if (kind == "ACK") {
			live.erase(j["message_id"].get<std::string>());
		}
		off += 8 + len;
	}
	return live;
}

} // namespace

TEST_CASE("declare_queue validates names and is idempotent") {
	TempDir dir;
	Broker b(config_for(dir));
	CHECK_NOTHROW(b.declare_queue("stage_A"));
	CHECK_NOTHROW(b.declare_queue("stage_A"));
	CHECK(b.queues() == std::vector<QueueName> {"stage_A"});
	CHECK_THROWS_AS(b.declare_queue(""), Error);
	CHECK_THROWS_AS(b.declare_queue("has space"), Error);
	CHECK_THROWS_AS(b.declare_queue("a/b"), Error);
}

TEST_CASE("publish preserves FIFO order and rejects bad targets") {
	TempDir dir;
	Broker b(config_for(dir));
	b.declare_queue("q");
	auto m1 = b.publish(msg("q", "1"));
	auto m2 = b.publish(msg("q", "2"));
	auto m3 = b.publish(msg("q", "3"));
	for (const auto &expected : {m1, m2, m3}) {
		auto d = b.fetch("c", kQ);
		REQUIRE(d);
		CHECK(d->message.message_id == expected);
		CHECK(d->message.delivery_count == 1);
		b.ack(d->tag);
	}
	CHECK_FALSE(b.fetch("c", kQ));

	try {
		b.publish(msg("nope", "x"));
		FAIL("expected error");
	} catch (const Error &e) {
		CHECK(e.code() == ErrorCode::NotFound);
	}

	auto big = msg("q", "big");
	big.payload["blob"] = std::string(70 * 1024, 'x');
	try {
		b.publish(big);
		FAIL("expected error");
	} catch (const Error &e) {
		CHECK(e.code() == ErrorCode::PayloadTooLarge);
	}
}

TEST_CASE("each message goes to exactly one consumer") {
	TempDir dir;
	Broker b(config_for(dir));
	b.declare_queue("q");
	b.publish(msg("q", "1"));
	b.publish(msg("q", "2"));
	auto d1 = b.fetch("c1", kQ);
	auto d2 = b.fetch("c2", kQ);
	REQUIRE(d1);
	REQUIRE(d2);
	CHECK(d1->message.message_id != d2->message.message_id);
	CHECK_FALSE(b.fetch("c3", kQ));
	CHECK_FALSE(b.fetch("c3", std::vector<QueueName> {}));
}

TEST_CASE("a consumer holds at most one delivery") {
	TempDir dir;
	Broker b(config_for(dir));
	b.declare_queue("q");
	b.publish(msg("q", "1"));
	b.publish(msg("q", "2"));
	auto d = b.fetch("c", kQ);
	REQUIRE(d);
	CHECK_THROWS_AS(b.fetch("c", kQ), Error);
	b.ack(d->tag);
	CHECK(b.fetch("c", kQ));
}

TEST_CASE("concurrent consumers deliver every message exactly once") {
	TempDir dir;
	Broker b(config_for(dir));
	b.declare_queue("q");
	std::set<std::string> published;
	for (int i = 0; i < 100; ++i) {
		published.insert(b.publish(msg("q", std::to_string(i))));
	}
	std::mutex mutex;
	std::map<std::string, int> deliveries;
	std::vector<std::thread> threads;
	for (int c = 0; c < 4; ++c) {
		threads.emplace_back([&, c] {
			const std::string consumer = "c" + std::to_string(c);
			while (auto d = b.fetch(consumer, kQ)) {
				{
					std::lock_guard lock(mutex);
					++deliveries[d->message.message_id];
				}
				b.ack(d->tag);
			}
		});
	}
	for (auto &t : threads) {
		t.join();
	}
	int total = 0;
	for (const auto &[id, n] : deliveries) {
		CHECK(n == 1);
		CHECK(published.contains(id));
		total += n;
	}
	CHECK(total == 100);
}

TEST_CASE("ack removes permanently and rejects unknown tags") {
	TempDir dir;
	Broker b(config_for(dir));
	b.declare_queue("q");
	b.publish(msg("q", "1"));
	auto d = b.fetch("c", kQ);
	REQUIRE(d);
	b.ack(d->tag);
	CHECK_THROWS_AS(b.ack(d->tag), Error);
	CHECK_FALSE(b.fetch("c", kQ));
	CHECK_THROWS_AS(b.requeue(DeliveryTag {999, "c"}), Error);
}

TEST_CASE("requeue places the message at the tail and counts deliveries") {
	TempDir dir;
	Broker b(config_for(dir));
	b.declare_queue("q");
	auto m1 = b.publish(msg("q", "1"));
	auto m2 = b.publish(msg("q", "2"));
	auto d = b.fetch("c", kQ);
	REQUIRE(d->message.message_id == m1);
	b.requeue(d->tag);
	auto a = b.fetch("c", kQ);
	CHECK(a->message.message_id == m2);
	b.ack(a->tag);
	auto again = b.fetch("c", kQ);
	CHECK(again->message.message_id == m1);
	CHECK(again->message.delivery_count == 2);

	for (int i = 0; i < 4; ++i) {
		b.requeue(again->tag);
		again = b.fetch("c", kQ);
		REQUIRE(again);
	}
	CHECK(again->message.delivery_count == 6);
}

TEST_CASE("requeued messages wait out the requeue delay") {
	TempDir dir;
	auto cfg = config_for(dir);
	cfg.requeue_delay = std::chrono::milliseconds(100);
	Broker b(cfg);
	b.declare_queue("q");
	b.publish(msg("q", "1"));
	auto d = b.fetch("c", kQ);
	const auto start = std::chrono::steady_clock::now();
	b.requeue(d->tag);
	CHECK_FALSE(b.fetch("c", kQ));
	REQUIRE(surgeflow::testing::wait_until([&] {
		auto again = b.fetch("c", kQ);
		if (again) {
			b.ack(again->tag);
		}
		return again.has_value();
	}));
	CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(100));
}

TEST_CASE("fetch rotates across subscribed queues") {
	TempDir dir;
	Broker b(config_for(dir));
	b.declare_queue("a");
	b.declare_queue("b");
	for (int i = 0; i < 3; ++i) {
		b.publish(msg("a", "a"));
		b.publish(msg("b", "b"));
	}
	const std::vector<QueueName> subs {"a", "b"};
	std::vector<std::string> order;
	while (auto d = b.fetch("c", subs)) {
		order.push_back(d->message.queue);
		b.ack(d->tag);
	}
	CHECK(order == std::vector<std::string> {"a", "b", "a", "b", "a", "b"});
}

TEST_CASE("recover restores everything published but not acked") {
	TempDir dir;
	std::set<std::string> published;
	{
		Broker b(config_for(dir));
		b.declare_queue("q");
		for (int i = 0; i < 1000; ++i) {
			published.insert(b.publish(msg("q", std::to_string(i))));
		}
		// Crash: the broker goes away without any acknowledgement.
	}
	CHECK(live_ids_from_log(dir.path() / "queues" / "q.log") == published);

	Broker b(config_for(dir));
	auto report = b.recover();
	CHECK(report.restored == 0);
	CHECK(report.pending == 1000);
	std::set<std::string> seen;
	while (auto d = b.fetch("c", kQ)) {
		seen.insert(d->message.message_id);
		b.ack(d->tag);
	}
	CHECK(seen == published);
}

TEST_CASE("recover puts unacked deliveries back at the head") {
	TempDir dir;
	std::vector<std::string> ids;
	{
		Broker b(config_for(dir));
		b.declare_queue("q");
		for (int i = 0; i < 5; ++i) {
			ids.push_back(b.publish(msg("q", std::to_string(i))));
		}
		auto d0 = b.fetch("c0", kQ);
		auto d1 = b.fetch("c1", kQ);
		auto d2 = b.fetch("c2", kQ);
		auto d3 = b.fetch("c3", kQ);
		b.ack(d3->tag);
	}
	Broker b(config_for(dir));
	auto report = b.recover();
	CHECK(report.restored == 3);
	std::vector<std::string> order;
	while (auto d = b.fetch("c", kQ)) {
		order.push_back(d->message.message_id);
		if (order.size() <= 3) {
			CHECK(d->message.delivery_count == 2);
		}
		b.ack(d->tag);
	}
	CHECK(order == std::vector<std::string> {ids[0], ids[1], ids[2], ids[4]});

	Broker clean(config_for(dir));
	CHECK(clean.recover().restored == 0);
}

TEST_CASE("recover drops a torn final record") {
	TempDir dir;
	std::string first;
	{
		Broker b(config_for(dir));
		b.declare_queue("q");
		first = b.publish(msg("q", "1"));
		b.publish(msg("q", "2"));
	}
	const auto path = dir.path() / "queues" / "q.log";
	const auto size = std::filesystem::file_size(path);
	std::filesystem::resize_file(path, size - 5);

	Broker b(config_for(dir));
	auto report = b.recover();
	CHECK(report.truncated_records == 1);
	CHECK(report.truncated_bytes > 0);
	CHECK(report.pending == 1);
	auto d = b.fetch("c", kQ);
	REQUIRE(d);
	CHECK(d->message.message_id == first);
	b.ack(d->tag);

	// The truncated log accepts new records after recovery.
	b.publish(msg("q", "3"));
	Broker again(config_for(dir));
	CHECK(again.recover().pending == 1);
}

TEST_CASE("recover refuses to run with deliveries in flight") {
	TempDir dir;
	Broker b(config_for(dir));
	b.declare_queue("q");
	b.publish(msg("q", "1"));
	auto d = b.fetch("c", kQ);
	CHECK_THROWS_AS(b.recover(), Error);
}

TEST_CASE("compaction bounds the log and keeps contents") {
	TempDir dir;
	auto cfg = config_for(dir);
	cfg.compaction_min_records = 64;
	std::set<std::string> live;
	{
		Broker b(cfg);
		b.declare_queue("q");
		for (int i = 0; i < 500; ++i) {
			auto id = b.publish(msg("q", std::to_string(i)));
			auto d = b.fetch("c", kQ);
			if (i % 10 == 0) {
				b.requeue(d->tag);
			} else {
				b.ack(d->tag);
			}
		}
		for (const auto &m : b.held_messages()) {
			live.insert(m.message_id);
		}
		CHECK(b.stats().front().log_records < 200);
	}
	Broker b(cfg);
	b.recover();
	std::set<std::string> recovered;
	for (const auto &m : b.held_messages()) {
		recovered.insert(m.message_id);
	}
	CHECK(recovered == live);
}

// Property: after any sequence of operations, a broker rebuilt from the log
// holds exactly the messages the live broker holds.
TEST_CASE("replaying the log reproduces the held messages") {
	std::mt19937 rng(20261019);
	for (int trial = 0; trial < 30; ++trial) {
		TempDir dir;
		auto cfg = config_for(dir);
		cfg.compaction_min_records = 16 + trial;
		std::multiset<std::string> expected;
		{
			Broker b(cfg);
			const std::vector<QueueName> queues {"a", "b", "c"};
			for (const auto &q : queues) {
				b.declare_queue(q);
			}
			std::map<std::string, DeliveryTag> held;
			for (int step = 0; step < 200; ++step) {
				const int op = static_cast<int>(rng() % 4);
				const std::string consumer = "c" + std::to_string(rng() % 3);
				if (op == 0 || op == 1) {
					b.publish(msg(queues[rng() % queues.size()], std::to_string(step)));
				} else if (!held.contains(consumer)) {
					if (auto d = b.fetch(consumer, queues)) {
						held[consumer] = d->tag;
					}
				} else if (op == 2) {
					b.ack(held[consumer]);
					held.erase(consumer);
				} else {
					b.requeue(held[consumer]);
					held.erase(consumer);
				}
			}
			for (const auto &m : b.held_messages()) {
				expected.insert(m.message_id);
			}
		}
		Broker rebuilt(cfg);
		rebuilt.recover();
		std::multiset<std::string> actual;
		for (const auto &m : rebuilt.held_messages()) {
			actual.insert(m.message_id);
		}
		CHECK(actual == expected);
	}
}
