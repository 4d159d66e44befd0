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

#include <map>
#include <random>

#include <zlib.h>

#include "common/error.hpp"
#include "simenv/hpc_simulator.hpp"
#include "support.hpp"

using namespace surgeflow;
using namespace surgeflow::simenv;
using namespace std::chrono_literals;
using surgeflow::testing::TempDir;

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

std::uint32_t crc_of(const std::string &s) {
	return static_cast<std::uint32_t>(crc32(0, reinterpret_cast<const Bytef *>(s.data()), static_cast<uInt>(s.size())));
}

std::set<std::string> names_of(const SimConfig &c) {
	std::set<std::string> out;
	for (const auto &m : c.machines) {
		out.insert(m.name);
	}
	return out;
}

struct Sim {
	TempDir dir;
	SimConfig config;
	SimClock clock {SimClock::Mode::Manual};
	std::unique_ptr<DataManager> data;
	std::vector<JobNotification> notes;
	std::unique_ptr<HpcSimulator> hpc;

	explicit Sim(SimConfig c = default_sim_config()) :
		config(std::move(c)) {
		data = std::make_unique<DataManager>(dir.path(), names_of(config), config.transfer_rate, clock);
		hpc = std::make_unique<HpcSimulator>(config, *data, clock, [this](const JobNotification &n) {
			notes.push_back(n);
		});
	}

	DataId staged(const std::string &machine, const std::string &content = "input") {
		auto id = data->register_data("in", content, kLocalStore, "test");
		data->move_data(id, machine);
		return id;
	}

	JobSpec batch(const std::string &machine, std::vector<DataId> inputs, SimDuration runtime = 50ms) {
		JobSpec s;
		s.machine = machine;
		s.kind = JobKind::Batch;
		s.inputs = std::move(inputs);
		s.nominal_runtime = runtime;
		s.incident_id = "inc-1";
		s.notify_queue = "done";
		return s;
	}
};

} // namespace

TEST_CASE("register and read data round-trips bytes") {
	Sim s;
	std::string blob(1024, '\0');
	for (std::size_t i = 0; i < blob.size(); ++i) {
		blob[i] = static_cast<char>(i * 7);
	}
	const auto id = s.data->register_data("terrain", blob, kLocalStore, "test");
	CHECK(s.data->read(id) == blob);
	const auto item = s.data->item(id);
	CHECK(item.size_bytes == 1024);
	CHECK(item.location == kLocalStore);
	CHECK(code_of([&] { s.data->register_data("x", "y", "nowhere", "t"); }) == ErrorCode::NotFound);
	const auto again = s.data->register_data("terrain", blob, kLocalStore, "test");
	CHECK(again != id);
	CHECK(s.data->find_by_name("terrain")->data_id == again);
	CHECK_FALSE(s.data->find_by_name("nothing").has_value());
	CHECK(s.data->register_data("empty", "", kLocalStore, "t") != again);
}

TEST_CASE("move_data keeps content and charges transfer time") {
	Sim s;
	std::mt19937 rng(7);
	std::string blob(1024 * 1024, '\0');
	for (auto &c : blob) {
		c = static_cast<char>(rng());
	}
	const auto id = s.data->register_data("big", blob, kLocalStore, "test");
	const auto before = crc_of(blob);
	CHECK(s.data->move_data(id, kLocalStore) == SimDuration(0));
	const auto delay = s.data->move_data(id, "archer2");
	CHECK(delay == SimDuration(100000));
	CHECK(s.data->item(id).location == "archer2");
	CHECK(crc_of(s.data->read(id)) == before);
	s.data->move_data(id, "cirrus");
	s.data->move_data(id, kLocalStore);
	CHECK(crc_of(s.data->read(id)) == before);
	CHECK(code_of([&] { s.data->move_data("data-999", "archer2"); }) == ErrorCode::NotFound);
	CHECK(code_of([&] { s.data->move_data(id, "mars"); }) == ErrorCode::NotFound);
}

TEST_CASE("data catalog survives a restart") {
	TempDir dir;
	SimClock clock(SimClock::Mode::Manual);
	DataId a, b;
	{
		DataManager dm(dir.path(), {"archer2"}, 1e6, clock);
		a = dm.register_data("a", "alpha", kLocalStore, "t");
		b = dm.register_data("b", "beta", kLocalStore, "t");
		dm.move_data(b, "archer2");
	}
	DataManager dm(dir.path(), {"archer2"}, 1e6, clock);
	CHECK(dm.read(a) == "alpha");
	CHECK(dm.read(b) == "beta");
	CHECK(dm.item(b).location == "archer2");
	const auto c = dm.register_data("c", "gamma", kLocalStore, "t");
	CHECK(c != a);
	CHECK(c != b);
	CHECK(dm.items().size() == 3);
}

TEST_CASE("machine configuration parsing names the bad field") {
	const auto ok = sim_config_from_json(Json::parse(R"({"machines":[{"name":"m1","max_concurrent_jobs":3,"speed_factor":2}],"seed":5})"));
	REQUIRE(ok.machines.size() == 1);
	CHECK(ok.machines[0].max_concurrent_jobs == 3);
	CHECK(ok.seed == 5);
	const auto message_of = [](const char *doc) {
		try {
			sim_config_from_json(Json::parse(doc));
		} catch (const Error &e) {
			return std::string(e.what());
		}
		return std::string();
	};
	CHECK(message_of(R"({"machines":[{"name":"m","max_concurrent_jobs":0}]})").find("machines[0].max_concurrent_jobs") != std::string::npos);
	CHECK(message_of(R"({"machines":[{"name":"m","speed_factor":-1}]})").find("speed_factor") != std::string::npos);
	CHECK(message_of(R"({"machines":[{"name":"local"}]})").find("machines[0].name") != std::string::npos);
	CHECK(message_of(R"({"transfer_rate":0})").find("transfer_rate") != std::string::npos);
	CHECK(message_of(R"({"machines":[{}]})").find("machine configuration") != std::string::npos);
}

TEST_CASE("BATCH job sends one completion with its output handle") {
	Sim s;
	const auto input = s.staged("archer2");
	const auto job = s.hpc->submit_job(s.batch("archer2", {input}));
	CHECK(s.hpc->job_status(job).status == JobStatus::Running);
	s.hpc->advance(49ms);
	CHECK(s.notes.empty());
	s.hpc->advance(1ms);
	REQUIRE(s.notes.size() == 1);
	const auto &n = s.notes[0];
	CHECK(n.queue == "done");
	CHECK(n.payload.at("status") == "COMPLETED");
	CHECK(n.payload.at("job_id") == job);
	const auto out = n.payload.at("output_data_id").get<std::string>();
	CHECK(s.data->item(out).location == "archer2");
	CHECK(Json::parse(s.data->read(out)).at("inputs") == Json::array({input}));
	CHECK(s.hpc->job_status(job).status == JobStatus::Completed);
	s.hpc->advance(1s);
	CHECK(s.notes.size() == 1);
}

TEST_CASE("speed factor scales the run time") {
	Sim s;
	const auto job = s.hpc->submit_job(s.batch("cirrus", {s.staged("cirrus")}));
	s.hpc->advance(99ms);
	CHECK(s.hpc->job_status(job).status == JobStatus::Running);
	s.hpc->advance(1ms);
	CHECK(s.hpc->job_status(job).status == JobStatus::Completed);
}

TEST_CASE("PERSISTENT job emits emit_count outputs then one completion") {
	Sim s;
	JobSpec spec = s.batch("archer2", {s.staged("archer2")});
	spec.kind = JobKind::Persistent;
	spec.emit_interval = 30ms;
	spec.emit_count = 3;
	spec.notify_queue = "forecast_result";
	spec.completion_queue = "completed";
	spec.parent_message_id = "msg-parent";
	const auto job = s.hpc->submit_job(spec);
	s.hpc->advance(60ms);
	CHECK(s.notes.size() == 2);
	s.hpc->advance(1s);
	REQUIRE(s.notes.size() == 4);
	for (int i = 0; i < 3; ++i) {
		CHECK(s.notes[static_cast<std::size_t>(i)].queue == "forecast_result");
		CHECK(s.notes[static_cast<std::size_t>(i)].payload.at("index") == i);
		CHECK(s.notes[static_cast<std::size_t>(i)].parent_message_id == std::optional<MessageId>("msg-parent"));
	}
	CHECK(s.notes[3].queue == "completed");
	CHECK(s.notes[3].payload.at("status") == "COMPLETED");
	CHECK(s.hpc->job_status(job).outputs.size() == 3);

	SUBCASE("without a completion queue the completion goes to notify_queue") {
		spec.completion_queue.reset();
		spec.emit_count = 1;
		s.notes.clear();
		s.hpc->submit_job(spec);
		s.hpc->advance(30ms);
		REQUIRE(s.notes.size() == 2);
		CHECK(s.notes[1].queue == "forecast_result");
		CHECK(s.notes[1].payload.at("event") == "completion");
	}
}

TEST_CASE("submit preconditions") {
	Sim s;
	const auto on_local = s.data->register_data("in", "x", kLocalStore, "t");
	CHECK(code_of([&] { s.hpc->submit_job(s.batch("archer2", {on_local})); }) == ErrorCode::PreconditionFailed);
	CHECK(code_of([&] { s.hpc->submit_job(s.batch("mars", {})); }) == ErrorCode::NotFound);
	CHECK(code_of([&] { s.hpc->submit_job(s.batch("archer2", {"data-404"})); }) == ErrorCode::NotFound);
	auto persistent = s.batch("archer2", {});
	persistent.kind = JobKind::Persistent;
	persistent.emit_count = 0;
	CHECK(code_of([&] { s.hpc->submit_job(persistent); }) == ErrorCode::InvalidArgument);
	CHECK(code_of([&] { s.hpc->job_status("job-404"); }) == ErrorCode::NotFound);
	CHECK(s.hpc->list_jobs().empty());
}

TEST_CASE("push_data_to_job updates a running PERSISTENT job only") {
	Sim s;
	JobSpec spec = s.batch("archer2", {s.staged("archer2")});
	spec.kind = JobKind::Persistent;
	spec.emit_interval = 30ms;
	spec.emit_count = 2;
	const auto job = s.hpc->submit_job(spec);
	s.hpc->advance(30ms);
	REQUIRE(s.notes.size() == 1);
	const auto weather = s.staged("archer2", "new weather");
	s.hpc->push_data_to_job(job, weather);
	s.hpc->advance(30ms);
	REQUIRE(s.notes.size() == 3);
	const auto &inputs = s.notes[1].payload.at("inputs");
	CHECK(std::find(inputs.begin(), inputs.end(), Json(weather)) != inputs.end());
	CHECK(std::find(s.notes[0].payload.at("inputs").begin(), s.notes[0].payload.at("inputs").end(), Json(weather)) == s.notes[0].payload.at("inputs").end());

	CHECK(code_of([&] { s.hpc->push_data_to_job(job, weather); }) == ErrorCode::PreconditionFailed);
	const auto batch = s.hpc->submit_job(s.batch("archer2", {}));
	CHECK(code_of([&] { s.hpc->push_data_to_job(batch, weather); }) == ErrorCode::PreconditionFailed);
	const auto other = s.hpc->submit_job(spec);
	const auto elsewhere = s.data->register_data("w", "w", kLocalStore, "t");
	CHECK(code_of([&] { s.hpc->push_data_to_job(other, elsewhere); }) == ErrorCode::PreconditionFailed);
	CHECK(code_of([&] { s.hpc->push_data_to_job("job-404", weather); }) == ErrorCode::NotFound);
}

TEST_CASE("saturated machine queues jobs") {
	Sim s;
	std::vector<JobId> jobs;
	for (int i = 0; i < 3; ++i) {
		jobs.push_back(s.hpc->submit_job(s.batch("cirrus", {})));
	}
	CHECK(s.hpc->job_status(jobs[2]).status == JobStatus::Queued);
	CHECK(s.hpc->running_on("cirrus") == 2);
	s.hpc->advance(100ms);
	CHECK(s.hpc->job_status(jobs[0]).status == JobStatus::Completed);
	CHECK(s.hpc->job_status(jobs[2]).status == JobStatus::Running);
	s.hpc->advance(100ms);
	CHECK(s.hpc->job_status(jobs[2]).status == JobStatus::Completed);
	CHECK(s.notes.size() == 3);
}

TEST_CASE("property: running jobs never exceed machine capacity") {
	for (int trial = 0; trial < 10; ++trial) {
		Sim s;
		std::mt19937 rng(static_cast<unsigned>(trial));
		for (int i = 0; i < 40; ++i) {
			const auto &m = s.config.machines[rng() % s.config.machines.size()];
			auto spec = s.batch(m.name, {}, SimDuration(1000 * (1 + rng() % 80)));
			if (rng() % 3 == 0) {
				spec.kind = JobKind::Persistent;
				spec.emit_interval = SimDuration(1000 * (1 + rng() % 20));
				spec.emit_count = 1 + static_cast<int>(rng() % 4);
			}
			s.hpc->submit_job(spec);
			s.hpc->advance(SimDuration(1000 * (rng() % 15)));
		}
		s.hpc->advance(10s);
		const auto jobs = s.hpc->list_jobs();
		std::size_t completions = 0;
		for (const auto &n : s.notes) {
			completions += n.payload.at("event") == "completion";
		}
		CHECK(completions == jobs.size());
		for (const auto &m : s.config.machines) {
			std::vector<std::pair<SimDuration, int>> edges;
			for (const auto &j : jobs) {
				REQUIRE(j.status == JobStatus::Completed);
				if (j.machine == m.name) {
					edges.emplace_back(*j.started_at, +1);
					edges.emplace_back(*j.finished_at, -1);
				}
			}
			// Ends sort before starts at the same instant.
			std::sort(edges.begin(), edges.end());
			int running = 0;
			for (const auto &[t, d] : edges) {
				running += d;
				CHECK(running <= m.max_concurrent_jobs);
			}
		}
	}
}

TEST_CASE("manual clock replays identical message sequences") {
	const auto run = [] {
		Sim s;
		std::map<std::string, int> order;
		for (int i = 0; i < 5; ++i) {
			auto spec = s.batch(i % 2 ? "archer2" : "cirrus", {}, SimDuration(10000 * (i + 1)));
			if (i == 3) {
				spec.kind = JobKind::Persistent;
				spec.emit_count = 2;
			}
			order[s.hpc->submit_job(spec)] = i;
		}
		s.hpc->advance(1s);
		std::vector<std::string> seq;
		for (auto n : s.notes) {
			// Job ids are random; compare by submission order.
			n.payload["job_id"] = order.at(n.payload.at("job_id").get<std::string>());
			seq.push_back(n.queue + " " + n.payload.dump());
		}
		return seq;
	};
	const auto a = run();
	CHECK(a.size() == 7);
	CHECK(a == run());
}

TEST_CASE("failure injection reports a FAILED completion") {
	auto config = default_sim_config();
	config.machines[0].failure_probability = 1.0;
	Sim s(config);
	const auto job = s.hpc->submit_job(s.batch(config.machines[0].name, {}));
	s.hpc->advance(1s);
	REQUIRE(s.notes.size() == 1);
	CHECK(s.notes[0].payload.at("status") == "FAILED");
	CHECK(s.hpc->job_status(job).status == JobStatus::Failed);
	CHECK(s.hpc->job_status(job).outputs.empty());
}

TEST_CASE("wall clock driver fires job events on its own") {
	TempDir dir;
	SimClock clock(SimClock::Mode::Wall);
	auto config = default_sim_config();
	DataManager dm(dir.path(), names_of(config), config.transfer_rate, clock);
	std::mutex mutex;
	std::vector<JobNotification> notes;
	HpcSimulator hpc(config, dm, clock, [&](const JobNotification &n) {
		std::lock_guard lock(mutex);
		notes.push_back(n);
	});
	hpc.start();
	JobSpec spec;
	spec.machine = "archer2";
	spec.nominal_runtime = 30ms;
	spec.notify_queue = "done";
	const auto t0 = std::chrono::steady_clock::now();
	const auto job = hpc.submit_job(spec);
	CHECK(surgeflow::testing::wait_until([&] { return hpc.job_status(job).status == JobStatus::Completed; }, 2s));
	CHECK(std::chrono::steady_clock::now() - t0 >= 30ms);
	hpc.stop();
	std::lock_guard lock(mutex);
	CHECK(notes.size() == 1);
	CHECK(code_of([&] { hpc.advance(1ms); }) == ErrorCode::PreconditionFailed);
}
