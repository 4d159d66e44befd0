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
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "surgeflow/surgeflow.h"

using Json = nlohmann::ordered_json;

namespace {

sf_engine *g_serving = nullptr;

void on_signal(int) {
	sf_engine_request_stop(g_serving);
}

struct Failure {
	std::string message;
};

void check(sf_status status, const std::string &what) {
	if (status != SF_OK) {
		throw Failure {what + ": " + sf_last_error()};
	}
}

std::string take(char *s) {
	std::string out = s ? s : "";
	sf_string_free(s);
	return out;
}

// Closes the engine on every exit path.
class EngineHandle {
public:
	explicit EngineHandle(const Json &config) {
		check(sf_engine_open(config.dump().c_str(), &engine_), "cannot open engine");
	}
	~EngineHandle() {
		sf_engine_close(engine_);
	}
	EngineHandle(const EngineHandle &) = delete;
	EngineHandle &operator=(const EngineHandle &) = delete;

	sf_engine *get() const {
		return engine_;
	}

private:
	sf_engine *engine_ = nullptr;
};

// Where management requests go: a serving engine, or a data directory opened
// for inspection.
struct Target {
	std::string url;
	std::string data_dir;
};

struct Response {
	int status = 0;
	Json body;
};

Response request(const Target &target, const std::string &method, const std::string &path, const std::string &body = {}) {
	int status = 0;
	char *out = nullptr;
	if (!target.data_dir.empty()) {
		EngineHandle engine(Json {{"data_dir", target.data_dir}, {"inspect_only", true}});
		check(sf_engine_request(engine.get(), method.c_str(), path.c_str(), body.data(), body.size(), &status, &out),
			"request failed");
	} else {
		check(sf_http_request(target.url.c_str(), method.c_str(), path.c_str(), body.data(), body.size(), &status, &out),
			"request failed");
	}
	Response r {status, Json::parse(take(out))};
	if (r.status >= 400) {
		throw Failure {r.body.value("error", "request failed with HTTP " + std::to_string(r.status))};
	}
	return r;
}

std::string cell(const Json &v) {
	if (v.is_null()) {
		return "-";
	}
	if (v.is_string()) {
		return v.get<std::string>();
	}
	if (v.is_number_float()) {
		char buf[32];
		std::snprintf(buf, sizeof(buf), "%.1f", v.get<double>());
		return buf;
	}
	return v.dump();
}

void print_table(const Json &rows, const std::vector<std::string> &columns) {
	std::vector<std::size_t> width;
	for (const auto &c : columns) {
		width.push_back(c.size());
	}
	for (const auto &row : rows) {
		for (std::size_t i = 0; i < columns.size(); ++i) {
			width[i] = std::max(width[i], cell(row.value(columns[i], Json())).size());
		}
	}
	const auto line = [&](const std::function<std::string(std::size_t)> &text) {
		std::string out;
		for (std::size_t i = 0; i < columns.size(); ++i) {
			auto t = text(i);
			t.resize(width[i], ' ');
			out += t;
			out += i + 1 < columns.size() ? "  " : "";
		}
		while (!out.empty() && out.back() == ' ') {
			out.pop_back();
		}
		std::cout << out << "\n";
	};
	line([&](std::size_t i) { return columns[i]; });
	for (const auto &row : rows) {
		line([&](std::size_t i) { return cell(row.value(columns[i], Json())); });
	}
}

std::string render_graph(const Json &graph) {
	char *text = nullptr;
	check(sf_render_task_graph(graph.dump().c_str(), &text), "cannot render task graph");
	return take(text);
}

void print_detail(const Json &detail) {
	const auto &incident = detail.at("incident");
	std::cout << "incident  " << cell(incident.at("incident_id")) << "\n"
			  << "kind      " << cell(incident.at("workflow_kind")) << "\n"
			  << "label     " << cell(incident.at("label")) << "\n"
			  << "status    " << cell(incident.at("status")) << "\n"
			  << "cleared   " << (incident.at("cleared_timestamp").is_null() ? "no" : "yes") << "\n\n"
			  << "task graph\n"
			  << render_graph(detail.at("task_graph"));
	if (!detail.at("statistics").empty()) {
		std::cout << "\n";
		print_table(detail.at("statistics"),
			{"queue", "count", "mean_wait_ms", "max_wait_ms", "mean_processing_ms", "max_processing_ms"});
	}
}

int run_serve(const Json &config) {
	EngineHandle engine(config);
	check(sf_engine_start(engine.get()), "cannot start engine");
	int port = 0;
	check(sf_engine_serve(engine.get(), &port), "cannot serve");
	g_serving = engine.get();
	std::signal(SIGINT, on_signal);
	std::signal(SIGTERM, on_signal);
	std::cout << "surgeflow " << sf_version() << " listening on " << config.value("host", "127.0.0.1") << ":" << port
			  << std::endl;
	int stopped = 0;
	check(sf_engine_wait(engine.get(), -1, &stopped), "wait failed");
	std::cout << "shutting down" << std::endl;
	check(sf_engine_stop(engine.get(), 1), "shutdown failed");
	g_serving = nullptr;
	return 0;
}

int run_demo(const Json &config, const Json &options, bool as_json) {
	EngineHandle engine(config);
	check(sf_engine_start(engine.get()), "cannot start engine");
	char *out = nullptr;
	check(sf_demo_wildfire(engine.get(), options.dump().c_str(), &out), "demo failed");
	const auto result = Json::parse(take(out));
	if (as_json) {
		std::cout << result.dump(2) << "\n";
		return 0;
	}
	std::cout << "incident " << cell(result.at("incident_id")) << " completed in " << cell(result.at("elapsed_ms"))
			  << " ms with " << result.at("forecast_results").get<int>() << " forecast results\n\n"
			  << result.at("task_graph_text").get<std::string>();
	return 0;
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app {"SurgeFlow urgent workflow engine"};
	app.require_subcommand(1);
	app.fallthrough();
	app.set_help_all_flag("--help-all", "Show help for every subcommand");

	std::string log_level;
	app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

	std::optional<std::string> data_dir;
	std::optional<int> workers;
	std::optional<int> port;
	std::optional<std::string> host;
	std::optional<std::string> machines;
	auto *serve = app.add_subcommand("serve", "Run the engine and its HTTP API");
	serve->add_option("--data-dir", data_dir, "Data directory (SURGEFLOW_DATA_DIR, default ./data)");
	serve->add_option("--workers", workers, "Worker threads (SURGEFLOW_WORKERS, default 4)")->check(CLI::PositiveNumber);
	serve->add_option("--port", port, "HTTP port, 0 for any free port (default 8080)")->check(CLI::Range(0, 65535));
	serve->add_option("--host", host, "HTTP bind address (default 127.0.0.1)");
	serve->add_option("--machines", machines, "JSON machine roster for the simulated HPC environment")
		->check(CLI::ExistingFile);

	auto *demo = app.add_subcommand("demo", "Run a demonstration scenario");
	demo->require_subcommand(1);
	demo->fallthrough();
	std::string hotspot_source = "MODIS";
	std::string forecast_kind = "PERIMETER";
	bool demo_json = false;
	auto *wildfire = demo->add_subcommand("wildfire", "Run one wildfire incident end to end and print its task graph");
	wildfire->add_option("--hotspot-source", hotspot_source, "MODIS, VIIRS or GROUND")->capture_default_str();
	wildfire->add_option("--forecast-kind", forecast_kind, "PERIMETER or EXPOSURE_SHED")->capture_default_str();
	wildfire->add_option("--data-dir", data_dir, "Data directory (SURGEFLOW_DATA_DIR, default ./data)");
	wildfire->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
	wildfire->add_flag("--json", demo_json, "Print the full result as JSON");

	Target target {"http://127.0.0.1:8080", ""};
	bool as_json = false;
	const auto add_target = [&](CLI::App *cmd) {
		auto *url = cmd->add_option("--url", target.url, "Engine API base URL")->capture_default_str();
		cmd->add_option("--data-dir", target.data_dir, "Read a data directory directly instead of calling the API")
			->excludes(url);
		cmd->add_flag("--json", as_json, "Print raw JSON");
	};

	auto *incidents = app.add_subcommand("incidents", "List, inspect or cancel incidents");
	incidents->require_subcommand(1);
	incidents->fallthrough();
	auto *list = incidents->add_subcommand("list", "List incidents");
	add_target(list);
	std::string incident_id;
	auto *show = incidents->add_subcommand("show", "Show an incident and its task graph");
	show->add_option("ID", incident_id, "Incident id")->required();
	add_target(show);
	auto *cancel = incidents->add_subcommand("cancel", "Cancel an active incident");
	cancel->add_option("ID", incident_id, "Incident id")->required();
	cancel->add_option("--url", target.url, "Engine API base URL")->capture_default_str();

	std::string kind;
	auto *stats = app.add_subcommand("stats", "Per-stage statistics of a workflow kind");
	stats->add_option("KIND", kind, "Workflow kind")->required();
	add_target(stats);

	try {
		app.parse(argc, argv);
	} catch (const CLI::CallForHelp &e) {
		return app.exit(e);
	} catch (const CLI::CallForAllHelp &e) {
		return app.exit(e);
	} catch (const CLI::ParseError &e) {
		app.exit(e);
		std::cerr << "\n" << app.help();
		return 2;
	}

	try {
		if (!log_level.empty()) {
			check(sf_set_log_level(log_level.c_str()), "bad --log-level");
		}
		Json config = Json::object();
		if (data_dir) {
			config["data_dir"] = *data_dir;
		}
		if (workers) {
			config["workers"] = *workers;
		}
		if (port) {
			config["port"] = *port;
		}
		if (host) {
			config["host"] = *host;
		}
		if (machines) {
			config["machines_file"] = *machines;
		}

		if (serve->parsed()) {
			return run_serve(config);
		}
		if (wildfire->parsed()) {
			return run_demo(config, Json {{"hotspot_source", hotspot_source}, {"forecast_kind", forecast_kind}}, demo_json);
		}
		if (list->parsed()) {
			const auto r = request(target, "GET", "/api/incidents");
			if (as_json) {
				std::cout << r.body.dump(2) << "\n";
			} else {
				print_table(r.body, {"incident_id", "workflow_kind", "status", "outstanding_messages", "label"});
			}
			return 0;
		}
		if (show->parsed()) {
			const auto r = request(target, "GET", "/api/incidents/" + incident_id);
			if (as_json) {
				std::cout << r.body.dump(2) << "\n";
			} else {
				print_detail(r.body);
			}
			return 0;
		}
		if (cancel->parsed()) {
			const auto r = request(target, "POST", "/api/incidents/" + incident_id + "/cancel");
			std::cout << cell(r.body.at("incident_id")) << " " << cell(r.body.at("status")) << "\n";
			return 0;
		}
		if (stats->parsed()) {
			const auto r = request(target, "GET", "/api/workflows/" + kind + "/stats");
			if (as_json) {
				std::cout << r.body.dump(2) << "\n";
			} else {
				print_table(r.body.at("stages"),
					{"queue", "count", "mean_wait_ms", "max_wait_ms", "mean_processing_ms", "max_processing_ms"});
			}
			return 0;
		}
	} catch (const Failure &f) {
		std::cerr << "error: " << f.message << "\n";
		return 1;
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	}
	return 2;
}
