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
#include "demo_wildfire/wildfire.hpp"

#include <algorithm>
#include <cctype>

#include "common/error.hpp"
#include "wfcore/handler_context.hpp"

namespace surgeflow::demo_wildfire {

using wfcore::HandlerContext;

namespace {

std::string upper(std::string s) {
	std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
		return static_cast<char>(std::toupper(c));
	});
	return s;
}

std::chrono::milliseconds millis_field(const Json &doc, const char *key, std::chrono::milliseconds fallback) {
	if (!doc.contains(key)) {
		return fallback;
	}
	const auto v = doc.at(key).get<std::int64_t>();
	if (v <= 0) {
		fail(ErrorCode::InvalidArgument, std::string(key) + " must be positive");
	}
	return std::chrono::milliseconds(v);
}

WildfireConfig current_config(const HandlerContext &ctx) {
	auto records = ctx.retrieve(stage::kConfigUpdate);
	if (records.empty()) {
		records = ctx.retrieve(stage::kInit);
	}
	if (records.empty()) {
		fail(ErrorCode::PreconditionFailed, "incident " + ctx.incident_id() + " has no configuration");
	}
	return config_from_json(records.back().payload);
}

DataId data_id_of(const HandlerContext &ctx) {
	if (!ctx.payload().contains("data_id")) {
		fail(ErrorCode::InvalidArgument, "message on " + ctx.queue() + " carries no data_id");
	}
	return ctx.payload().at("data_id").get<DataId>();
}

Json aoi_json(const AreaOfInterest &a) {
	return Json {{"min_lat", a.min_lat}, {"max_lat", a.max_lat}, {"min_lon", a.min_lon}, {"max_lon", a.max_lon}};
}

void register_endpoints(WildfireServices s, const IncidentId &incident, const WildfireConfig &config) {
	try {
		s.edi.register_push_endpoint(incident, hotspot_path(incident), stage::kHotspotIngest);
		s.edi.register_push_endpoint(incident, config_path(incident), stage::kConfigUpdate);
		s.edi.register_pull_endpoint(incident, config.forecast_source, config.forecast_poll_interval, stage::kGlobalForecast);
	} catch (...) {
		s.edi.deregister_incident(incident);
		throw;
	}
}

wfcore::Handler extract(WildfireServices s, const char *method) {
	return [s, method](HandlerContext &ctx) {
		const auto input = data_id_of(ctx);
		const auto raw = s.data.read(input);
		const auto config = current_config(ctx);
		Json position {
			{"method", method},
			{"input", input},
			{"input_bytes", raw.size()},
			{"area_of_interest", aoi_json(config.area_of_interest)},
		};
		const auto out = s.data.register_data("fire_position", position.dump(), simenv::kLocalStore, method);
		ctx.send(stage::kJoin, Json {{"source", "fire_position"}, {"data_id", out}, {"method", method}});
	};
}

} // namespace

const char *to_string(ForecastKind kind) {
	return kind == ForecastKind::Perimeter ? "PERIMETER" : "EXPOSURE_SHED";
}

const char *to_string(HotspotSource source) {
	switch (source) {
	case HotspotSource::Modis:
		return "MODIS";
	case HotspotSource::Viirs:
		return "VIIRS";
	case HotspotSource::Ground:
		return "GROUND";
	}
	return "?";
}

ForecastKind forecast_kind_from_string(const std::string &s) {
	const auto u = upper(s);
	if (u == "PERIMETER") {
		return ForecastKind::Perimeter;
	}
	if (u == "EXPOSURE_SHED") {
		return ForecastKind::ExposureShed;
	}
	fail(ErrorCode::InvalidArgument, "forecast_kind must be PERIMETER or EXPOSURE_SHED, not '" + s + "'");
}

HotspotSource hotspot_source_from_string(const std::string &s) {
	const auto u = upper(s);
	if (u == "MODIS") {
		return HotspotSource::Modis;
	}
	if (u == "VIIRS") {
		return HotspotSource::Viirs;
	}
	if (u == "GROUND") {
		return HotspotSource::Ground;
	}
	fail(ErrorCode::InvalidArgument, "hotspot_source must be MODIS, VIIRS or GROUND, not '" + s + "'");
}

WildfireConfig config_from_json(const Json &doc, const WildfireConfig &base) {
	if (doc.is_null()) {
		return base;
	}
	if (!doc.is_object()) {
		fail(ErrorCode::InvalidArgument, "wildfire configuration must be a JSON object");
	}
	WildfireConfig c = base;
	try {
		if (doc.contains("forecast_kind")) {
			c.forecast_kind = forecast_kind_from_string(doc.at("forecast_kind").get<std::string>());
		}
		if (doc.contains("hotspot_source")) {
			c.hotspot_source = hotspot_source_from_string(doc.at("hotspot_source").get<std::string>());
		}
		if (doc.contains("area_of_interest")) {
			const auto &a = doc.at("area_of_interest");
			c.area_of_interest.min_lat = a.value("min_lat", c.area_of_interest.min_lat);
			c.area_of_interest.max_lat = a.value("max_lat", c.area_of_interest.max_lat);
			c.area_of_interest.min_lon = a.value("min_lon", c.area_of_interest.min_lon);
			c.area_of_interest.max_lon = a.value("max_lon", c.area_of_interest.max_lon);
		}
		c.forecast_source = doc.value("forecast_source", c.forecast_source);
		c.forecast_poll_interval = millis_field(doc, "forecast_poll_interval_ms", c.forecast_poll_interval);
		c.local_forecast_runtime = millis_field(doc, "local_forecast_runtime_ms", c.local_forecast_runtime);
		c.wfa_emit_interval = millis_field(doc, "wfa_emit_interval_ms", c.wfa_emit_interval);
		c.wfa_emit_count = doc.value("wfa_emit_count", c.wfa_emit_count);
	} catch (const Json::exception &e) {
		fail(ErrorCode::InvalidArgument, std::string("wildfire configuration: ") + e.what());
	}
	const auto &a = c.area_of_interest;
	if (!(a.min_lat < a.max_lat) || !(a.min_lon < a.max_lon)) {
		fail(ErrorCode::InvalidArgument, "area_of_interest must have min < max for latitude and longitude");
	}
	if (c.wfa_emit_count < 1) {
		fail(ErrorCode::InvalidArgument, "wfa_emit_count must be at least 1");
	}
	if (c.forecast_source.empty()) {
		fail(ErrorCode::InvalidArgument, "forecast_source must not be empty");
	}
	return c;
}

Json to_json(const WildfireConfig &c) {
	return Json {
		{"forecast_kind", to_string(c.forecast_kind)},
		{"hotspot_source", to_string(c.hotspot_source)},
		{"area_of_interest", aoi_json(c.area_of_interest)},
		{"forecast_source", c.forecast_source},
		{"forecast_poll_interval_ms", c.forecast_poll_interval.count()},
		{"local_forecast_runtime_ms", c.local_forecast_runtime.count()},
		{"wfa_emit_interval_ms", c.wfa_emit_interval.count()},
		{"wfa_emit_count", c.wfa_emit_count},
	};
}

std::string hotspot_path(const IncidentId &incident) {
	return "/incident/" + incident + "/hotspots";
}

std::string config_path(const IncidentId &incident) {
	return "/incident/" + incident + "/config";
}

void ensure_static_data(simenv::DataManager &data) {
	if (data.find_by_name(kTerrainItem)) {
		return;
	}
	Json terrain {{"kind", "digital elevation model"}, {"resolution_m", 90}, {"coverage", "global"}};
	data.register_data(kTerrainItem, terrain.dump(), simenv::kLocalStore, "static catalog");
}

wfcore::WorkflowDefinition build_wildfire_workflow(WildfireServices s, WildfireOptions options) {
	wfcore::WorkflowDefinition wf;
	wf.kind = kKind;
	wf.init_queue = stage::kInit;

	wf.check_payload = [](const Json &payload) { config_from_json(payload); };
	wf.on_init = [s](const wfcore::IncidentInit &init) {
		const auto config = config_from_json(init.initial_payload);
		s.runtime.store().persist_stage_data(init.incident_id, stage::kInit, to_json(config));
		register_endpoints(s, init.incident_id, config);
	};
	wf.on_resume = [s](const IncidentId &incident) {
		auto records = s.runtime.store().retrieve_stage_data(incident, stage::kConfigUpdate);
		if (records.empty()) {
			records = s.runtime.store().retrieve_stage_data(incident, stage::kInit);
		}
		if (records.empty()) {
			fail(ErrorCode::PreconditionFailed, "incident " + incident + " has no configuration");
		}
		register_endpoints(s, incident, config_from_json(records.back().payload));
	};

	wf.stages.push_back({stage::kInit, [s](HandlerContext &ctx) {
		const auto config = current_config(ctx);
		const auto item = s.data.register_data("config", to_json(config).dump(), simenv::kLocalStore, "incident start");
		ctx.send(stage::kConfigUpdate, Json {{"data_id", item}, {"initial", true}});
		ctx.send(stage::kTerrain, Json {{"area_of_interest", aoi_json(config.area_of_interest)}});
	}, false});

	wf.stages.push_back({stage::kHotspotIngest, [](HandlerContext &ctx) {
		const auto input = data_id_of(ctx);
		const auto config = current_config(ctx);
		const char *target = stage::kModis;
		switch (config.hotspot_source) {
		case HotspotSource::Modis:
			target = stage::kModis;
			break;
		case HotspotSource::Viirs:
			target = stage::kViirs;
			break;
		case HotspotSource::Ground:
			target = stage::kGround;
			break;
		}
		ctx.send(target, Json {{"data_id", input}, {"hotspot_source", to_string(config.hotspot_source)}});
	}, false});
	wf.stages.push_back({stage::kModis, extract(s, "modis-hotspot-extract"), false});
	wf.stages.push_back({stage::kViirs, extract(s, "viirs-hotspot-extract"), false});
	wf.stages.push_back({stage::kGround, extract(s, "ground-observation-format"), false});

	wf.stages.push_back({stage::kGlobalForecast, [s](HandlerContext &ctx) {
		Json doc {{"source", ctx.payload().value("source", "")}, {"metadata", ctx.payload().value("metadata", Json::object())}};
		const auto item = s.data.register_data("global_forecast", doc.dump(), simenv::kLocalStore, doc.at("source").get<std::string>());
		ctx.send(stage::kLocalForecastJob, Json {{"data_id", item}});
	}, false});

	wf.stages.push_back({stage::kLocalForecastJob, [s, options](HandlerContext &ctx) {
		const auto input = data_id_of(ctx);
		const auto config = current_config(ctx);
		s.data.move_data(input, options.machine);
		simenv::JobSpec spec;
		spec.name = "local-forecast";
		spec.machine = options.machine;
		spec.kind = simenv::JobKind::Batch;
		spec.inputs = {input};
		spec.nominal_runtime = config.local_forecast_runtime;
		spec.incident_id = ctx.incident_id();
		spec.notify_queue = stage::kLocalForecastDone;
		spec.parent_message_id = ctx.message_id();
		const auto job = s.hpc.submit_job(spec);
		ctx.persist(Json {{"job_id", job}, {"input", input}});
	}, false});

	wf.stages.push_back({stage::kLocalForecastDone, [](HandlerContext &ctx) {
		const auto status = ctx.payload().value("status", "");
		if (status != "COMPLETED") {
			fail(ErrorCode::Internal, "local forecast job " + ctx.payload().value("job_id", "?") + " ended " + status);
		}
		ctx.send(stage::kJoin, Json {{"source", "weather"}, {"data_id", ctx.payload().at("output_data_id")}});
	}, false});

	wf.stages.push_back({stage::kTerrain, [s](HandlerContext &ctx) {
		const auto global = s.data.find_by_name(kTerrainItem);
		if (!global) {
			fail(ErrorCode::NotFound, std::string("static data item ") + kTerrainItem + " is missing");
		}
		const auto config = current_config(ctx);
		Json extract {{"from", global->data_id}, {"area_of_interest", aoi_json(config.area_of_interest)}};
		const auto item = s.data.register_data("terrain", extract.dump(), simenv::kLocalStore, "terrain extract");
		ctx.send(stage::kJoin, Json {{"source", "terrain"}, {"data_id", item}});
	}, false});

	wf.stages.push_back({stage::kConfigUpdate, [s](HandlerContext &ctx) {
		const auto input = data_id_of(ctx);
		Json doc;
		try {
			doc = Json::parse(s.data.read(input));
		} catch (const Json::exception &e) {
			fail(ErrorCode::InvalidArgument, std::string("configuration document is not JSON: ") + e.what());
		}
		const auto merged = config_from_json(doc, current_config(ctx));
		ctx.persist(to_json(merged));
		DataId item = input;
		if (!ctx.payload().value("initial", false)) {
			item = s.data.register_data("config", to_json(merged).dump(), simenv::kLocalStore, "config update");
		}
		ctx.send(stage::kJoin, Json {{"source", "config"}, {"data_id", item}});
	}, false});

	wf.stages.push_back({stage::kJoin, [](HandlerContext &ctx) {
		static const wfcore::JoinSpec spec {
			{"fire_position", "weather", "terrain", "config"},
			{"terrain", "config"},
			{"fire_position", "weather", "config"},
		};
		const auto tag = ctx.payload().at("source").get<std::string>();
		if (auto inputs = ctx.join_collect(tag, spec, ctx.payload().at("data_id"))) {
			ctx.send(stage::kDispatch, Json {{"inputs", *inputs}});
		}
	}, true});

	wf.stages.push_back({stage::kDispatch, [s, options](HandlerContext &ctx) {
		std::vector<DataId> inputs;
		for (const auto &[tag, id] : ctx.payload().at("inputs").items()) {
			inputs.push_back(id.get<DataId>());
		}
		std::optional<JobId> previous;
		for (const auto &r : ctx.retrieve()) {
			if (r.payload.value("action", "") == "submit") {
				previous = r.payload.at("job_id").get<JobId>();
			}
		}
		std::optional<simenv::Job> running;
		if (previous) {
			// Jobs do not survive an engine restart.
			const auto jobs = s.hpc.jobs_for_incident(ctx.incident_id());
			const auto it = std::find_if(jobs.begin(), jobs.end(), [&](const auto &j) { return j.job_id == *previous; });
			if (it != jobs.end()) {
				running = *it;
			}
		}
		if (running) {
			const auto &job = *running;
			if (job.status == simenv::JobStatus::Running && job.kind == simenv::JobKind::Persistent) {
				std::vector<DataId> pushed;
				try {
					for (const auto &id : inputs) {
						if (std::find(job.input_data.begin(), job.input_data.end(), id) != job.input_data.end()) {
							continue;
						}
						s.data.move_data(id, job.machine);
						s.hpc.push_data_to_job(job.job_id, id);
						pushed.push_back(id);
					}
					ctx.persist(Json {{"action", "update"}, {"job_id", job.job_id}, {"pushed", pushed}});
					return;
				} catch (const Error &e) {
					// The job finished after the status check; start a new one.
					if (e.code() != ErrorCode::PreconditionFailed) {
						throw;
					}
				}
			}
		}
		const auto config = current_config(ctx);
		for (const auto &id : inputs) {
			s.data.move_data(id, options.machine);
		}
		simenv::JobSpec spec;
		spec.name = "wfa";
		spec.machine = options.machine;
		spec.kind = simenv::JobKind::Persistent;
		spec.inputs = inputs;
		spec.emit_interval = config.wfa_emit_interval;
		spec.emit_count = config.wfa_emit_count;
		spec.incident_id = ctx.incident_id();
		spec.notify_queue = stage::kForecastResult;
		spec.completion_queue = stage::kCompleted;
		spec.parent_message_id = ctx.message_id();
		const auto job = s.hpc.submit_job(spec);
		ctx.persist(Json {{"action", "submit"}, {"job_id", job}});
	}, true});

	wf.stages.push_back({stage::kForecastResult, [s](HandlerContext &ctx) {
		const auto output = data_id_of(ctx);
		std::optional<ForecastKind> mode;
		const auto &inputs = ctx.payload().at("inputs");
		for (auto it = inputs.rbegin(); it != inputs.rend() && !mode; ++it) {
			const auto item = s.data.find(it->get<DataId>());
			if (item && item->name == "config") {
				mode = config_from_json(Json::parse(s.data.read(item->data_id))).forecast_kind;
			}
		}
		if (!mode) {
			mode = current_config(ctx).forecast_kind;
		}
		Json result {
			{"mode", to_string(*mode)},
			{"wfa_output", output},
			{"index", ctx.payload().value("index", 0)},
		};
		const auto item = s.data.register_data(
			*mode == ForecastKind::Perimeter ? "fire_perimeter" : "exposure_shed", result.dump(),
			simenv::kLocalStore, "forecast result");
		ctx.persist(Json {
			{"mode", to_string(*mode)},
			{"data_id", item},
			{"job_id", ctx.payload().value("job_id", "")},
			{"index", ctx.payload().value("index", 0)},
		});
	}, false});

	wf.stages.push_back({stage::kCompleted, [](HandlerContext &ctx) {
		const auto status = ctx.payload().value("status", "");
		if (status != "COMPLETED") {
			fail(ErrorCode::Internal, "simulation job " + ctx.payload().value("job_id", "?") + " ended " + status);
		}
		ctx.persist(Json {{"job_id", ctx.payload().value("job_id", "")}, {"status", status}});
	}, false});

	return wf;
}

} // namespace surgeflow::demo_wildfire
