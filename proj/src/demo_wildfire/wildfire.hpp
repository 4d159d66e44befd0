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

#include <chrono>
#include <string>

#include "edi/edi.hpp"
#include "simenv/data_manager.hpp"
#include "simenv/hpc_simulator.hpp"
#include "wfcore/runtime.hpp"

namespace surgeflow::demo_wildfire {

inline constexpr const char *kKind = "wildfire";
inline constexpr const char *kTerrainItem = "terrain_global";
inline constexpr const char *kDefaultForecastSource = "mock://global-forecast";

namespace stage {
inline constexpr const char *kInit = "wildfire_init";
inline constexpr const char *kHotspotIngest = "hotspot_ingest";
inline constexpr const char *kModis = "modis_extract";
inline constexpr const char *kViirs = "viirs_extract";
inline constexpr const char *kGround = "ground_format";
inline constexpr const char *kGlobalForecast = "global_forecast_fetch";
inline constexpr const char *kLocalForecastJob = "local_forecast_job";
inline constexpr const char *kLocalForecastDone = "local_forecast_done";
inline constexpr const char *kTerrain = "terrain_extract";
inline constexpr const char *kConfigUpdate = "config_update";
inline constexpr const char *kJoin = "wfa_join";
inline constexpr const char *kDispatch = "wfa_dispatch";
inline constexpr const char *kForecastResult = "forecast_result";
inline constexpr const char *kCompleted = "wfa_completed";
} // namespace stage

enum class ForecastKind {
	Perimeter,
	ExposureShed,
};

enum class HotspotSource {
	Modis,
	Viirs,
	Ground,
};

const char *to_string(ForecastKind kind);
const char *to_string(HotspotSource source);
ForecastKind forecast_kind_from_string(const std::string &s);
HotspotSource hotspot_source_from_string(const std::string &s);

struct AreaOfInterest {
	double min_lat = 41.0;
	double max_lat = 42.0;
	double min_lon = 1.0;
	double max_lon = 2.0;
};

// Per-incident configuration, taken from the initial payload and updated by
// documents pushed to the incident's config endpoint.
struct WildfireConfig {
	ForecastKind forecast_kind = ForecastKind::Perimeter;
	HotspotSource hotspot_source = HotspotSource::Modis;
	AreaOfInterest area_of_interest;
	std::string forecast_source = kDefaultForecastSource;
	std::chrono::milliseconds forecast_poll_interval {200};
	std::chrono::milliseconds local_forecast_runtime {50};
	std::chrono::milliseconds wfa_emit_interval {50};
	int wfa_emit_count = 3;
};

// Fields absent from doc keep their value in base. Enum names are matched
// case-insensitively.
WildfireConfig config_from_json(const Json &doc, const WildfireConfig &base = {});
Json to_json(const WildfireConfig &config);

struct WildfireServices {
	wfcore::Runtime &runtime;
	simenv::DataManager &data;
	simenv::HpcSimulator &hpc;
	edi::ExternalDataInterface &edi;
};

struct WildfireOptions {
	std::string machine = "archer2";
};

wfcore::WorkflowDefinition build_wildfire_workflow(WildfireServices services, WildfireOptions options = {});

// Registers the static global terrain item when the catalog lacks one.
void ensure_static_data(simenv::DataManager &data);

std::string hotspot_path(const IncidentId &incident);
std::string config_path(const IncidentId &incident);

} // namespace surgeflow::demo_wildfire
