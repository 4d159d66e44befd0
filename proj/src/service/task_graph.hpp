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

#include <string>
#include <vector>

#include "common/json.hpp"
#include "statestore/types.hpp"

namespace surgeflow::service {

// Nodes are the incident's messages; an edge joins a message to the message
// whose handler sent it. Edges whose parent is not among the nodes are left
// out.
Json build_task_graph(const std::vector<statestore::MessageLogEntry> &messages);

// Indented tree, one line per task, children in send order.
std::string render_task_graph(const Json &graph);

} // namespace surgeflow::service
