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

#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace surgeflow::service {

class Engine;

// Serves Engine::handle over HTTP on a background thread.
class HttpServer {
public:
	explicit HttpServer(Engine &engine);
	~HttpServer();

	// Throws Io when the address cannot be bound. Returns the bound port.
	int listen(const std::string &host, int port);
	void stop();
	int port() const noexcept {
		return port_;
	}

private:
	Engine &engine_;
	std::unique_ptr<httplib::Server> server_;
	std::thread thread_;
	int port_ = 0;
};

} // namespace surgeflow::service
