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
#include "service/http_server.hpp"

#include <httplib.h>

#include "common/error.hpp"
#include "common/log.hpp"
#include "edi/sources.hpp"
#include "service/engine.hpp"

namespace surgeflow::service {

HttpServer::HttpServer(Engine &engine) :
	engine_(engine),
	server_(std::make_unique<httplib::Server>()) {
	const auto forward = [this](const httplib::Request &req, httplib::Response &res) {
		ApiRequest request;
		request.method = req.method;
		request.path = req.path;
		request.body = req.body;
		for (const auto &[k, v] : req.headers) {
			request.headers[edi::to_lower(k)] = v;
		}
		const auto response = engine_.handle(request);
		res.status = response.status;
		res.set_content(response.body.dump(), "application/json");
	};
	server_->Get(".*", forward);
	server_->Post(".*", forward);
	server_->Put(".*", forward);
	server_->Delete(".*", forward);
	server_->Patch(".*", forward);
	// The library default adds SO_REUSEPORT, which lets a second engine bind
	// the same port silently.
	server_->set_socket_options([](socket_t sock) {
		int yes = 1;
		setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
	});
	server_->set_payload_max_length(64 * 1024 * 1024);
}

HttpServer::~HttpServer() {
	stop();
}

int HttpServer::listen(const std::string &host, int port) {
	if (thread_.joinable()) {
		fail(ErrorCode::Conflict, "HTTP server is already listening");
	}
	if (port == 0) {
		port_ = server_->bind_to_any_port(host);
	} else {
		port_ = server_->bind_to_port(host, port) ? port : -1;
	}
	if (port_ <= 0) {
		fail(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
	}
	thread_ = std::thread([this] { server_->listen_after_bind(); });
	server_->wait_until_ready();
	log().info("HTTP API listening on {}:{}", host, port_);
	return port_;
}

void HttpServer::stop() {
	if (thread_.joinable()) {
		server_->stop();
		thread_.join();
	}
}

} // namespace surgeflow::service
