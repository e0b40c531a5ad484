#include "modelmesh/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "modelmesh/bytes.hpp"
#include "modelmesh/discovery.hpp"
#include "modelmesh/errors.hpp"
#include "modelmesh/log.hpp"

namespace modelmesh {

namespace {

bool read_exact(int fd, uint8_t* buf, size_t len) {
    size_t got = 0;
    while (got < len) {
        const ssize_t n = ::recv(fd, buf + got, len - got, 0);
        if (n <= 0) return false;
        got += static_cast<size_t>(n);
    }
    return true;
}

bool write_all(int fd, const uint8_t* buf, size_t len) {
    size_t sent = 0;
    while (sent < len) {
        const ssize_t n = ::send(fd, buf + sent, len - sent, MSG_NOSIGNAL);
        if (n <= 0) return false;
        sent += static_cast<size_t>(n);
    }
    return true;
}

bool write_frame(int fd, const nlohmann::json& j) {
    // Error messages can quote raw frame bytes; replace invalid UTF-8 rather
    // than letting dump() throw inside the server thread.
    const std::string body =
        j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    const uint32_t len = static_cast<uint32_t>(body.size());
    uint8_t header[4] = {uint8_t(len >> 24), uint8_t(len >> 16), uint8_t(len >> 8), uint8_t(len)};
    if (!write_all(fd, header, 4)) return false;
    return write_all(fd, reinterpret_cast<const uint8_t*>(body.data()), body.size());
}

nlohmann::json error_response(const std::string& request_id, const std::string& code,
                              const std::string& message) {
    return {{"v", kProtocolVersion},
            {"request_id", request_id},
            {"ok", false},
            {"error", {{"code", code}, {"message", message}}}};
}

nlohmann::json ok_response(const std::string& request_id, nlohmann::json result) {
    return {{"v", kProtocolVersion},
            {"request_id", request_id},
            {"ok", true},
            {"result", std::move(result)}};
}

Model model_from_b64(const nlohmann::json& payload) {
    const std::string b64 = payload.at("model_b64").get<std::string>();
    return deserialize_model(base64_decode(b64));
}

int open_listener(const std::string& host, uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port_str = std::to_string(port);
    if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), port_str.c_str(), &hints, &res) != 0)
        throw IoError("cannot resolve " + host);
    int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
        ::freeaddrinfo(res);
        throw IoError("socket() failed");
    }
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 16) != 0) {
        ::freeaddrinfo(res);
        ::close(fd);
        throw IoError("cannot bind " + host + ":" + port_str);
    }
    ::freeaddrinfo(res);
    return fd;
}

int connect_to(const std::string& host, uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0)
        throw IoError("cannot resolve " + host);
    int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
        ::freeaddrinfo(res);
        throw IoError("socket() failed");
    }
    if (::connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
        ::freeaddrinfo(res);
        ::close(fd);
        throw IoError("cannot connect to " + host + ":" + std::to_string(port));
    }
    ::freeaddrinfo(res);
    return fd;
}

}  // namespace

nlohmann::json VaultService::handle(const nlohmann::json& request) const {
    std::string request_id;
    try {
        if (!request.is_object()) throw FormatError("request must be a JSON object");
        request_id = request.value("request_id", "");
        const uint32_t v = request.at("v").get<uint32_t>();
        if (v != kProtocolVersion)
            throw FormatError("unsupported protocol version " + std::to_string(v));
        const std::string op = request.at("op").get<std::string>();
        const nlohmann::json& payload =
            request.contains("payload") ? request.at("payload") : nlohmann::json::object();

        if (op == "store") {
            const Model model = model_from_b64(payload);
            const std::string owner = payload.at("owner").get<std::string>();
            const auto tags = payload.value("tags", std::vector<std::string>{});
            const double stored_at = payload.value("stored_at", 0.0);
            const ModelId id = vault_.store(model, owner, tags, stored_at);
            return ok_response(request_id, {{"id", id}});
        }
        if (op == "fetch") {
            const ModelId id = payload.at("id").get<std::string>();
            const Model model = vault_.fetch(id);
            return ok_response(request_id,
                               {{"model_b64", base64_encode(serialize_model(model))}});
        }
        if (op == "query") {
            Query query = parse_query(payload.at("text").get<std::string>());
            if (payload.contains("exclude_owner") && !payload.at("exclude_owner").is_null())
                query.exclude_owner = payload.at("exclude_owner").get<std::string>();
            const auto result = match(query, vault_.list_entries());
            if (!result) return ok_response(request_id, {{"found", false}});
            return ok_response(request_id, {{"found", true},
                                            {"id", result->id},
                                            {"score", result->score},
                                            {"satisfied", result->satisfied}});
        }
        if (op == "list") {
            EntryFilter filter;
            if (payload.contains("owner") && !payload.at("owner").is_null())
                filter.owner = payload.at("owner").get<std::string>();
            if (payload.contains("tag") && !payload.at("tag").is_null())
                filter.tag = payload.at("tag").get<std::string>();
            return ok_response(request_id,
                               {{"entries", nlohmann::json(vault_.list_entries(filter))}});
        }
        if (op == "eval") {
            const Model model = model_from_b64(payload);
            return ok_response(request_id,
                               {{"report", vault_.evaluate_on_registration(model)}});
        }
        throw FormatError("unknown op '" + op + "'");
    } catch (const Error& e) {
        return error_response(request_id, e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
        return error_response(request_id, "format", e.what());
    } catch (const std::exception& e) {
        return error_response(request_id, "internal", e.what());
    }
}

uint16_t VaultService::start(const std::string& host, uint16_t port) {
    listen_fd_ = open_listener(host, port);
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    running_.store(true);
    accept_thread_ = std::thread([this] { accept_loop(); });
    const uint16_t bound = ntohs(addr.sin_port);
    log_info("vault service listening on port " + std::to_string(bound));
    return bound;
}

void VaultService::accept_loop() {
    while (running_.load()) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;  // listener closed by stop()
        std::lock_guard lock(conn_mutex_);
        conn_fds_.push_back(fd);
        conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void VaultService::serve_connection(int fd) {
    while (running_.load()) {
        uint8_t header[4];
        if (!read_exact(fd, header, 4)) break;
        const uint32_t len = (uint32_t(header[0]) << 24) | (uint32_t(header[1]) << 16) |
                             (uint32_t(header[2]) << 8) | uint32_t(header[3]);
        if (len > kMaxFrameBytes) {
            // Cannot trust the stream past an oversize announcement.
            write_frame(fd, error_response("", "format",
                                           "frame of " + std::to_string(len) +
                                               " bytes exceeds the 64 MiB cap"));
            break;
        }
        std::vector<uint8_t> body(len);
        if (!read_exact(fd, body.data(), len)) break;
        nlohmann::json request;
        nlohmann::json response;
        try {
            request = nlohmann::json::parse(body.begin(), body.end());
            response = handle(request);
        } catch (const nlohmann::json::exception& e) {
            response = error_response("", "format", std::string("bad frame: ") + e.what());
        }
        if (!write_frame(fd, response)) break;
    }
    ::close(fd);
}

void VaultService::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(conn_mutex_);
        for (const int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
        threads.swap(conn_threads_);
        conn_fds_.clear();
    }
    for (auto& t : threads) t.join();
    listen_fd_ = -1;
}

VaultService::~VaultService() { stop(); }

WireClient::WireClient(const std::string& host, uint16_t port) : fd_(connect_to(host, port)) {}

WireClient::~WireClient() {
    if (fd_ >= 0) ::close(fd_);
}

void WireClient::send_raw(const std::vector<uint8_t>& frame_body) {
    const uint32_t len = static_cast<uint32_t>(frame_body.size());
    uint8_t header[4] = {uint8_t(len >> 24), uint8_t(len >> 16), uint8_t(len >> 8), uint8_t(len)};
    if (!write_all(fd_, header, 4) ||
        !write_all(fd_, frame_body.data(), frame_body.size()))
        throw IoError("send failed");
}

nlohmann::json WireClient::read_response() {
    uint8_t header[4];
    if (!read_exact(fd_, header, 4)) throw IoError("connection closed");
    const uint32_t len = (uint32_t(header[0]) << 24) | (uint32_t(header[1]) << 16) |
                         (uint32_t(header[2]) << 8) | uint32_t(header[3]);
    if (len > kMaxFrameBytes) throw FormatError("oversize response frame");
    std::vector<uint8_t> body(len);
    if (!read_exact(fd_, body.data(), len)) throw IoError("connection closed mid-frame");
    return nlohmann::json::parse(body.begin(), body.end());
}

nlohmann::json WireClient::call(const std::string& op, nlohmann::json payload,
                                const std::string& request_id) {
    const nlohmann::json request = {{"v", kProtocolVersion},
                                    {"op", op},
                                    {"payload", std::move(payload)},
                                    {"request_id", request_id}};
    const std::string body = request.dump();
    send_raw(std::vector<uint8_t>(body.begin(), body.end()));
    return read_response();
}

}  // namespace modelmesh
