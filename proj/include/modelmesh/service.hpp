#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "modelmesh/vault.hpp"

namespace modelmesh {

inline constexpr uint32_t kProtocolVersion = 1;
inline constexpr uint32_t kMaxFrameBytes = 64u << 20;

// Frame = 32-bit big-endian byte count, then that many bytes of JSON.
// Request: {v, op, payload, request_id}. Response: {v, request_id, ok,
// result | error{code, message}}.
class VaultService {
  public:
    explicit VaultService(Vault& vault) : vault_(vault) {}
    ~VaultService();

    VaultService(const VaultService&) = delete;
    VaultService& operator=(const VaultService&) = delete;

    // Binds and spawns the accept loop; returns the bound port (useful with
    // port 0). Call stop() before destruction.
    uint16_t start(const std::string& host, uint16_t port);
    void stop();

    // Pure dispatch shared by the socket loop and in-process callers; never
    // throws, errors become error responses.
    nlohmann::json handle(const nlohmann::json& request) const;

  private:
    void accept_loop();
    void serve_connection(int fd);

    Vault& vault_;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::vector<std::thread> conn_threads_;
};

// Blocking single-connection client for the frame protocol.
class WireClient {
  public:
    WireClient(const std::string& host, uint16_t port);
    ~WireClient();

    WireClient(const WireClient&) = delete;
    WireClient& operator=(const WireClient&) = delete;

    nlohmann::json call(const std::string& op, nlohmann::json payload,
                        const std::string& request_id);

    // Raw frame exchange for protocol tests.
    void send_raw(const std::vector<uint8_t>& frame_body);
    nlohmann::json read_response();

  private:
    int fd_ = -1;
};

}  // namespace modelmesh
