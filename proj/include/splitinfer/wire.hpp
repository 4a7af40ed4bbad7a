#ifndef SPLITINFER_WIRE_HPP
#define SPLITINFER_WIRE_HPP

#include <atomic>
#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "splitinfer/hash.hpp"
#include "splitinfer/network.hpp"
#include "splitinfer/splitexec.hpp"

namespace splitinfer {

// Frame layout (byte-exact, little-endian; see PROTOCOL.md):
//   magic "SPL1" | msg_type u8 | session u64 | payload_len u32 |
//   payload | crc32 u32 over everything before it
constexpr std::size_t kMaxPayload = 16u << 20; // 16 MiB
constexpr std::size_t kFrameHeaderSize = 4 + 1 + 8 + 4;

enum class MsgType : std::uint8_t {
    Hello = 1,
    Activations = 2,
    Prediction = 3,
    GradRequest = 4,
    GradResponse = 5,
    Error = 6,
};

struct Frame {
    MsgType type = MsgType::Hello;
    std::uint64_t session = 0;
    std::vector<std::uint8_t> payload;

    bool operator==(const Frame&) const = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);
// Rejections: bad magic / CRC -> FormatError, oversize payload ->
// FormatError, unknown msg_type -> ProtocolError, short buffer ->
// TruncationError.
Frame decode_frame(const std::vector<std::uint8_t>& bytes);

// ---- payloads ---------------------------------------------------------

// Boundary activations. Masked slots arrive already zeroed; the mask
// positions themselves are never transmitted, only the seed's
// informational echo.
struct ActivationsPayload {
    std::uint16_t cut_index = 1;
    Vector values; // f32 on the wire
    std::uint64_t mask_seed = 0;
    Sha256Digest model_fingerprint{};
};

struct PredictionPayload {
    Vector probabilities; // f32 on the wire
};

enum class WireError : std::uint16_t {
    FingerprintMismatch = 1,
    WidthMismatch = 2,
    Malformed = 3,
    Unsupported = 4,
    Internal = 5,
};

struct ErrorPayload {
    WireError code = WireError::Internal;
    std::string message;
};

struct GradRequestPayload {
    std::uint16_t cut_index = 1;
    Sha256Digest model_fingerprint{};
    std::vector<Vector> activations;
    std::vector<int> labels;
};

struct GradResponsePayload {
    std::vector<Vector> d_activations;
    double mean_loss = 0.0;
};

std::vector<std::uint8_t> encode_activations(const ActivationsPayload& p);
ActivationsPayload decode_activations(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_prediction(const PredictionPayload& p);
PredictionPayload decode_prediction(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_error(const ErrorPayload& p);
ErrorPayload decode_error(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_grad_request(const GradRequestPayload& p);
GradRequestPayload decode_grad_request(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_grad_response(const GradResponsePayload& p);
GradResponsePayload decode_grad_response(const std::vector<std::uint8_t>& bytes);

// SHA-256 of the serialized model bytes; the rear half's digest is the
// fingerprint clients must present.
Sha256Digest model_fingerprint(const MlpModel& model);

// ---- server -------------------------------------------------------------

struct ServeConfig {
    std::string bind_addr = "127.0.0.1";
    std::uint16_t port = 0; // 0 = ephemeral
    TrainConfig grad_train; // optimizer settings for GRAD_REQUEST handling
};

// Serves the rear half over TCP. Activation payloads are answered with
// predictions and never persisted beyond the request. GRAD_REQUEST
// frames run one rear-side optimizer step each, serialized across
// sessions.
class Server {
public:
    Server(MlpModel rear, std::uint16_t cut_index, ServeConfig config);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    void start();
    void stop();
    std::uint16_t port() const { return port_; }
    const Sha256Digest& fingerprint() const { return fingerprint_; }
    const MlpModel& rear() const { return rear_; }

private:
    void accept_loop();
    void handle_connection(int fd);
    Frame handle_frame(const Frame& frame);

    MlpModel rear_;
    std::uint16_t cut_index_;
    ServeConfig config_;
    Sha256Digest fingerprint_;
    AdamState grad_adam_;
    mutable std::shared_mutex model_mutex_; // predictions shared, grads exclusive

    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::thread accept_thread_;
    std::vector<std::thread> workers_;
    std::vector<int> conn_fds_;
    std::mutex workers_mutex_;
    std::atomic<bool> running_{false};
};

// ---- client -------------------------------------------------------------

// Blocking TCP connection speaking the frame protocol.
class Connection {
public:
    Connection(const std::string& host, std::uint16_t port);
    ~Connection();
    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;

    void send(const Frame& frame);
    Frame receive();
    void send_raw(const std::vector<std::uint8_t>& bytes); // fuzzing hook
    std::uint64_t session() const { return session_; }

private:
    int fd_ = -1;
    std::uint64_t session_;
};

// Runs the client-side layers locally and queries the server with the
// masked boundary activations; x itself is never serialized into any
// frame. An ERROR frame surfaces as ProtocolError.
Vector query(const std::string& host, std::uint16_t port, const MlpModel& front,
             const Vector& x, const SplitPlan& plan, const Sha256Digest& rear_fingerprint,
             std::uint64_t query_seed = 0);

// One split-training step against a remote server (f32 boundary).
double remote_backprop_step(Connection& conn, SplitClient& client,
                            std::span<const Vector> inputs, std::span<const int> labels,
                            std::uint16_t cut_index, const Sha256Digest& rear_fingerprint);

} // namespace splitinfer

#endif
