#include "splitinfer/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

#include "splitinfer/bytes.hpp"

namespace splitinfer {

namespace {

constexpr char kFrameMagic[4] = {'S', 'P', 'L', '1'};

bool known_type(std::uint8_t t) {
    return t >= std::uint8_t(MsgType::Hello) && t <= std::uint8_t(MsgType::Error);
}

} // namespace

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    if (frame.payload.size() > kMaxPayload)
        throw FormatError("payload exceeds 16 MiB cap");
    ByteWriter w;
    w.ascii(kFrameMagic, 4);
    w.u8(std::uint8_t(frame.type));
    w.u64(frame.session);
    w.u32(std::uint32_t(frame.payload.size()));
    w.bytes(frame.payload.data(), frame.payload.size());
    w.u32(crc32(w.data()));
    return w.take();
}

Frame decode_frame(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kFrameHeaderSize + 4)
        throw TruncationError("frame shorter than header + CRC");
    if (std::memcmp(bytes.data(), kFrameMagic, 4) != 0)
        throw FormatError("bad frame magic, want \"SPL1\"");

    ByteReader r(bytes.data() + 4, bytes.size() - 4);
    const std::uint8_t type = r.u8("msg type");
    if (!known_type(type))
        throw ProtocolError("unknown msg_type " + std::to_string(type));
    const std::uint64_t session = r.u64("session");
    const std::uint32_t payload_len = r.u32("payload_len");
    if (payload_len > kMaxPayload)
        throw FormatError("payload_len exceeds 16 MiB cap");
    if (r.remaining() < std::size_t(payload_len) + 4)
        throw TruncationError("payload_len larger than buffer");

    Frame frame;
    frame.type = MsgType(type);
    frame.session = session;
    frame.payload.resize(payload_len);
    if (payload_len)
        r.bytes(frame.payload.data(), payload_len, "payload");
    const std::uint32_t stored_crc = r.u32("crc32");
    r.expect_end("frame");
    if (crc32(bytes.data(), bytes.size() - 4) != stored_crc)
        throw FormatError("frame CRC mismatch");
    return frame;
}

// ---- payload codecs -----------------------------------------------------

std::vector<std::uint8_t> encode_activations(const ActivationsPayload& p) {
    ByteWriter w;
    w.u16(p.cut_index);
    w.u32(std::uint32_t(p.values.size()));
    w.u64(p.mask_seed);
    w.bytes(p.model_fingerprint.data(), p.model_fingerprint.size());
    for (double v : p.values)
        w.f32(float(v));
    return w.take();
}

ActivationsPayload decode_activations(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    ActivationsPayload p;
    p.cut_index = r.u16("cut index");
    const std::uint32_t width = r.u32("width");
    p.mask_seed = r.u64("mask seed");
    r.bytes(p.model_fingerprint.data(), p.model_fingerprint.size(), "fingerprint");
    p.values.resize(width);
    for (double& v : p.values)
        v = double(r.f32("activation values"));
    r.expect_end("activations payload");
    return p;
}

std::vector<std::uint8_t> encode_prediction(const PredictionPayload& p) {
    ByteWriter w;
    w.u32(std::uint32_t(p.probabilities.size()));
    for (double v : p.probabilities)
        w.f32(float(v));
    return w.take();
}

PredictionPayload decode_prediction(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    PredictionPayload p;
    p.probabilities.resize(r.u32("class count"));
    for (double& v : p.probabilities)
        v = double(r.f32("probabilities"));
    r.expect_end("prediction payload");
    return p;
}

std::vector<std::uint8_t> encode_error(const ErrorPayload& p) {
    ByteWriter w;
    w.u16(std::uint16_t(p.code));
    w.u32(std::uint32_t(p.message.size()));
    w.ascii(p.message.data(), p.message.size());
    return w.take();
}

ErrorPayload decode_error(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    ErrorPayload p;
    p.code = WireError(r.u16("error code"));
    const std::uint32_t len = r.u32("message length");
    p.message.resize(len);
    if (len)
        r.bytes(reinterpret_cast<std::uint8_t*>(p.message.data()), len, "message");
    r.expect_end("error payload");
    return p;
}

std::vector<std::uint8_t> encode_grad_request(const GradRequestPayload& p) {
    if (p.activations.size() != p.labels.size())
        throw ProtocolError("grad request: activation/label count mismatch");
    ByteWriter w;
    w.u16(p.cut_index);
    const std::uint32_t width =
        p.activations.empty() ? 0 : std::uint32_t(p.activations.front().size());
    w.u32(width);
    w.u32(std::uint32_t(p.activations.size()));
    w.bytes(p.model_fingerprint.data(), p.model_fingerprint.size());
    for (std::size_t n = 0; n < p.activations.size(); ++n) {
        if (p.activations[n].size() != width)
            throw ProtocolError("grad request: ragged activation batch");
        w.u16(std::uint16_t(p.labels[n]));
        for (double v : p.activations[n])
            w.f32(float(v));
    }
    return w.take();
}

GradRequestPayload decode_grad_request(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    GradRequestPayload p;
    p.cut_index = r.u16("cut index");
    const std::uint32_t width = r.u32("width");
    const std::uint32_t count = r.u32("sample count");
    r.bytes(p.model_fingerprint.data(), p.model_fingerprint.size(), "fingerprint");
    for (std::uint32_t n = 0; n < count; ++n) {
        p.labels.push_back(int(r.u16("label")));
        Vector a(width);
        for (double& v : a)
            v = double(r.f32("activations"));
        p.activations.push_back(std::move(a));
    }
    r.expect_end("grad request payload");
    return p;
}

std::vector<std::uint8_t> encode_grad_response(const GradResponsePayload& p) {
    ByteWriter w;
    const std::uint32_t width =
        p.d_activations.empty() ? 0 : std::uint32_t(p.d_activations.front().size());
    w.u32(width);
    w.u32(std::uint32_t(p.d_activations.size()));
    w.f64(p.mean_loss);
    for (const Vector& g : p.d_activations) {
        if (g.size() != width)
            throw ProtocolError("grad response: ragged gradient batch");
        for (double v : g)
            w.f32(float(v));
    }
    return w.take();
}

GradResponsePayload decode_grad_response(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    GradResponsePayload p;
    const std::uint32_t width = r.u32("width");
    const std::uint32_t count = r.u32("gradient count");
    p.mean_loss = r.f64("mean loss");
    for (std::uint32_t n = 0; n < count; ++n) {
        Vector g(width);
        for (double& v : g)
            v = double(r.f32("gradients"));
        p.d_activations.push_back(std::move(g));
    }
    r.expect_end("grad response payload");
    return p;
}

Sha256Digest model_fingerprint(const MlpModel& model) {
    return sha256(serialize_model(model));
}

// ---- socket plumbing ------------------------------------------------------

namespace {

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
    while (len) {
        const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n <= 0)
            throw IoError("socket write failed");
        data += n;
        len -= std::size_t(n);
    }
}

// false on clean EOF at a frame boundary
bool read_exact(int fd, std::uint8_t* data, std::size_t len, bool eof_ok) {
    std::size_t got = 0;
    while (got < len) {
        const ssize_t n = ::recv(fd, data + got, len - got, 0);
        if (n == 0) {
            if (eof_ok && got == 0)
                return false;
            throw TruncationError("connection closed mid-frame");
        }
        if (n < 0)
            throw IoError("socket read failed");
        got += std::size_t(n);
    }
    return true;
}

void send_frame(int fd, const Frame& frame) {
    const auto bytes = encode_frame(frame);
    write_all(fd, bytes.data(), bytes.size());
}

// Reads one frame off the stream; routes the buffer through
// decode_frame so stream and buffer validation cannot diverge.
bool read_frame(int fd, Frame& out, bool eof_ok) {
    std::vector<std::uint8_t> buf(kFrameHeaderSize);
    if (!read_exact(fd, buf.data(), kFrameHeaderSize, eof_ok))
        return false;
    if (std::memcmp(buf.data(), kFrameMagic, 4) != 0)
        throw FormatError("bad frame magic, want \"SPL1\"");
    std::uint32_t payload_len;
    std::memcpy(&payload_len, buf.data() + 13, 4);
    if (payload_len > kMaxPayload)
        throw FormatError("payload_len exceeds 16 MiB cap");
    buf.resize(kFrameHeaderSize + payload_len + 4);
    read_exact(fd, buf.data() + kFrameHeaderSize, payload_len + 4, false);
    out = decode_frame(buf);
    return true;
}

int connect_to(const std::string& host, std::uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0)
        throw IoError("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw IoError("bad address '" + host + "'");
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw IoError("connect to " + host + ":" + std::to_string(port) + " refused");
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    // client calls are request/response; never hang forever on a reply
    timeval timeout{30, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &timeout, sizeof(timeout));
    return fd;
}

} // namespace

// ---- Server ---------------------------------------------------------------

Server::Server(MlpModel rear, std::uint16_t cut_index, ServeConfig config)
    : rear_(std::move(rear)),
      cut_index_(cut_index),
      config_(std::move(config)),
      fingerprint_(model_fingerprint(rear_)),
      grad_adam_(make_adam_state(rear_.layers)) {
    rear_.check_consistent();
}

Server::~Server() { stop(); }

void Server::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
        throw IoError("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(config_.port);
    if (::inet_pton(AF_INET, config_.bind_addr.c_str(), &addr.sin_addr) != 1)
        throw IoError("bad bind address '" + config_.bind_addr + "'");
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
        throw IoError("bind to port " + std::to_string(config_.port) + " failed");
    if (::listen(listen_fd_, 64) != 0)
        throw IoError("listen failed");

    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
    if (!running_.exchange(false)) {
        if (listen_fd_ >= 0) {
            ::close(listen_fd_);
            listen_fd_ = -1;
        }
        return;
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    {
        std::lock_guard lock(workers_mutex_);
        for (int fd : conn_fds_)
            ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable())
        accept_thread_.join();
    std::vector<std::thread> to_join;
    {
        std::lock_guard lock(workers_mutex_);
        to_join.swap(workers_);
    }
    for (std::thread& t : to_join)
        if (t.joinable())
            t.join();
}

void Server::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_)
                break;
            continue;
        }
        std::lock_guard lock(workers_mutex_);
        conn_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { handle_connection(fd); });
    }
}

void Server::handle_connection(int fd) {
    Frame frame;
    while (running_) {
        try {
            if (!read_frame(fd, frame, true))
                break; // clean EOF
        } catch (const std::exception& e) {
            // stream no longer framed; report and drop the connection
            try {
                Frame err;
                err.type = MsgType::Error;
                err.payload = encode_error({WireError::Malformed, e.what()});
                send_frame(fd, err);
            } catch (const std::exception&) {
            }
            break;
        }
        Frame reply;
        try {
            reply = handle_frame(frame);
        } catch (const std::exception& e) {
            reply = Frame{};
            reply.type = MsgType::Error;
            reply.session = frame.session;
            reply.payload = encode_error({WireError::Internal, e.what()});
        }
        try {
            send_frame(fd, reply);
        } catch (const std::exception&) {
            break;
        }
    }
    ::close(fd);
    std::lock_guard lock(workers_mutex_);
    std::erase(conn_fds_, fd);
}

Frame Server::handle_frame(const Frame& frame) {
    Frame reply;
    reply.session = frame.session;

    auto error_reply = [&](WireError code, const std::string& msg) {
        reply.type = MsgType::Error;
        reply.payload = encode_error({code, msg});
        return reply;
    };

    switch (frame.type) {
    case MsgType::Hello: {
        reply.type = MsgType::Hello;
        ByteWriter w;
        w.u16(1); // protocol version
        w.bytes(fingerprint_.data(), fingerprint_.size());
        reply.payload = w.take();
        return reply;
    }
    case MsgType::Activations: {
        ActivationsPayload p;
        try {
            p = decode_activations(frame.payload);
        } catch (const Error& e) {
            return error_reply(WireError::Malformed, e.what());
        }
        if (p.model_fingerprint != fingerprint_)
            return error_reply(WireError::FingerprintMismatch,
                               "client fingerprint does not match served model");
        if (p.values.size() != rear_.input_dim)
            return error_reply(WireError::WidthMismatch,
                               "activation width " + std::to_string(p.values.size()) +
                                   " != rear input dim " + std::to_string(rear_.input_dim));
        Vector probs;
        {
            std::shared_lock lock(model_mutex_);
            probs = server_forward(rear_, p.values);
        }
        reply.type = MsgType::Prediction;
        reply.payload = encode_prediction({std::move(probs)});
        return reply;
    }
    case MsgType::GradRequest: {
        GradRequestPayload p;
        try {
            p = decode_grad_request(frame.payload);
        } catch (const Error& e) {
            return error_reply(WireError::Malformed, e.what());
        }
        if (p.model_fingerprint != fingerprint_)
            return error_reply(WireError::FingerprintMismatch,
                               "client fingerprint does not match served model");
        if (p.activations.empty() || p.activations.front().size() != rear_.input_dim)
            return error_reply(WireError::WidthMismatch, "bad gradient batch width");
        for (int label : p.labels)
            if (label < 0 || std::size_t(label) >= rear_.output_dim())
                return error_reply(WireError::Malformed,
                                   "label " + std::to_string(label) + " outside the " +
                                       std::to_string(rear_.output_dim()) + " classes");

        GradResponsePayload resp;
        {
            std::unique_lock lock(model_mutex_);
            std::vector<LayerGrads> grads = zero_grads(rear_.layers);
            double loss = 0.0;
            for (std::size_t n = 0; n < p.activations.size(); ++n) {
                auto trace = forward_layers(rear_.layers, p.activations[n]);
                const Vector probs = softmax(trace.back().act);
                loss += cross_entropy(probs, p.labels[n]);
                resp.d_activations.push_back(backward_layers(
                    rear_.layers, trace, loss_gradient(probs, p.labels[n]), grads));
            }
            resp.mean_loss = loss / double(p.activations.size());
            scale_grads(grads, 1.0 / double(p.activations.size()));
            adam_update(rear_.layers, grads, grad_adam_, config_.grad_train);
        }
        reply.type = MsgType::GradResponse;
        reply.payload = encode_grad_response(resp);
        return reply;
    }
    case MsgType::Prediction:
    case MsgType::GradResponse:
        return error_reply(WireError::Unsupported, "server-to-client message type");
    case MsgType::Error:
        return error_reply(WireError::Unsupported, "unexpected ERROR frame");
    }
    return error_reply(WireError::Malformed, "unreachable");
}

// ---- Connection / client --------------------------------------------------

Connection::Connection(const std::string& host, std::uint16_t port)
    : fd_(connect_to(host, port)),
      session_(mix64(std::uint64_t(
          std::chrono::steady_clock::now().time_since_epoch().count()))) {}

Connection::~Connection() {
    if (fd_ >= 0)
        ::close(fd_);
}

void Connection::send(const Frame& frame) { send_frame(fd_, frame); }

Frame Connection::receive() {
    Frame frame;
    if (!read_frame(fd_, frame, false))
        throw TruncationError("server closed the connection");
    return frame;
}

void Connection::send_raw(const std::vector<std::uint8_t>& bytes) {
    write_all(fd_, bytes.data(), bytes.size());
}

Vector query(const std::string& host, std::uint16_t port, const MlpModel& front,
             const Vector& x, const SplitPlan& plan, const Sha256Digest& rear_fingerprint,
             std::uint64_t query_seed) {
    const ClientResult local = client_forward(front, x, plan, query_seed);

    ActivationsPayload payload;
    payload.cut_index = std::uint16_t(plan.cut);
    payload.values = local.activations;
    payload.mask_seed = local.mask.seed;
    payload.model_fingerprint = rear_fingerprint;

    Connection conn(host, port);
    Frame frame;
    frame.type = MsgType::Activations;
    frame.session = conn.session();
    frame.payload = encode_activations(payload);
    conn.send(frame);

    const Frame reply = conn.receive();
    if (reply.type == MsgType::Error) {
        const ErrorPayload err = decode_error(reply.payload);
        throw ProtocolError("server error " + std::to_string(std::uint16_t(err.code)) + ": " +
                            err.message);
    }
    if (reply.type != MsgType::Prediction)
        throw ProtocolError("expected PREDICTION frame");
    return decode_prediction(reply.payload).probabilities;
}

double remote_backprop_step(Connection& conn, SplitClient& client,
                            std::span<const Vector> inputs, std::span<const int> labels,
                            std::uint16_t cut_index, const Sha256Digest& rear_fingerprint) {
    auto fwd = client.forward_batch(inputs);

    GradRequestPayload req;
    req.cut_index = cut_index;
    req.model_fingerprint = rear_fingerprint;
    req.activations = fwd.activations;
    req.labels.assign(labels.begin(), labels.end());

    Frame frame;
    frame.type = MsgType::GradRequest;
    frame.session = conn.session();
    frame.payload = encode_grad_request(req);
    conn.send(frame);

    const Frame reply = conn.receive();
    if (reply.type == MsgType::Error) {
        const ErrorPayload err = decode_error(reply.payload);
        throw ProtocolError("server error " + std::to_string(std::uint16_t(err.code)) + ": " +
                            err.message);
    }
    if (reply.type != MsgType::GradResponse)
        throw ProtocolError("expected GRAD_RESPONSE frame");
    const GradResponsePayload resp = decode_grad_response(reply.payload);
    client.backward_batch(fwd.batch_id, resp.d_activations);
    return resp.mean_loss;
}

} // namespace splitinfer
