#include "mpcbandit/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>
#include <tuple>

namespace mpcbandit {

u64 label_hash(const std::string& label) {
    u64 h = 0xcbf29ce484222325ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

void RoundLedger::write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw TransportError("cannot write ledger csv: " + path);
    std::fprintf(f, "operation,rounds,bytes\n");
    for (const auto& [label, st] : stats_)
        std::fprintf(f, "%s,%llu,%llu\n", label.c_str(), (unsigned long long)st.rounds,
                     (unsigned long long)st.bytes);
    std::fprintf(f, "total,%llu,%llu\n", (unsigned long long)total_.rounds,
                 (unsigned long long)total_.bytes);
    std::fclose(f);
}

std::vector<std::vector<u64>> Endpoint::exchange(const std::string& label,
                                                 const std::vector<std::vector<u64>>& payloads) {
    if (!is_compute()) throw TransportError("exchange called from a non-compute endpoint");
    if ((int)payloads.size() != parties_)
        throw TransportError("exchange payload count does not match party count");
    u64 h = label_hash(label);
    u64 sent = 0;
    for (int p = 0; p < parties_; ++p) {
        if (p == id_) continue;
        ch_->send_frame(p, h, send_seq_[p]++, payloads[p]);
        sent += 8 * payloads[p].size();
        if (record_) transcript_.push_back({p, true, label, payloads[p]});
    }
    std::vector<std::vector<u64>> got(parties_);
    for (int p = 0; p < parties_; ++p) {
        if (p == id_) continue;
        got[p] = ch_->recv_frame(p, h, recv_seq_[p]++, label);
        if (record_) transcript_.push_back({p, false, label, got[p]});
    }
    ledger_.add_round(label);
    ledger_.add_bytes(label, sent);
    return got;
}

std::vector<std::vector<u64>> Endpoint::broadcast(const std::string& label,
                                                  const std::vector<u64>& payload) {
    std::vector<std::vector<u64>> per(parties_);
    for (int p = 0; p < parties_; ++p)
        if (p != id_) per[p] = payload;
    return exchange(label, per);
}

void Endpoint::send(const std::string& label, int to, const std::vector<u64>& payload) {
    ch_->send_frame(to, label_hash(label), send_seq_[to]++, payload);
    ledger_.add_bytes(label, 8 * payload.size());
    if (record_) transcript_.push_back({to, true, label, payload});
}

std::vector<u64> Endpoint::recv(const std::string& label, int from) {
    auto payload = ch_->recv_frame(from, label_hash(label), recv_seq_[from]++, label);
    if (record_) transcript_.push_back({from, false, label, payload});
    return payload;
}

// ---------------------------------------------------------------------------
// In-process backend

struct LocalFabric::Shared {
    struct Queue {
        std::mutex m;
        std::condition_variable cv;
        std::deque<std::tuple<u64, u64, std::vector<u64>>> q; // label hash, seq, payload
    };
    int total = 0;
    int timeout_ms = 30000;
    std::vector<Queue> queues; // indexed from * total + to

    Shared(int total_, int timeout_ms_)
        : total(total_), timeout_ms(timeout_ms_), queues(std::size_t(total_) * total_) {}
};

namespace {

class LocalChannel : public Channel {
  public:
    LocalChannel(std::shared_ptr<LocalFabric::Shared> sh, int me) : sh_(std::move(sh)), me_(me) {}

    void send_frame(int to, u64 label, u64 seq, const std::vector<u64>& payload) override {
        auto& q = sh_->queues.at(std::size_t(me_) * sh_->total + to);
        {
            std::lock_guard<std::mutex> lk(q.m);
            q.q.emplace_back(label, seq, payload);
        }
        q.cv.notify_one();
    }

    std::vector<u64> recv_frame(int from, u64 label, u64 seq, const std::string& label_text) override {
        auto& q = sh_->queues.at(std::size_t(from) * sh_->total + me_);
        std::unique_lock<std::mutex> lk(q.m);
        if (!q.cv.wait_for(lk, std::chrono::milliseconds(sh_->timeout_ms),
                           [&] { return !q.q.empty(); }))
            throw TransportError("timeout waiting for '" + label_text + "' from endpoint " +
                                 std::to_string(from));
        auto [h, s, payload] = std::move(q.q.front());
        q.q.pop_front();
        if (h != label || s != seq)
            throw TransportError("protocol desync at endpoint " + std::to_string(me_) +
                                 " receiving '" + label_text + "' from endpoint " +
                                 std::to_string(from));
        return payload;
    }

  private:
    std::shared_ptr<LocalFabric::Shared> sh_;
    int me_;
};

} // namespace

LocalFabric::LocalFabric(int parties, int timeout_ms)
    : parties_(parties), shared_(std::make_shared<Shared>(parties + 2, timeout_ms)) {}

std::shared_ptr<Endpoint> LocalFabric::endpoint(int id) {
    if (id < 0 || id >= parties_ + 2) throw TransportError("endpoint id out of range");
    return std::make_shared<Endpoint>(id, parties_, std::make_shared<LocalChannel>(shared_, id));
}

// ---------------------------------------------------------------------------
// TCP backend

namespace {

struct Conn {
    int fd = -1;
    std::mutex wm;
    std::condition_variable wcv;
    std::deque<std::vector<std::uint8_t>> wq;
    bool closing = false;
    std::thread writer;

    ~Conn() { close_now(); }

    void start_writer() {
        writer = std::thread([this] {
            for (;;) {
                std::vector<std::uint8_t> buf;
                {
                    std::unique_lock<std::mutex> lk(wm);
                    wcv.wait(lk, [&] { return closing || !wq.empty(); });
                    if (wq.empty()) return;
                    buf = std::move(wq.front());
                    wq.pop_front();
                }
                std::size_t off = 0;
                while (off < buf.size()) {
                    ssize_t n = ::send(fd, buf.data() + off, buf.size() - off, MSG_NOSIGNAL);
                    if (n <= 0) return;
                    off += std::size_t(n);
                }
            }
        });
    }

    void enqueue(std::vector<std::uint8_t> buf) {
        {
            std::lock_guard<std::mutex> lk(wm);
            wq.push_back(std::move(buf));
        }
        wcv.notify_one();
    }

    void close_now() {
        {
            std::lock_guard<std::mutex> lk(wm);
            closing = true;
        }
        wcv.notify_one();
        if (writer.joinable()) writer.join();
        if (fd >= 0) {
            ::close(fd);
            fd = -1;
        }
    }
};

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(std::uint8_t(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& b, u64 v) {
    for (int i = 0; i < 8; ++i) b.push_back(std::uint8_t(v >> (8 * i)));
}

bool read_exact(int fd, void* out, std::size_t n, int timeout_ms) {
    auto* p = static_cast<std::uint8_t*>(out);
    std::size_t off = 0;
    while (off < n) {
        struct pollfd pf{fd, POLLIN, 0};
        int pr = ::poll(&pf, 1, timeout_ms);
        if (pr <= 0) return false;
        ssize_t r = ::recv(fd, p + off, n - off, 0);
        if (r <= 0) return false;
        off += std::size_t(r);
    }
    return true;
}

} // namespace

struct TcpFabric::Impl : Channel {
    int total = 0;
    int me = -1;
    u64 session = 1;
    int timeout_ms = 30000;
    int listen_fd = -1;
    std::vector<std::unique_ptr<Conn>> conns; // by peer id

    ~Impl() override {
        for (auto& c : conns)
            if (c) c->close_now();
        if (listen_fd >= 0) ::close(listen_fd);
    }

    void send_frame(int to, u64 label, u64 seq, const std::vector<u64>& payload) override {
        Conn* c = conns.at(to).get();
        if (!c || c->fd < 0) throw TransportError("no connection to endpoint " + std::to_string(to));
        std::vector<std::uint8_t> buf;
        buf.reserve(28 + payload.size() * 8);
        put_u32(buf, std::uint32_t(payload.size() * 8));
        put_u64(buf, session);
        put_u64(buf, seq);
        put_u64(buf, label);
        for (u64 w : payload) put_u64(buf, w);
        c->enqueue(std::move(buf));
    }

    std::vector<u64> recv_frame(int from, u64 label, u64 seq, const std::string& label_text) override {
        Conn* c = conns.at(from).get();
        if (!c || c->fd < 0) throw TransportError("no connection to endpoint " + std::to_string(from));
        std::uint8_t hdr[28];
        if (!read_exact(c->fd, hdr, sizeof hdr, timeout_ms))
            throw TransportError("timeout waiting for '" + label_text + "' from endpoint " +
                                 std::to_string(from));
        std::uint32_t len;
        u64 ses, s, h;
        std::memcpy(&len, hdr, 4);
        std::memcpy(&ses, hdr + 4, 8);
        std::memcpy(&s, hdr + 12, 8);
        std::memcpy(&h, hdr + 20, 8);
        if (len % 8 != 0) throw TransportError("frame payload not word-aligned");
        std::vector<u64> payload(len / 8);
        if (len && !read_exact(c->fd, payload.data(), len, timeout_ms))
            throw TransportError("peer " + std::to_string(from) + " disconnected mid-frame");
        if (ses != session || h != label || s != seq)
            throw TransportError("protocol desync at endpoint " + std::to_string(me) +
                                 " receiving '" + label_text + "' from endpoint " +
                                 std::to_string(from));
        return payload;
    }
};

namespace {

int make_listener(int port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket() failed");
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(std::uint16_t(port));
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        throw TransportError("bind() failed on port " + std::to_string(port));
    }
    if (::listen(fd, 16) != 0) {
        ::close(fd);
        throw TransportError("listen() failed on port " + std::to_string(port));
    }
    return fd;
}

int dial(const std::string& host, int port, int timeout_ms) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw TransportError("socket() failed");
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(std::uint16_t(port));
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            ::close(fd);
            throw TransportError("bad peer address: " + host);
        }
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return fd;
        }
        ::close(fd);
        if (std::chrono::steady_clock::now() >= deadline)
            throw TransportError("cannot reach " + host + ":" + std::to_string(port));
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

} // namespace

TcpFabric::TcpFabric(int parties, int my_id, std::vector<TcpPeer> peers, u64 session_id,
                     int timeout_ms)
    : parties_(parties), my_id_(my_id), impl_(std::make_shared<Impl>()) {
    int total = parties + 2;
    if ((int)peers.size() != total)
        throw TransportError("need one host:port per endpoint (compute parties + 2 roles)");
    impl_->total = total;
    impl_->me = my_id;
    impl_->session = session_id;
    impl_->timeout_ms = timeout_ms;
    impl_->conns.resize(total);

    impl_->listen_fd = make_listener(peers[my_id].port);

    // Dial lower ids, announcing who we are; accept higher ids.
    for (int j = 0; j < my_id; ++j) {
        auto c = std::make_unique<Conn>();
        c->fd = dial(peers[j].host, peers[j].port, timeout_ms);
        std::uint32_t hello = std::uint32_t(my_id);
        if (::send(c->fd, &hello, sizeof hello, MSG_NOSIGNAL) != sizeof hello)
            throw TransportError("hello send failed");
        c->start_writer();
        impl_->conns[j] = std::move(c);
    }
    for (int j = my_id + 1; j < total; ++j) {
        struct pollfd pf{impl_->listen_fd, POLLIN, 0};
        if (::poll(&pf, 1, timeout_ms) <= 0)
            throw TransportError("timeout waiting for higher-id endpoints to dial in");
        int fd = ::accept(impl_->listen_fd, nullptr, nullptr);
        if (fd < 0) throw TransportError("accept() failed");
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::uint32_t hello = 0;
        if (!read_exact(fd, &hello, sizeof hello, timeout_ms)) {
            ::close(fd);
            throw TransportError("hello read failed");
        }
        if ((int)hello <= my_id || (int)hello >= total) {
            ::close(fd);
            throw TransportError("unexpected peer id in hello: " + std::to_string(hello));
        }
        auto c = std::make_unique<Conn>();
        c->fd = fd;
        c->start_writer();
        if (impl_->conns[hello]) throw TransportError("duplicate connection from peer");
        impl_->conns[hello] = std::move(c);
    }
}

TcpFabric::~TcpFabric() = default;

std::shared_ptr<Endpoint> TcpFabric::endpoint() {
    return std::make_shared<Endpoint>(my_id_, parties_, impl_);
}

} // namespace mpcbandit
