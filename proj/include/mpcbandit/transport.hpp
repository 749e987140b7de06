// Message plane for the party runtime: |P| compute parties plus two outside
// roles (arm puller, reward receiver) exchange length-prefixed frames over
// in-process queues or TCP. Every frame carries a label hash and sequence
// number so protocol desync is detected instead of silently misparsed.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpcbandit/ring.hpp"

namespace mpcbandit {

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Stable 64-bit FNV-1a of the operation label, used in frame headers.
u64 label_hash(const std::string& label);

struct RoundStat {
    u64 rounds = 0;
    u64 bytes = 0;
};

// Per-operation communication accounting. A round is one synchronous barrier
// where every communicating pair moves one message batch; bytes count payload
// octets sent by this endpoint (framing overhead excluded so in-process and
// TCP runs agree).
class RoundLedger {
  public:
    void add_round(const std::string& label) {
        ++stats_[label].rounds;
        ++total_.rounds;
    }
    void add_bytes(const std::string& label, u64 n) {
        stats_[label].bytes += n;
        total_.bytes += n;
    }
    u64 rounds(const std::string& label) const {
        auto it = stats_.find(label);
        return it == stats_.end() ? 0 : it->second.rounds;
    }
    u64 bytes(const std::string& label) const {
        auto it = stats_.find(label);
        return it == stats_.end() ? 0 : it->second.bytes;
    }
    u64 total_rounds() const { return total_.rounds; }
    u64 total_bytes() const { return total_.bytes; }
    const std::map<std::string, RoundStat>& stats() const { return stats_; }
    void write_csv(const std::string& path) const;

  private:
    std::map<std::string, RoundStat> stats_;
    RoundStat total_;
};

struct TranscriptFrame {
    int peer = 0;
    bool outgoing = false;
    std::string label;
    std::vector<u64> payload;
};

// One endpoint's raw view of the message plane. Implementations deliver
// frames between endpoint ids; validation of label/sequence happens here so
// both backends fail identically on desync.
class Channel {
  public:
    virtual ~Channel() = default;
    virtual void send_frame(int to, u64 label, u64 seq, const std::vector<u64>& payload) = 0;
    // Blocks until the next frame from `from` arrives, then checks the header
    // against the expected label and sequence.
    virtual std::vector<u64> recv_frame(int from, u64 label, u64 seq, const std::string& label_text) = 0;
};

// A party's handle on the fabric: sequencing, ledger, optional transcript.
// Methods are called from that party's own execution context only.
class Endpoint {
  public:
    Endpoint(int id, int parties, std::shared_ptr<Channel> ch)
        : id_(id), parties_(parties), ch_(std::move(ch)),
          send_seq_(parties + 2, 0), recv_seq_(parties + 2, 0) {}

    int id() const { return id_; }
    int parties() const { return parties_; }
    bool is_compute() const { return id_ < parties_; }
    int arm_puller() const { return parties_; }
    int reward_receiver() const { return parties_ + 1; }

    // All-to-all among compute parties: payloads[p] goes to party p (own slot
    // ignored). Returns what each peer sent (own slot empty). One round.
    std::vector<std::vector<u64>> exchange(const std::string& label,
                                           const std::vector<std::vector<u64>>& payloads);
    // Same payload to every other compute party.
    std::vector<std::vector<u64>> broadcast(const std::string& label, const std::vector<u64>& payload);

    // Directed frame; counts bytes but not rounds (callers that use directed
    // sends as a protocol round account for the round themselves).
    void send(const std::string& label, int to, const std::vector<u64>& payload);
    std::vector<u64> recv(const std::string& label, int from);

    RoundLedger& ledger() { return ledger_; }
    const RoundLedger& ledger() const { return ledger_; }

    void record_transcript(bool on) { record_ = on; }
    const std::vector<TranscriptFrame>& transcript() const { return transcript_; }

  private:
    int id_;
    int parties_;
    std::shared_ptr<Channel> ch_;
    std::vector<u64> send_seq_, recv_seq_;
    RoundLedger ledger_;
    bool record_ = false;
    std::vector<TranscriptFrame> transcript_;
};

// In-process fabric: one shared set of locked queues, endpoints handed to
// party threads. parties + 2 endpoint ids exist; ids parties and parties+1
// are the arm puller and reward receiver.
class LocalFabric {
  public:
    struct Shared; // channel state, defined with the implementation

    explicit LocalFabric(int parties, int timeout_ms = 30000);
    std::shared_ptr<Endpoint> endpoint(int id);
    int parties() const { return parties_; }

  private:
    int parties_;
    std::shared_ptr<Shared> shared_;
};

struct TcpPeer {
    std::string host;
    int port = 0;
};

// TCP fabric for separate-process runs: endpoint i listens on peers[i] and
// dials every lower id. Frames: u32 payload bytes, u64 session, u64 seq,
// u64 label hash, payload. One fabric per process.
class TcpFabric {
  public:
    TcpFabric(int parties, int my_id, std::vector<TcpPeer> peers, u64 session_id = 1,
              int timeout_ms = 30000);
    ~TcpFabric();
    std::shared_ptr<Endpoint> endpoint();

  private:
    struct Impl;
    int parties_;
    int my_id_;
    std::shared_ptr<Impl> impl_;
};

} // namespace mpcbandit
