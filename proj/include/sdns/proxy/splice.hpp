#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace sdns::proxy {

struct TransferStats {
    std::uint64_t client_to_origin = 0;
    std::uint64_t origin_to_client = 0;
    /// Running FNV-1a digests of the relayed bytes, one per direction.
    std::uint64_t client_to_origin_digest = 0xcbf29ce484222325ull;
    std::uint64_t origin_to_client_digest = 0xcbf29ce484222325ull;
    bool origin_closed_first = false;
};

/// Event-driven byte relay between a client and an origin connection. The
/// owner feeds it whatever arrives on either side and supplies the sinks that
/// write to (and close) the opposite side. Bytes are never inspected or changed.
class SpliceSession {
public:
    using Sink = std::function<void(std::span<const std::uint8_t>)>;
    using Closer = std::function<void()>;

    SpliceSession(Sink to_origin, Sink to_client, Closer close_origin, Closer close_client);

    void from_client(std::span<const std::uint8_t> bytes);
    void from_origin(std::span<const std::uint8_t> bytes);
    /// A close on either side closes the other; later data is discarded.
    void client_closed();
    void origin_closed();

    bool finished() const { return finished_; }
    const TransferStats& stats() const { return stats_; }

private:
    Sink to_origin_;
    Sink to_client_;
    Closer close_origin_;
    Closer close_client_;
    TransferStats stats_;
    bool finished_ = false;
};

}  // namespace sdns::proxy
