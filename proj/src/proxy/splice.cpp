#include "sdns/proxy/splice.hpp"

#include "sdns/core.hpp"

namespace sdns::proxy {

SpliceSession::SpliceSession(Sink to_origin, Sink to_client, Closer close_origin, Closer close_client)
    : to_origin_(std::move(to_origin)),
      to_client_(std::move(to_client)),
      close_origin_(std::move(close_origin)),
      close_client_(std::move(close_client)) {}

void SpliceSession::from_client(std::span<const std::uint8_t> bytes) {
    if (finished_ || bytes.empty()) return;
    stats_.client_to_origin += bytes.size();
    stats_.client_to_origin_digest = fnv1a64(bytes, stats_.client_to_origin_digest);
    to_origin_(bytes);
}

void SpliceSession::from_origin(std::span<const std::uint8_t> bytes) {
    if (finished_ || bytes.empty()) return;
    stats_.origin_to_client += bytes.size();
    stats_.origin_to_client_digest = fnv1a64(bytes, stats_.origin_to_client_digest);
    to_client_(bytes);
}

void SpliceSession::client_closed() {
    if (finished_) return;
    finished_ = true;
    close_origin_();
}

void SpliceSession::origin_closed() {
    if (finished_) return;
    finished_ = true;
    stats_.origin_closed_first = true;
    close_client_();
}

}  // namespace sdns::proxy
