#ifndef SPARSEADV_WIRE_HPP
#define SPARSEADV_WIRE_HPP

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>

#include "sparseadv/oracle.hpp"

namespace sparseadv {

// Line-delimited JSON oracle protocol. One document per line, responses in
// request order on a connection:
//   request:  {"id": u64, "shape": [c, h, w], "pixels": [f, ...]}
//   response: {"id": u64, "label": int, "scores": [f, ...]?}
// Pixels are raster order, channel-major, floats in [0,1].

std::string encode_request(std::uint64_t id, const ImageTensor& img);

// Parses one response line and checks it against the request id. Malformed
// documents and id mismatches throw ProtocolError.
OracleVerdict decode_response(const std::string& line,
                              std::uint64_t expected_id, int num_classes);

struct WireConfig {
  // "cmd:<shell command>" spawns a child process and speaks over its stdio;
  // "tcp:<host>:<port>" connects a socket.
  std::string endpoint;
  int classes = 10;
  std::chrono::milliseconds timeout{10000};
};

class WireTransport;

// Client for a remote black-box model. Requests on one connection are
// serialized; the transport never reorders.
class ExternalOracle final : public Oracle {
 public:
  explicit ExternalOracle(WireConfig config);
  ~ExternalOracle() override;

  ExternalOracle(const ExternalOracle&) = delete;
  ExternalOracle& operator=(const ExternalOracle&) = delete;

  int num_classes() const override { return config_.classes; }

 protected:
  OracleVerdict predict(const ImageTensor& img) const override;

 private:
  WireConfig config_;
  std::unique_ptr<WireTransport> transport_;
  mutable std::mutex mu_;
  mutable std::uint64_t next_id_ = 1;
};

// Deterministic test double served over the same protocol:
// label = round(first_pixel * (classes - 1)).
struct StubOptions {
  int classes = 10;
  // When > 0, the Nth response (1-based) is deliberately damaged.
  std::uint64_t corrupt_at = 0;
  std::string corrupt_mode = "badid";  // badid | badjson | drop
};

int run_echo_stub(std::istream& in, std::ostream& out,
                  const StubOptions& options);

}  // namespace sparseadv

#endif  // SPARSEADV_WIRE_HPP
