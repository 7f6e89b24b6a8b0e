#pragma once

#include <atomic>
#include <cstddef>
#include <string>
#include <string_view>

#include "gistgraph/error.hpp"

namespace gistgraph {

/// One chat-style exchange: a system prompt plus a single user message.
struct ChatRequest {
  std::string system;
  std::string user;
};

/// Text-in/text-out boundary around every LLM-dependent step.
///
/// Implementations must be safe to call concurrently from several threads.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  /// Returns the assistant text. Throws ProviderError on transport failure.
  virtual std::string complete(const ChatRequest& request) const = 0;
};

namespace net {

namespace detail {
inline std::atomic<bool>& forbidden() {
  static std::atomic<bool> flag{false};
  return flag;
}
inline std::atomic<std::size_t>& attempts() {
  static std::atomic<std::size_t> n{0};
  return n;
}
}  // namespace detail

/// Called by every network-backed provider before it opens a connection.
inline void check_access(std::string_view target) {
  detail::attempts().fetch_add(1);
  if (detail::forbidden().load())
    throw NetworkForbidden("network access to '" + std::string(target) + "' attempted while the network guard is on");
}

inline std::size_t attempt_count() { return detail::attempts().load(); }

/// While alive, any provider network access throws NetworkForbidden.
class ScopedNetworkBan {
 public:
  ScopedNetworkBan() : previous_(detail::forbidden().exchange(true)) {}
  ~ScopedNetworkBan() { detail::forbidden().store(previous_); }
  ScopedNetworkBan(const ScopedNetworkBan&) = delete;
  ScopedNetworkBan& operator=(const ScopedNetworkBan&) = delete;

 private:
  bool previous_;
};

}  // namespace net

}  // namespace gistgraph
