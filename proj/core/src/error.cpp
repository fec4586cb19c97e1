#include "elicit/error.hpp"

namespace elicit {

ReplayMissError::ReplayMissError(std::string request_hash)
    : BackendError("replay transcript has no entry for request " + request_hash),
      request_hash_(std::move(request_hash)) {}

void ensure(bool condition, const std::string& message) {
  if (!condition) throw InvariantError(message);
}

}  // namespace elicit
